// SPDX-License-Identifier: Apache-2.0
//
// Command-line front end: trace generation, consistency checks, plan
// synthesis, plan execution and throughput measurement.
#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>
#include <sstream>
#include <string>
#include <vector>

#include "dgs/apps.hpp"
#include "dgs/optimizer.hpp"
#include "dgs/trace.hpp"

namespace {

using namespace dgs;

enum Exit { kOk = 0, kValidation = 1, kProperty = 2, kDeadlock = 3 };

int exit_code(ErrorCode code) {
  switch (code) {
    case ErrorCode::Deadlock:
      return kDeadlock;
    case ErrorCode::ProtocolViolation:
    case ErrorCode::StaleMessage:
      return kProperty;
    default:
      return kValidation;
  }
}

void report_error(std::string_view code, const std::string& message) {
  std::cerr << nlohmann::json{{"error", code}, {"message", message}}.dump() << '\n';
}

std::ifstream open_in(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Config, "cannot read " + path);
  return in;
}

// Writes to `path`, or to stdout when it is empty or "-".
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_.open(path);
    if (!file_) throw Error(ErrorCode::Config, "cannot write " + path);
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }
  void close() {
    if (!file_.is_open()) return;
    file_.close();
    if (!file_) throw Error(ErrorCode::Config, "write failed");
  }

 private:
  std::ofstream file_;
};

nlohmann::json read_json(const std::string& path) {
  auto in = open_in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, path + ": " + e.what());
  }
}

struct Options {
  std::string app = "key-counter";
  GenConfig gen;
  std::string mode = "simulated";
  std::vector<std::size_t> workers{1, 2, 4};
  std::string plan_file;
  std::string plan = "auto";
  std::string rates_file;
  std::string trace;
  std::string out;
  std::string dot;
  std::string checkpoints;
  std::string stats;
  std::size_t cases = 1000;
  bool mutant = false;
};

// Grows the sizing knobs so the app's alphabet covers every tag key and
// stream number appearing in `tags` and `streams`.
void cover(GenConfig& cfg, const std::vector<std::string>& tags, const std::vector<std::int64_t>& streams) {
  static const std::regex key(R"(\((-?\d+)\))");
  for (const auto& t : tags) {
    std::smatch m;
    if (!std::regex_search(t, m, key)) continue;
    auto k = std::stoll(m[1]);
    if (k > 0) {
      cfg.keys = std::max(cfg.keys, static_cast<std::size_t>(k));
      cfg.streams = std::max(cfg.streams, static_cast<std::size_t>(k));
    }
  }
  for (auto s : streams) {
    if (s > 0) cfg.streams = std::max(cfg.streams, static_cast<std::size_t>(s));
  }
}

// Reads a trace for an app sized from the trace itself.
std::pair<std::unique_ptr<AnyApp>, Streams> load_trace(const Options& o) {
  std::vector<std::string> lines, tags;
  std::vector<std::int64_t> streams;
  {
    auto in = open_in(o.trace);
    for (std::string line; std::getline(in, line);) {
      lines.push_back(line);
      auto j = nlohmann::json::parse(line, nullptr, false);
      if (j.is_object() && j.contains("tag") && j["tag"].is_string()) tags.push_back(j["tag"]);
      if (j.is_object() && j.contains("stream") && j["stream"].is_number_integer()) streams.push_back(j["stream"]);
    }
  }
  auto cfg = o.gen;
  cover(cfg, tags, streams);
  auto app = make_app(o.app, cfg);
  std::istringstream body([&] {
    std::string all;
    for (const auto& l : lines) all += l + '\n';
    return all;
  }());
  auto streams_read = read_trace(body, app->signature().alphabet);
  return {std::move(app), std::move(streams_read)};
}

RateSpec load_rates(const Options& o, const Alphabet& alphabet) { return rates_from_json(read_json(o.rates_file), alphabet); }

// Sizes the app from the rates file when no trace fixes it.
std::unique_ptr<AnyApp> app_for_rates(const Options& o) {
  auto j = read_json(o.rates_file);
  std::vector<std::string> tags;
  std::vector<std::int64_t> streams;
  if (j.is_object() && j.contains("itags") && j["itags"].is_array()) {
    for (const auto& e : j["itags"]) {
      if (e.contains("tag") && e["tag"].is_string()) tags.push_back(e["tag"]);
      if (e.contains("stream") && e["stream"].is_number_integer()) streams.push_back(e["stream"]);
    }
  }
  auto cfg = o.gen;
  cover(cfg, tags, streams);
  return make_app(o.app, cfg);
}

void write_plan_outputs(const Options& o, const ProgramSignature& sig, const SyncPlan& plan) {
  Sink out(o.out);
  out.stream() << plan_to_json(sig, plan).dump(2) << '\n';
  out.close();
  auto dot_path = o.dot;
  if (dot_path.empty() && !o.out.empty() && o.out != "-") {
    dot_path = std::filesystem::path(o.out).replace_extension(".dot").string();
  }
  if (!dot_path.empty()) {
    Sink dot(dot_path);
    write_dot(dot.stream(), sig, plan);
    dot.close();
  }
}

int cmd_gen(const Options& o) {
  auto app = make_app(o.app, o.gen);
  auto streams = app->generate(o.gen);
  auto problems = validate_input_instance(streams);
  if (!problems.empty()) throw Error(ErrorCode::InvalidInput, "generator produced an invalid trace");
  Sink out(o.out);
  write_trace(out.stream(), streams, app->signature().alphabet);
  out.close();
  return kOk;
}

int cmd_check(const Options& o) {
  auto app = make_app(o.app, o.gen);
  SuiteConfig cfg;
  cfg.cases = o.cases;
  cfg.seed = o.gen.seed;
  auto r = app->check(cfg, o.mutant);
  Sink out(o.out);
  out.stream() << r.report.dump(2) << '\n';
  out.close();
  return r.failures() == 0 ? kOk : kProperty;
}

int cmd_plan(const Options& o) {
  if (o.rates_file.empty()) throw Error(ErrorCode::Config, "plan needs --rates");
  std::unique_ptr<AnyApp> app;
  std::vector<ImplTag> itags;
  if (!o.trace.empty()) {
    auto [a, streams] = load_trace(o);
    app = std::move(a);
    itags = itags_in(streams);
  } else {
    app = app_for_rates(o);
  }
  auto sig = app->signature();
  auto rates = load_rates(o, sig.alphabet);
  if (o.trace.empty()) {
    for (const auto& e : rates.entries()) itags.push_back(e.itag);
  }
  write_plan_outputs(o, sig, optimize(sig, itags, rates));
  return kOk;
}

SyncPlan choose_plan(const Options& o, const ProgramSignature& sig, const Streams& streams) {
  auto itags = itags_in(streams);
  if (!o.plan_file.empty()) return plan_from_json(sig, read_json(o.plan_file));
  if (o.plan == "single-worker") return single_worker_plan(itags);
  return optimize(sig, itags, o.rates_file.empty() ? RateSpec::observed(streams) : load_rates(o, sig.alphabet));
}

int cmd_run(const Options& o) {
  std::unique_ptr<AnyApp> app;
  Streams streams;
  if (!o.trace.empty()) {
    std::tie(app, streams) = load_trace(o);
  } else {
    app = make_app(o.app, o.gen);
    streams = app->generate(o.gen);
  }
  auto sig = app->signature();
  auto plan = choose_plan(o, sig, streams);
  RunOptions opts;
  opts.mode = o.mode == "concurrent" ? Mode::Concurrent : Mode::Simulated;
  opts.seed = o.gen.seed;
  if (!o.checkpoints.empty()) opts.checkpoint = [](const Event&) { return true; };
  auto r = app->run(plan, streams, opts);

  Sink out(o.out);
  write_outputs(out.stream(), r.outputs);
  out.close();
  if (!o.checkpoints.empty()) {
    Sink cps(o.checkpoints);
    write_checkpoints(cps.stream(), r.checkpoints);
    cps.close();
  }
  auto stats = r.stats.to_json();
  if (opts.mode == Mode::Simulated) {
    // Wall time is the one nondeterministic field of a simulated run.
    stats.erase("seconds");
    stats.erase("events_per_sec");
  }
  if (!o.stats.empty()) {
    Sink s(o.stats);
    s.stream() << stats.dump(2) << '\n';
    s.close();
  } else {
    std::cerr << stats.dump() << '\n';
  }
  return kOk;
}

int cmd_bench(const Options& o) {
  Sink out(o.out);
  auto& csv = out.stream();
  csv << "workers,events,seconds,events_per_sec,p10,p50,p90,root_joins,leaf_events\n";
  for (auto w : o.workers) {
    auto cfg = o.gen;
    cfg.streams = w;
    auto app = make_app(o.app, cfg);
    auto streams = app->generate(cfg);
    auto plan = optimize(app->signature(), itags_in(streams), RateSpec::observed(streams));
    RunOptions opts;
    opts.mode = Mode::Concurrent;
    auto r = app->run(plan, streams, opts);
    auto lat = r.stats.latency_ms.value_or(std::array<double, 3>{0, 0, 0});
    csv << w << ',' << r.stats.events << ',' << r.stats.seconds << ',' << r.stats.events_per_sec << ',' << lat[0]
        << ',' << lat[1] << ',' << lat[2] << ',' << r.stats.root_joins() << ',' << r.stats.leaf_events() << '\n';
  }
  out.close();
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App cli{"Dependency-guided synchronization: generate, check, plan, run and benchmark"};
  cli.require_subcommand(1);
  Options o;

  auto app_names_list = app_names();
  auto add_app = [&](CLI::App* sub) {
    sub->add_option("--app", o.app, "Example program")->check(CLI::IsMember(app_names_list));
    sub->add_option("--streams", o.gen.streams, "Parallel streams")->check(CLI::PositiveNumber);
    sub->add_option("--keys", o.gen.keys, "Keys (key-counter) or users (page-view)")->check(CLI::PositiveNumber);
  };
  auto add_gen = [&](CLI::App* sub) {
    sub->add_option("--events", o.gen.events_per_stream, "Events per parallel stream")->check(CLI::PositiveNumber);
    sub->add_option("--sync-ratio", o.gen.sync_ratio, "Parallel rounds per synchronizing event")
        ->check(CLI::PositiveNumber);
    sub->add_option("--heartbeat-period", o.gen.heartbeat_period, "Heartbeat period; 0 for terminal heartbeats only")
        ->check(CLI::NonNegativeNumber);
    sub->add_option("--get-every", o.gen.get_every, "Page-view: views per address lookup")
        ->check(CLI::PositiveNumber);
  };
  auto add_seed = [&](CLI::App* sub) { sub->add_option("--seed", o.gen.seed, "Random seed"); };

  auto* gen = cli.add_subcommand("gen", "Write a generated trace as JSONL");
  add_app(gen);
  add_gen(gen);
  add_seed(gen);
  gen->add_option("--out", o.out, "Trace file (default stdout)");

  auto* check = cli.add_subcommand("check", "Run the consistency suite and print a JSON report");
  add_app(check);
  add_seed(check);
  check->add_option("--cases", o.cases, "Cases per condition and primitive");
  check->add_flag("--mutant", o.mutant, "Check the app's deliberately broken variant");
  check->add_option("--out", o.out, "Report file (default stdout)");

  auto* plan = cli.add_subcommand("plan", "Synthesize a plan from itag rates");
  add_app(plan);
  plan->add_option("--rates", o.rates_file, "Rates and locations JSON")->required();
  plan->add_option("--trace", o.trace, "Plan for the itags of this trace");
  plan->add_option("--out", o.out, "Plan JSON (default stdout)");
  plan->add_option("--dot", o.dot, "DOT rendering (default next to --out)");

  auto* run = cli.add_subcommand("run", "Execute a plan on a trace");
  add_app(run);
  add_gen(run);
  add_seed(run);
  run->add_option("--trace", o.trace, "Input trace (default: generate one)");
  run->add_option("--mode", o.mode, "Driver")->check(CLI::IsMember({"simulated", "concurrent"}));
  run->add_option("--plan", o.plan, "Plan when no --plan-file is given")->check(CLI::IsMember({"auto", "single-worker"}));
  run->add_option("--plan-file", o.plan_file, "Plan JSON");
  run->add_option("--rates", o.rates_file, "Rates for --plan auto (default: observed counts)");
  run->add_option("--out", o.out, "Outputs JSONL (default stdout)");
  run->add_option("--checkpoints", o.checkpoints, "Checkpoint JSONL, one record per root synchronization");
  run->add_option("--stats", o.stats, "Run statistics JSON (default stderr)");

  auto* bench = cli.add_subcommand("bench", "Concurrent throughput per worker count as CSV");
  add_app(bench);
  add_gen(bench);
  add_seed(bench);
  bench->add_option("--workers", o.workers, "Parallel stream counts")->delimiter(',')->check(CLI::PositiveNumber);
  bench->add_option("--out", o.out, "CSV file (default stdout)");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return cli.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return cli.exit(e);
  } catch (const CLI::ParseError& e) {
    report_error("Usage", e.what());
    return kValidation;
  }

  try {
    if (*gen) return cmd_gen(o);
    if (*check) return cmd_check(o);
    if (*plan) return cmd_plan(o);
    if (*run) return cmd_run(o);
    return cmd_bench(o);
  } catch (const Error& e) {
    report_error(to_string(e.code()), e.what());
    return exit_code(e.code());
  } catch (const nlohmann::json::exception& e) {
    report_error("Config", e.what());
    return kValidation;
  } catch (const std::exception& e) {
    report_error("Internal", e.what());
    return kProperty;
  }
}
