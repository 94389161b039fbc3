// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <memory>
#include <random>

#include "dgs/apps.hpp"

namespace dgs::detail {

struct Layout {
  /// Synchronizing event for stream 0.
  std::function<std::pair<TagId, Value>(std::mt19937_64&)> sync;
  /// The n-th event (from 0) of parallel stream `s`.
  std::function<std::pair<TagId, Value>(std::mt19937_64&, StreamId s, std::size_t n)> parallel;
  std::vector<TagId> heartbeat_tags;  // per stream id
};

Streams generate_layout(const Layout& layout, const GenConfig& cfg);

/// Event source for the consistency suite. Timestamps increase across calls
/// so that sampled executions respect the order of self-dependent tags.
template <class S>
Generators<S> make_generators(std::function<S(std::mt19937_64&)> state,
                              std::function<Value(TagId, std::mt19937_64&)> payload,
                              std::function<StreamId(TagId)> stream) {
  auto clock = std::make_shared<Timestamp>(1000);
  Generators<S> g;
  g.state = std::move(state);
  g.event = [clock, payload = std::move(payload), stream = std::move(stream)](
                std::mt19937_64& rng, const TagSet& allowed) -> std::optional<Event> {
    auto ids = allowed.ids();
    if (ids.empty()) return std::nullopt;
    auto t = ids[rng() % ids.size()];
    return Event{{t, stream(t)}, ++*clock, payload(t, rng)};
  };
  return g;
}

template <class S>
class App : public AnyApp {
 public:
  App(std::string name, Program<S> program, Program<S> mutant, Layout layout,
      std::function<Generators<S>(const Program<S>&)> gens)
      : name_(std::move(name)),
        program_(std::move(program)),
        mutant_(std::move(mutant)),
        layout_(std::move(layout)),
        gens_(std::move(gens)) {}

  std::string name() const override { return name_; }
  ProgramSignature signature() const override { return program_.signature(); }
  std::vector<TagId> heartbeat_tags() const override { return layout_.heartbeat_tags; }
  Streams generate(const GenConfig& cfg) const override {
    if (cfg.streams + 1 > layout_.heartbeat_tags.size()) {
      throw Error(ErrorCode::Config, name_ + " was built for " + std::to_string(layout_.heartbeat_tags.size() - 1) +
                                         " parallel streams");
    }
    return generate_layout(layout_, cfg);
  }
  std::vector<Output> sequential(const std::vector<Event>& input) const override {
    return sequential_spec(program_, input);
  }
  Value fold_state(const std::vector<Event>& input) const override {
    return program_.canonical(sequential_state(program_, input));
  }
  RunResult run(const SyncPlan& plan, const Streams& streams, const RunOptions& opts) const override {
    return run_plan(program_, plan, streams, opts);
  }
  CheckResult check(const SuiteConfig& cfg, bool mutant) const override {
    const auto& p = mutant ? mutant_ : program_;
    auto report = run_consistency_suite(p, gens_(p), cfg);
    CheckResult r{report.c1, report.c2, report.c3, report.to_json(), true};
    for (const auto& w : report.failures) {
      if (replay(p, w).pass) r.witnesses_replay = false;
    }
    return r;
  }
  std::vector<Output> eval_random_wire(const std::vector<Event>& input, int depth,
                                       std::uint64_t seed) const override {
    auto d = random_wire_diagram(program_, input, depth, seed);
    return eval_wire_diagram(program_, d, seed ^ 0x9e3779b97f4a7c15ULL);
  }

 private:
  std::string name_;
  Program<S> program_;
  Program<S> mutant_;
  Layout layout_;
  std::function<Generators<S>(const Program<S>&)> gens_;
};

/// Per-tag (kind, key) lookup built from an alphabet.
struct TagIndex {
  std::vector<std::string> kind;
  std::vector<std::int64_t> key;

  explicit TagIndex(const Alphabet& a) {
    for (const auto& t : a.tags()) {
      kind.push_back(t.name);
      key.push_back(t.key.value_or(0));
    }
  }
};

std::unique_ptr<AnyApp> make_key_counter(const GenConfig& cfg);
std::unique_ptr<AnyApp> make_value_barrier(const GenConfig& cfg);
std::unique_ptr<AnyApp> make_page_view(const GenConfig& cfg);
std::unique_ptr<AnyApp> make_fraud(const GenConfig& cfg);

}  // namespace dgs::detail
