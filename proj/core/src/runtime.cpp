// SPDX-License-Identifier: Apache-2.0
#include "dgs/runtime.hpp"

#include <algorithm>
#include <ostream>
#include <set>

namespace dgs {

RoutingTable::RoutingTable(const SyncPlan& plan) {
  auto n = plan.workers.size();
  tracked_.resize(n);
  sync_.resize(n);
  std::vector<std::set<StreamId>> streams(n);
  for (WorkerId w = 0; w < n; ++w) {
    const auto& node = plan.workers[w];
    for (const auto& t : node.itags) {
      tracked_[w].push_back(t);
      sync_[w].push_back(!node.is_leaf());
    }
    for (auto a : plan.ancestors(w)) {
      for (const auto& t : plan.workers[a].itags) {
        tracked_[w].push_back(t);
        sync_[w].push_back(true);
      }
    }
    for (const auto& t : tracked_[w]) streams[w].insert(t.stream);
  }
  for (WorkerId o = 0; o < n; ++o) {
    auto sub = plan.subtree(o);
    std::set<WorkerId> in_sub(sub.begin(), sub.end());
    for (const auto& t : plan.workers[o].itags) {
      auto& ev = events_[t];
      auto& hb = heartbeats_[t];
      ev.push_back({o, Delivery::Kind::Process});
      for (std::size_t i = 1; i < sub.size(); ++i) ev.push_back({sub[i], Delivery::Kind::Marker});
      for (WorkerId w = 0; w < n; ++w) {
        if (!streams[w].count(t.stream)) continue;
        if (!in_sub.count(w)) ev.push_back({w, Delivery::Kind::Progress});
        hb.push_back({w, Delivery::Kind::Progress});
      }
    }
  }
}

const std::vector<Delivery>& RoutingTable::route(const Message& m) const {
  const auto& it = itag_of(m);
  const auto& table = is_heartbeat(m) ? heartbeats_ : events_;
  auto found = table.find(it);
  if (found == table.end()) {
    throw Error(ErrorCode::Unowned, "tag id " + std::to_string(it.tag) + " on stream " + std::to_string(it.stream));
  }
  return found->second;
}

std::vector<Delivery> route(const SyncPlan& plan, const Message& m) { return RoutingTable(plan).route(m); }

std::size_t RunStats::root_joins() const {
  std::size_t n = 0;
  for (auto r : roots) n += workers.at(r).joins;
  return n;
}

std::size_t RunStats::leaf_joins() const {
  std::size_t n = 0;
  for (const auto& w : workers) n += w.leaf ? w.joins : 0;
  return n;
}

std::size_t RunStats::leaf_events() const {
  std::size_t n = 0;
  for (const auto& w : workers) n += w.leaf ? w.processed : 0;
  return n;
}

std::size_t RunStats::total_processed() const {
  std::size_t n = 0;
  for (const auto& w : workers) n += w.processed;
  return n;
}

nlohmann::json RunStats::to_json() const {
  nlohmann::json ws = nlohmann::json::array();
  for (const auto& w : workers) {
    ws.push_back({{"id", w.name},
                  {"leaf", w.leaf},
                  {"processed", w.processed},
                  {"markers", w.markers},
                  {"joins", w.joins},
                  {"forks", w.forks},
                  {"outputs", w.outputs}});
  }
  nlohmann::json j{{"events", events},
                   {"outputs", outputs},
                   {"seconds", seconds},
                   {"events_per_sec", events_per_sec},
                   {"root_joins", root_joins()},
                   {"leaf_events", leaf_events()},
                   {"workers", ws}};
  if (latency_ms) {
    j["latency_ms"] = {{"p10", (*latency_ms)[0]}, {"p50", (*latency_ms)[1]}, {"p90", (*latency_ms)[2]}};
  }
  return j;
}

void write_outputs(std::ostream& out, const std::vector<Output>& outputs) {
  for (const auto& o : outputs) out << nlohmann::json{{"value", o.value}, {"ts", o.ts}}.dump() << '\n';
}

void write_checkpoints(std::ostream& out, const std::vector<CheckpointRecord>& cps) {
  for (const auto& c : cps) {
    out << nlohmann::json{{"o_value", {{"ts", c.order.ts}, {"stream", c.order.stream}}}, {"state", c.state}}.dump()
        << '\n';
  }
}

void precheck_run(const std::vector<std::string>& program_problems, const ProgramSignature& sig,
                  const SyncPlan& plan, const Streams& streams) {
  if (!program_problems.empty()) throw Error(ErrorCode::InvalidProgram, program_problems.front());
  auto plan_problems = validate_plan(sig, plan, itags_in(streams));
  if (!plan_problems.empty()) {
    const auto& v = plan_problems.front();
    throw Error(ErrorCode::InvalidPlan, std::string(to_string(v.kind)) + (v.worker.empty() ? "" : " at " + v.worker) + ": " + v.detail);
  }
  for (const auto& v : validate_input_instance(streams)) {
    if (v.kind == InputViolation::Kind::Progress) continue;
    throw Error(ErrorCode::InvalidInput,
                std::string(v.kind == InputViolation::Kind::Monotonicity ? "timestamps not increasing"
                                                                           : "message on the wrong stream") +
                    " at stream " + std::to_string(v.stream) + " index " + std::to_string(v.index));
  }
}

}  // namespace dgs
