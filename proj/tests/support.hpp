// SPDX-License-Identifier: Apache-2.0
//
// Helpers shared by the unit tests and the acceptance runner.
#pragma once

#include <algorithm>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dgs/apps.hpp"
#include "dgs/optimizer.hpp"
#include "dgs/trace.hpp"

namespace dgs::testing {

/// A random valid generator configuration with at most `max_streams`
/// parallel streams and at most `max_events` events in total.
inline GenConfig random_config(std::mt19937_64& rng, std::size_t max_streams, std::size_t max_events) {
  GenConfig cfg;
  cfg.streams = 1 + rng() % max_streams;
  // Parallel streams plus at most one sync event per round.
  auto per_stream_cap = max_events / (cfg.streams + 1);
  cfg.events_per_stream = 1 + rng() % std::max<std::size_t>(per_stream_cap, 1);
  cfg.sync_ratio = 1 + rng() % 40;
  cfg.heartbeat_period = rng() % 4 == 0 ? 0 : 1 + rng() % 150;
  cfg.keys = 1 + rng() % 3;
  cfg.get_every = 1 + rng() % 20;
  cfg.seed = rng();
  return cfg;
}

inline std::size_t event_count(const Streams& streams) {
  std::size_t n = 0;
  for (const auto& s : streams) {
    for (const auto& m : s) n += is_heartbeat(m) ? 0 : 1;
  }
  return n;
}

/// Rates equal to the number of messages per itag.
inline RateSpec observed_rates(const Streams& streams) { return RateSpec::observed(streams); }

/// Order-insensitive shape of a plan: owned itags and location per node,
/// children compared as an unordered pair.
inline std::string plan_shape(const SyncPlan& plan, const Alphabet& a, WorkerId w) {
  const auto& node = plan.workers[w];
  std::vector<std::string> owned;
  for (const auto& t : node.itags) owned.push_back(itag_str(t, a));
  std::sort(owned.begin(), owned.end());
  std::ostringstream out;
  out << "{";
  for (const auto& s : owned) out << s << ",";
  out << "@" << node.location;
  std::vector<std::string> kids;
  for (auto c : node.children) kids.push_back(plan_shape(plan, a, c));
  std::sort(kids.begin(), kids.end());
  for (const auto& k : kids) out << " " << k;
  out << "}";
  return out.str();
}

// Two keys; key 1 on one worker, key 2 split over two increment streams
// below the worker owning its reset.
struct SplitKeyPlan {
  Program<CounterState> p = key_counter_program(2);
  ProgramSignature sig = p.signature();
  ImplTag r1{p.alphabet.id("r(1)"), 1}, i1{p.alphabet.id("i(1)"), 4}, r2{p.alphabet.id("r(2)"), 0},
      i2a{p.alphabet.id("i(2)"), 2}, i2b{p.alphabet.id("i(2)"), 3};
  std::vector<ImplTag> all{r1, i1, r2, i2a, i2b};
  SyncPlan plan;

  SplitKeyPlan() {
    auto node = [](std::string name, std::vector<ImplTag> itags, std::vector<WorkerId> kids) {
      WorkerNode w;
      w.name = std::move(name);
      w.itags = std::move(itags);
      w.children = std::move(kids);
      if (!w.children.empty()) {
        w.fork = 0;
        w.join = 0;
      }
      return w;
    };
    plan.workers = {node("w1", {}, {1, 2}), node("w2", {r1, i1}, {}), node("w3", {r2}, {3, 4}),
                    node("w4", {i2a}, {}), node("w5", {i2b}, {})};
    plan.roots = {0};
  }
};

}  // namespace dgs::testing
