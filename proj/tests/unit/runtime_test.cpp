// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <random>
#include <set>
#include <sstream>

#include "dgs/apps.hpp"
#include "dgs/optimizer.hpp"
#include "dgs/runtime.hpp"
#include "dgs/trace.hpp"
#include "support.hpp"

using namespace dgs;

namespace {

using SplitKeyPlan = dgs::testing::SplitKeyPlan;

// Streams for the two-key plan: resets of key 1 and 2 and increments spread
// over their streams, with terminal heartbeats.
Streams split_key_input(const SplitKeyPlan& f, std::mt19937_64& rng, std::size_t n) {
  Streams s(5);
  std::vector<ImplTag> sources = f.all;
  for (Timestamp ts = 1; ts <= n; ++ts) {
    auto t = sources[rng() % sources.size()];
    s[t.stream].push_back(Event{t, ts, Value(0)});
  }
  std::vector<TagId> hb(5);
  for (const auto& t : f.all) hb[t.stream] = t.tag;
  return inject_heartbeats(s, hb, 10);
}

std::set<std::pair<WorkerId, Delivery::Kind>> deliveries(const SyncPlan& plan, const Message& m) {
  std::set<std::pair<WorkerId, Delivery::Kind>> out;
  for (const auto& d : route(plan, m)) out.insert({d.worker, d.kind});
  return out;
}

std::vector<Value> values(const std::vector<Output>& outs) {
  std::vector<Value> v;
  for (const auto& o : outs) v.push_back(o.value);
  return v;
}

}  // namespace

TEST(Route, ResetGoesToOwnerAndMarkersBelow) {
  SplitKeyPlan f;
  using K = Delivery::Kind;
  EXPECT_EQ(deliveries(f.plan, Event{f.r2, 7, Value(0)}),
            (std::set<std::pair<WorkerId, K>>{{2, K::Process}, {3, K::Marker}, {4, K::Marker}}));
  EXPECT_EQ(deliveries(f.plan, Heartbeat{f.i2a, 7}), (std::set<std::pair<WorkerId, K>>{{3, K::Progress}}));
  EXPECT_EQ(deliveries(f.plan, Event{f.i1, 7, Value(0)}), (std::set<std::pair<WorkerId, K>>{{1, K::Process}}));
  EXPECT_THROW(route(f.plan, Event{{f.r1.tag, 9}, 1, Value(0)}), Error);
}

TEST(Route, SharedStreamsForwardProgress) {
  auto p = key_counter_program(2);
  ImplTag r1{p.alphabet.id("r(1)"), 0}, r2{p.alphabet.id("r(2)"), 0}, i1{p.alphabet.id("i(1)"), 1},
      i2{p.alphabet.id("i(2)"), 1};
  std::vector<ImplTag> itags{r1, r2, i1, i2};
  auto plan = optimize(p.signature(), itags, RateSpec::uniform(itags));
  ASSERT_GT(plan.workers.size(), 1U);
  // The owner of i(2) never processes i(1) but must learn that stream 1 moved.
  auto owner = responsible_worker(plan, i2);
  auto d = route(plan, Event{i1, 3, Value(0)});
  bool progress = false;
  for (const auto& x : d) progress = progress || (x.worker == owner && x.kind == Delivery::Kind::Progress);
  EXPECT_TRUE(progress);
}

TEST(RunPlan, KeyCounterExampleOnOneWorker) {
  auto p = key_counter_program(2);
  Streams s(1);
  Timestamp ts = 0;
  for (auto t : {"i(1)", "i(2)", "r(1)", "i(2)", "r(1)"}) s[0].push_back(Event{{p.alphabet.id(t), 0}, ++ts, Value(0)});
  s[0].push_back(Heartbeat{{p.alphabet.id("r(1)"), 0}, 100});
  auto r = run_plan(p, single_worker_plan(itags_in(s)), s);
  EXPECT_EQ(values(r.outputs), (std::vector<Value>{1, 0}));
  EXPECT_EQ(r.stats.events, 5U);
}

TEST(RunPlan, ValueBarrierSumsAcrossLeaves) {
  auto p = value_barrier_program(2);
  auto a1 = p.alphabet.id("a(1)"), a2 = p.alphabet.id("a(2)"), b = p.alphabet.id("b");
  Streams s(3);
  for (Timestamp t = 1; t <= 3; ++t) {
    s[1].push_back(Event{{a1, 1}, 2 * t - 1, Value(1)});
    s[2].push_back(Event{{a2, 2}, 2 * t, Value(1)});
  }
  s[0].push_back(Event{{b, 0}, 10, Value(0)});
  s = inject_heartbeats(s, {b, a1, a2}, 100);
  auto expected = sequential_spec(p, sort_streams(s));
  ASSERT_EQ(values(expected), (std::vector<Value>{6}));
  auto itags = itags_in(s);
  auto plan = optimize(p.signature(), itags, dgs::testing::observed_rates(s));
  ASSERT_EQ(plan.workers.size(), 3U);
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    RunOptions opts;
    opts.seed = seed;
    auto r = run_plan(p, plan, s, opts);
    EXPECT_TRUE(same_multiset(r.outputs, expected));
    EXPECT_EQ(r.stats.root_joins(), 1U);
    EXPECT_EQ(r.stats.leaf_events(), 6U);
  }
}

TEST(RunPlan, ReferencePlanJoinsOnlyAtResets) {
  SplitKeyPlan f;
  std::mt19937_64 rng(1);
  auto s = split_key_input(f, rng, 400);
  auto expected = sequential_spec(f.p, sort_streams(s));
  for (auto mode : {Mode::Simulated, Mode::Concurrent}) {
    RunOptions opts;
    opts.mode = mode;
    opts.seed = 9;
    auto r = run_plan(f.p, f.plan, s, opts);
    EXPECT_TRUE(same_multiset(r.outputs, expected));
    std::size_t resets2 = 0;
    for (const auto& m : s[f.r2.stream]) resets2 += is_heartbeat(m) ? 0 : 1;
    const auto& w = r.stats.workers;
    EXPECT_EQ(w[2].joins, resets2);
    EXPECT_EQ(w[0].joins, 0U);
    for (const auto& ws : w) {
      EXPECT_EQ(ws.joins, ws.forks) << ws.name;
      if (ws.leaf) EXPECT_EQ(ws.joins, 0U) << ws.name;
    }
    EXPECT_EQ(w[3].markers, resets2);
    EXPECT_EQ(r.stats.total_processed(), r.stats.events);
    if (mode == Mode::Concurrent) {
      ASSERT_TRUE(r.stats.latency_ms);
      EXPECT_LE((*r.stats.latency_ms)[0], (*r.stats.latency_ms)[2]);
    } else {
      EXPECT_FALSE(r.stats.latency_ms);
    }
  }
}

TEST(RunPlan, SimulatedRunsAreSeedDeterministic) {
  SplitKeyPlan f;
  std::mt19937_64 rng(2);
  auto s = split_key_input(f, rng, 300);
  RunOptions opts;
  opts.seed = 77;
  auto a = run_plan(f.p, f.plan, s, opts);
  auto b = run_plan(f.p, f.plan, s, opts);
  EXPECT_EQ(a.outputs, b.outputs);
  opts.seed = 78;
  auto c = run_plan(f.p, f.plan, s, opts);
  EXPECT_TRUE(same_multiset(a.outputs, c.outputs));
}

TEST(RunPlan, ForestOfKeys) {
  SplitKeyPlan f;
  std::mt19937_64 rng(3);
  auto s = split_key_input(f, rng, 300);
  auto forest = peel_empty_roots(f.plan);
  ASSERT_EQ(forest.roots.size(), 2U);
  auto r = run_plan(f.p, forest, s);
  EXPECT_TRUE(same_multiset(r.outputs, sequential_spec(f.p, sort_streams(s))));
}

TEST(RunPlan, ReleaseLogsAreClean) {
  SplitKeyPlan f;
  std::mt19937_64 rng(4);
  auto s = split_key_input(f, rng, 300);
  RunOptions opts;
  opts.record_logs = true;
  auto r = run_plan(f.p, f.plan, s, opts);
  ASSERT_EQ(r.logs.size(), f.plan.workers.size());
  for (const auto& log : r.logs) EXPECT_TRUE(check_release_log(log, f.p.rel).empty());
  EXPECT_FALSE(r.logs[3].released.empty());
}

TEST(RunPlan, SilentStreamDeadlocks) {
  auto p = value_barrier_program(2);
  auto a1 = p.alphabet.id("a(1)"), a2 = p.alphabet.id("a(2)"), b = p.alphabet.id("b");
  Streams s(3);
  s[1] = {Event{{a1, 1}, 1, Value(1)}, Event{{a1, 1}, 50, Value(1)}};
  s[2] = {Event{{a2, 2}, 2, Value(1)}};
  s[0] = {Event{{b, 0}, 20, Value(0)}, Heartbeat{{b, 0}, 60}};
  auto plan = single_worker_plan(itags_in(s));
  try {
    run_plan(p, plan, s);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Deadlock);
  }
  RunOptions conc;
  conc.mode = Mode::Concurrent;
  conc.stall_timeout_s = 0.3;
  try {
    run_plan(p, plan, s, conc);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::Deadlock);
  }
  auto healed = inject_heartbeats(s, {b, a1, a2}, 5);
  EXPECT_TRUE(same_multiset(run_plan(p, plan, healed).outputs, sequential_spec(p, sort_streams(s))));
}

TEST(RunPlan, PrecheckRejectsInvalidInputs) {
  SplitKeyPlan f;
  std::mt19937_64 rng(5);
  auto s = split_key_input(f, rng, 50);
  auto code = [&](const Program<CounterState>& p, const SyncPlan& plan, const Streams& st) {
    try {
      run_plan(p, plan, st);
    } catch (const Error& e) {
      return e.code();
    }
    return ErrorCode::Config;
  };
  auto bad_plan = f.plan;
  bad_plan.workers[4].itags.clear();
  EXPECT_EQ(code(f.p, bad_plan, s), ErrorCode::InvalidPlan);

  auto unsorted = s;
  std::swap(unsorted[2].front(), unsorted[2].back());
  EXPECT_EQ(code(f.p, f.plan, unsorted), ErrorCode::InvalidInput);

  auto bad_prog = f.p;
  bad_prog.rel.remove(f.r1.tag, f.i1.tag);
  bad_prog.rel.add_directed(f.r1.tag, f.i1.tag);
  EXPECT_EQ(code(bad_prog, f.plan, s), ErrorCode::InvalidProgram);
}

TEST(Checkpoints, MatchTruncatedFold) {
  GenConfig cfg;
  cfg.streams = 3;
  cfg.events_per_stream = 200;
  cfg.sync_ratio = 7;
  cfg.heartbeat_period = 13;
  auto app = make_app("value-barrier", cfg);
  auto s = app->generate(cfg);
  auto plan = optimize(app->signature(), itags_in(s), dgs::testing::observed_rates(s));
  RunOptions opts;
  opts.checkpoint = [](const Event&) { return true; };
  auto r = app->run(plan, s, opts);
  auto input = sort_streams(s);
  std::size_t barriers = 0;
  for (const auto& e : input) barriers += e.itag.stream == 0;
  ASSERT_EQ(r.checkpoints.size(), barriers);
  for (const auto& cp : r.checkpoints) {
    std::vector<Event> prefix;
    for (const auto& e : input) {
      if (e.order() < cp.order) prefix.push_back(e);
    }
    EXPECT_EQ(cp.state, app->fold_state(prefix));
  }
  // Only events matching the predicate checkpoint.
  opts.checkpoint = [](const Event& e) { return e.ts % 2 == 0; };
  auto some = app->run(plan, s, opts);
  std::size_t even = 0;
  for (const auto& e : input) even += e.itag.stream == 0 && e.ts % 2 == 0;
  EXPECT_EQ(some.checkpoints.size(), even);
  for (const auto& cp : some.checkpoints) EXPECT_EQ(cp.order.ts % 2, 0U);
}

TEST(RunStats, JsonHasCounters) {
  SplitKeyPlan f;
  std::mt19937_64 rng(6);
  auto s = split_key_input(f, rng, 100);
  auto r = run_plan(f.p, f.plan, s);
  auto j = r.stats.to_json();
  EXPECT_EQ(j["events"], 100);
  EXPECT_EQ(j["workers"].size(), 5U);
  EXPECT_TRUE(j.contains("events_per_sec"));
  EXPECT_FALSE(j.contains("latency_ms"));
}

TEST(Writers, OutputAndCheckpointLines) {
  std::ostringstream out;
  write_outputs(out, {{Value(3), 7}});
  EXPECT_EQ(out.str(), "{\"ts\":7,\"value\":3}\n");
  std::ostringstream cps;
  write_checkpoints(cps, {{{4, 0}, Value(12)}});
  auto j = nlohmann::json::parse(cps.str());
  EXPECT_EQ(j["o_value"]["ts"], 4);
  EXPECT_EQ(j["o_value"]["stream"], 0);
  EXPECT_EQ(j["state"], 12);
}

TEST(RunPlan, RandomPlansMatchSequentialFold) {
  std::mt19937_64 rng(8);
  for (const auto& name : app_names()) {
    for (int trial = 0; trial < 25; ++trial) {
      auto cfg = dgs::testing::random_config(rng, 4, 1500);
      auto app = make_app(name, cfg);
      auto s = app->generate(cfg);
      auto plan = random_plan(app->signature(), itags_in(s), rng, 4);
      RunOptions opts;
      opts.seed = rng();
      auto r = app->run(plan, s, opts);
      ASSERT_TRUE(same_multiset(r.outputs, app->sequential(sort_streams(s)))) << name << " trial " << trial;
    }
  }
}
