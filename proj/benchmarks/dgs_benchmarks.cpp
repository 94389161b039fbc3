// SPDX-License-Identifier: Apache-2.0
#include <benchmark/benchmark.h>

#include "dgs/apps.hpp"
#include "dgs/mailbox.hpp"
#include "dgs/optimizer.hpp"

namespace {

using namespace dgs;

// Independent increments on distinct streams released by a periodic reset
// heartbeat, so every pop has to consult the timers.
void BM_MailboxInsertPop(benchmark::State& state) {
  auto keys = static_cast<std::size_t>(state.range(0));
  auto p = key_counter_program(keys);
  std::vector<ImplTag> tracked;
  for (std::size_t k = 1; k <= keys; ++k) {
    auto kk = static_cast<std::int64_t>(k);
    tracked.push_back({p.alphabet.id(Tag{"i", kk}), static_cast<StreamId>(k)});
  }
  tracked.push_back({p.alphabet.id(Tag{"r", 1}), 0});
  std::vector<bool> sync(tracked.size(), false);
  std::size_t released = 0;
  for (auto _ : state) {
    Mailbox mb(tracked, sync, p.rel);
    for (Timestamp ts = 1; ts <= 1000; ++ts) {
      const auto& t = tracked[ts % keys];
      mb.insert(MailboxEntry{Event{t, 2 * ts, Value(0)}});
      if (ts % 16 == 0) {
        mb.advance(0, {2 * ts + 1, 0});
        for (StreamId s = 1; s <= keys; ++s) mb.advance(s, {2 * ts + 1, s});
        while (auto e = mb.pop()) ++released;
      }
    }
  }
  benchmark::DoNotOptimize(released);
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()) * 1000);
}
BENCHMARK(BM_MailboxInsertPop)->Arg(2)->Arg(8)->Arg(32);

struct Workload {
  std::unique_ptr<AnyApp> app;
  Streams streams;
  std::vector<Event> sorted;
  SyncPlan optimized;
  SyncPlan single;
  std::size_t events = 0;

  explicit Workload(std::size_t parallel) {
    GenConfig cfg;
    cfg.streams = parallel;
    cfg.events_per_stream = 20000 / parallel;
    cfg.sync_ratio = 1000;
    cfg.heartbeat_period = 500;
    app = make_app("value-barrier", cfg);
    streams = app->generate(cfg);
    sorted = sort_streams(streams);
    events = sorted.size();
    auto itags = itags_in(streams);
    optimized = optimize(app->signature(), itags, RateSpec::observed(streams));
    single = single_worker_plan(itags);
  }
};

void BM_SequentialFold(benchmark::State& state) {
  Workload w(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(w.app->sequential(w.sorted));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * w.events));
}
BENCHMARK(BM_SequentialFold)->Arg(1)->Arg(4);

void BM_RunPlan(benchmark::State& state, bool optimized, Mode mode) {
  Workload w(static_cast<std::size_t>(state.range(0)));
  RunOptions opts;
  opts.mode = mode;
  const auto& plan = optimized ? w.optimized : w.single;
  for (auto _ : state) benchmark::DoNotOptimize(w.app->run(plan, w.streams, opts));
  state.counters["workers"] = static_cast<double>(plan.workers.size());
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * w.events));
}
BENCHMARK_CAPTURE(BM_RunPlan, single_simulated, false, Mode::Simulated)->Arg(1)->Arg(4);
BENCHMARK_CAPTURE(BM_RunPlan, optimized_simulated, true, Mode::Simulated)->Arg(1)->Arg(4);
BENCHMARK_CAPTURE(BM_RunPlan, optimized_concurrent, true, Mode::Concurrent)->Arg(1)->Arg(4)->UseRealTime();

}  // namespace

BENCHMARK_MAIN();
