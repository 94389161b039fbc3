// SPDX-License-Identifier: Apache-2.0
//
// Plan execution. Each worker owns a mailbox and a state; a router feeds
// input messages to the workers that need them. Internal workers synchronize
// with their subtree by collecting child states (join), updating, and handing
// new states back down (fork).
//
// Two drivers share the worker logic: a seeded single-threaded simulation
// that interleaves single deliveries and releases at random, and a
// concurrent mode with one thread per worker plus a router thread.
#pragma once

#include <array>
#include <atomic>
#include <chrono>
#include <condition_variable>
#include <deque>
#include <exception>
#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <random>
#include <thread>
#include <vector>

#include "dgs/mailbox.hpp"
#include "dgs/plan.hpp"
#include "dgs/program.hpp"

namespace dgs {

enum class Mode { Simulated, Concurrent };

struct Delivery {
  enum class Kind { Process, Marker, Progress };
  WorkerId worker;
  Kind kind;

  bool operator==(const Delivery&) const = default;
};

/// Precomputed routing for a plan. An event goes to its owner for
/// processing and to the owner's descendants as a marker; every other worker
/// that tracks the event's stream gets a progress notice so its timer keeps
/// moving. Heartbeats are progress notices for every tracking worker.
class RoutingTable {
 public:
  explicit RoutingTable(const SyncPlan& plan);

  /// Throws Error{Unowned}.
  const std::vector<Delivery>& route(const Message& m) const;
  /// Itags whose messages a worker's mailbox buffers: its own and its ancestors'.
  const std::vector<ImplTag>& tracked(WorkerId w) const { return tracked_.at(w); }
  /// Per tracked itag: owned by an ancestor, or owned by `w` while `w` has children.
  const std::vector<bool>& sync(WorkerId w) const { return sync_.at(w); }

 private:
  std::vector<std::vector<ImplTag>> tracked_;
  std::vector<std::vector<bool>> sync_;
  std::map<ImplTag, std::vector<Delivery>> events_;
  std::map<ImplTag, std::vector<Delivery>> heartbeats_;
};

/// Deliveries for a single message; see RoutingTable.
std::vector<Delivery> route(const SyncPlan& plan, const Message& m);

struct WorkerStats {
  std::string name;
  bool leaf = true;
  std::size_t processed = 0;  // own events applied
  std::size_t markers = 0;    // ancestor events handed up
  std::size_t joins = 0;
  std::size_t forks = 0;
  std::size_t outputs = 0;
};

struct RunStats {
  std::vector<WorkerStats> workers;
  std::vector<WorkerId> roots;
  std::size_t events = 0;
  std::size_t outputs = 0;
  double seconds = 0;
  double events_per_sec = 0;
  /// Ingestion-to-output latency in milliseconds, concurrent mode only.
  std::optional<std::array<double, 3>> latency_ms;  // p10, p50, p90

  std::size_t root_joins() const;
  std::size_t leaf_joins() const;
  std::size_t leaf_events() const;
  std::size_t total_processed() const;
  nlohmann::json to_json() const;
};

/// Root state after a join, before the triggering event is applied: the
/// fold of every event strictly before `order`.
struct CheckpointRecord {
  OrderKey order;
  Value state;
};

struct RunOptions {
  Mode mode = Mode::Simulated;
  std::uint64_t seed = 0;
  bool record_logs = false;
  /// Root joins whose triggering event satisfies this emit a checkpoint.
  /// Only single-tree plans checkpoint.
  std::function<bool(const Event&)> checkpoint;
  /// Concurrent mode gives up with Error{Deadlock} after this long without progress.
  double stall_timeout_s = 10.0;
  /// Router messages per flush in concurrent mode.
  std::size_t batch = 64;
};

struct RunResult {
  std::vector<Output> outputs;
  RunStats stats;
  std::vector<CheckpointRecord> checkpoints;
  std::vector<ReleaseLog> logs;  // per worker, when requested
};

void write_outputs(std::ostream& out, const std::vector<Output>& outputs);
void write_checkpoints(std::ostream& out, const std::vector<CheckpointRecord>& cps);

/// Rejects programs, plans and inputs that fail validation: InvalidProgram,
/// InvalidPlan, or InvalidInput for monotonicity and stream attribution
/// errors. Missing progress is not rejected here; it shows up as Deadlock.
void precheck_run(const std::vector<std::string>& program_problems, const ProgramSignature& sig,
                  const SyncPlan& plan, const Streams& streams);

namespace detail {

template <class S>
struct WorkerMsg {
  enum class Kind { Process, Marker, Progress, JoinResponse, ForkResponse, Drain };
  Kind kind = Kind::Progress;
  Event event;
  OrderKey order;
  std::size_t slot = 0;
  std::uint64_t ingest_ns = 0;
  S state{};
};

inline std::uint64_t now_ns() {
  return static_cast<std::uint64_t>(
      std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now().time_since_epoch())
          .count());
}

template <class S>
std::vector<std::optional<S>> initial_states(const Program<S>& p, const SyncPlan& plan) {
  std::vector<std::optional<S>> out(plan.workers.size());
  auto n = p.alphabet.size();
  std::function<void(WorkerId, S)> give = [&](WorkerId w, S s) {
    const auto& node = plan.workers[w];
    if (node.is_leaf()) {
      out[w] = std::move(s);
      return;
    }
    auto [a, b] = p.forks.at(*node.fork)
                      .fn(s, plan.subtree_tags(node.children[0], n), plan.subtree_tags(node.children[1], n));
    give(node.children[0], std::move(a));
    give(node.children[1], std::move(b));
  };
  S rest = p.init;
  for (std::size_t i = 0; i < plan.roots.size(); ++i) {
    if (i + 1 == plan.roots.size()) {
      give(plan.roots[i], std::move(rest));
      break;
    }
    TagSet others(n);
    for (auto k = i + 1; k < plan.roots.size(); ++k) others |= plan.subtree_tags(plan.roots[k], n);
    auto [a, b] = p.forks.at(plan.forest[i].fork).fn(rest, plan.subtree_tags(plan.roots[i], n), others);
    give(plan.roots[i], std::move(a));
    rest = std::move(b);
  }
  return out;
}

/// Worker logic shared by both drivers. Not thread-safe; each instance is
/// confined to one execution unit.
template <class S>
class WorkerCore {
 public:
  using Msg = WorkerMsg<S>;
  using Send = std::function<void(WorkerId to, Msg msg)>;

  WorkerCore(const Program<S>& p, const SyncPlan& plan, const RoutingTable& routes, WorkerId id,
             std::optional<S> state, const RunOptions& opts, bool measure_latency, Send send)
      : p_(p),
        id_(id),
        node_(plan.workers[id]),
        mb_(routes.tracked(id), routes.sync(id), p.rel),
        state_(std::move(state)),
        opts_(opts),
        measure_(measure_latency),
        send_(std::move(send)) {
    auto par = plan.parents();
    parent_ = par[id];
    if (parent_) slot_ = plan.workers[*parent_].children[0] == id ? 0 : 1;
    if (!node_.is_leaf()) {
      auto n = p.alphabet.size();
      preds_[0] = plan.subtree_tags(node_.children[0], n);
      preds_[1] = plan.subtree_tags(node_.children[1], n);
    }
    checkpointing_ = plan.roots.size() == 1 && plan.roots.front() == id && static_cast<bool>(opts.checkpoint);
    stats_.name = node_.name;
    stats_.leaf = node_.is_leaf();
  }

  void deliver(Msg m) {
    switch (m.kind) {
      case Msg::Kind::Process:
      case Msg::Kind::Marker: {
        bool marker = m.kind == Msg::Kind::Marker;
        if (opts_.record_logs) log_.delivered.push_back({m.event.itag, m.event.order(), marker});
        mb_.insert(MailboxEntry{std::move(m.event), marker, m.ingest_ns});
        break;
      }
      case Msg::Kind::Progress:
        mb_.advance(m.order.stream, m.order);
        break;
      case Msg::Kind::JoinResponse:
        if (m.slot > 1 || children_[m.slot]) violation("duplicate join response");
        children_[m.slot] = std::make_pair(m.order, std::move(m.state));
        complete();
        break;
      case Msg::Kind::ForkResponse: {
        if (phase_ != Phase::AwaitParent || m.order != at_) violation("unexpected fork response");
        phase_ = Phase::Idle;
        if (node_.is_leaf()) {
          state_ = std::move(m.state);
        } else {
          fork_down(m.state);
        }
        break;
      }
      case Msg::Kind::Drain:
        drained_ = true;
        break;
    }
  }

  /// Releases and handles at most one mailbox entry.
  bool step() {
    if (phase_ != Phase::Idle) return false;
    auto e = mb_.pop();
    if (!e) return false;
    if (opts_.record_logs) log_.released.push_back({e->event.itag, e->order(), e->marker});
    at_ = e->order();
    if (node_.is_leaf()) {
      if (e->marker) {
        ++stats_.markers;
        phase_ = Phase::AwaitParent;
        send_up(std::move(*state_));
        state_.reset();
      } else {
        apply(*state_, *e);
      }
      return true;
    }
    phase_ = Phase::AwaitChildren;
    current_ = std::move(*e);
    complete();
    return true;
  }

  bool may_step() const { return phase_ == Phase::Idle && mb_.may_release(); }
  bool idle() const { return phase_ == Phase::Idle; }
  bool done() const { return drained_ && phase_ == Phase::Idle && mb_.empty(); }
  bool drained() const { return drained_; }
  const Mailbox& mailbox() const { return mb_; }

  std::vector<Output> outputs;
  std::vector<double> latencies_ms;
  std::vector<CheckpointRecord> checkpoints;

  WorkerStats& stats() { return stats_; }
  ReleaseLog& log() { return log_; }
  std::optional<WorkerId> parent() const { return parent_; }
  std::size_t slot() const { return slot_; }

 private:
  enum class Phase { Idle, AwaitChildren, AwaitParent };

  [[noreturn]] void violation(const std::string& why) {
    throw Error(ErrorCode::ProtocolViolation, node_.name + ": " + why);
  }

  void apply(S& s, const MailboxEntry& e) {
    auto before = outputs.size();
    p_.apply(node_.state_type, s, e.event, outputs);
    ++stats_.processed;
    stats_.outputs += outputs.size() - before;
    if (measure_ && outputs.size() > before) {
      auto lat = static_cast<double>(now_ns() - e.ingest_ns) / 1e6;
      for (auto i = before; i < outputs.size(); ++i) latencies_ms.push_back(lat);
    }
  }

  void send_up(S s) {
    Msg m;
    m.kind = Msg::Kind::JoinResponse;
    m.order = at_;
    m.slot = slot_;
    m.state = std::move(s);
    send_(*parent_, std::move(m));
  }

  void fork_down(const S& s) {
    auto [a, b] = p_.forks[*node_.fork].fn(s, preds_[0], preds_[1]);
    ++stats_.forks;
    S parts[2] = {std::move(a), std::move(b)};
    for (int c = 0; c < 2; ++c) {
      Msg m;
      m.kind = Msg::Kind::ForkResponse;
      m.order = at_;
      m.state = std::move(parts[c]);
      send_(node_.children[c], std::move(m));
    }
  }

  void complete() {
    if (phase_ != Phase::AwaitChildren || !children_[0] || !children_[1]) return;
    if (children_[0]->first != at_ || children_[1]->first != at_) violation("join response for a different event");
    S s = p_.joins[*node_.join].fn(children_[0]->second, children_[1]->second);
    ++stats_.joins;
    children_[0].reset();
    children_[1].reset();
    if (current_.marker) {
      ++stats_.markers;
      phase_ = Phase::AwaitParent;
      send_up(std::move(s));
      return;
    }
    if (checkpointing_ && opts_.checkpoint(current_.event)) checkpoints.push_back({at_, p_.canonical(s)});
    apply(s, current_);
    phase_ = Phase::Idle;
    fork_down(s);
  }

  const Program<S>& p_;
  WorkerId id_;
  const WorkerNode& node_;
  Mailbox mb_;
  std::optional<S> state_;
  const RunOptions& opts_;
  bool measure_;
  Send send_;
  std::optional<WorkerId> parent_;
  std::size_t slot_ = 0;
  TagSet preds_[2];
  bool checkpointing_ = false;

  Phase phase_ = Phase::Idle;
  OrderKey at_;
  MailboxEntry current_;
  std::optional<std::pair<OrderKey, S>> children_[2];
  bool drained_ = false;
  WorkerStats stats_;
  ReleaseLog log_;
};

template <class S>
void make_routed(const Message& m, const Delivery& d, std::uint64_t ingest, WorkerMsg<S>& out) {
  using K = typename WorkerMsg<S>::Kind;
  if (d.kind == Delivery::Kind::Progress) {
    out.kind = K::Progress;
    out.order = order_of(m);
  } else {
    out.kind = d.kind == Delivery::Kind::Process ? K::Process : K::Marker;
    out.event = std::get<Event>(m);
    out.ingest_ns = ingest;
  }
}

template <class S>
RunResult collect(std::vector<std::unique_ptr<WorkerCore<S>>>& cores, const SyncPlan& plan, const Streams& streams,
                     double seconds, bool latency, bool logs) {
  RunResult r;
  std::vector<double> lat;
  for (auto& c : cores) {
    r.outputs.insert(r.outputs.end(), std::make_move_iterator(c->outputs.begin()),
                     std::make_move_iterator(c->outputs.end()));
    r.checkpoints.insert(r.checkpoints.end(), c->checkpoints.begin(), c->checkpoints.end());
    lat.insert(lat.end(), c->latencies_ms.begin(), c->latencies_ms.end());
    r.stats.workers.push_back(c->stats());
    if (logs) r.logs.push_back(std::move(c->log()));
  }
  r.stats.roots = plan.roots;
  for (const auto& s : streams) {
    for (const auto& m : s) r.stats.events += is_heartbeat(m) ? 0 : 1;
  }
  r.stats.outputs = r.outputs.size();
  r.stats.seconds = seconds;
  r.stats.events_per_sec = seconds > 0 ? static_cast<double>(r.stats.events) / seconds : 0;
  if (latency && !lat.empty()) {
    std::sort(lat.begin(), lat.end());
    auto q = [&](double f) { return lat[std::min(lat.size() - 1, static_cast<std::size_t>(f * lat.size()))]; };
    r.stats.latency_ms = std::array<double, 3>{q(0.1), q(0.5), q(0.9)};
  }
  return r;
}

template <class S>
RunResult run_simulated(const Program<S>& p, const SyncPlan& plan, const Streams& streams,
                           const RunOptions& opts) {
  using Msg = WorkerMsg<S>;
  auto start = std::chrono::steady_clock::now();
  RoutingTable routes(plan);
  auto n = plan.workers.size();
  // Channels into each worker: router, parent, left child, right child.
  std::vector<std::array<std::deque<Msg>, 4>> chans(n);
  std::vector<std::unique_ptr<WorkerCore<S>>> cores;
  auto states = initial_states(p, plan);
  auto parents = plan.parents();
  for (WorkerId w = 0; w < n; ++w) {
    auto send = [&chans, &parents, &plan, w](WorkerId to, Msg m) {
      std::size_t ch = 1;
      if (parents[w] && *parents[w] == to) ch = plan.workers[to].children[0] == w ? 2 : 3;
      chans[to][ch].push_back(std::move(m));
    };
    cores.push_back(std::make_unique<WorkerCore<S>>(p, plan, routes, w, std::move(states[w]), opts, false, send));
  }

  std::vector<std::size_t> cursor(streams.size(), 0);
  std::vector<StreamId> live;
  for (StreamId s = 0; s < streams.size(); ++s) {
    if (!streams[s].empty()) live.push_back(s);
  }
  std::mt19937_64 rng(opts.seed);
  // Action encoding: 0 = router, otherwise 1 + worker * 5 + (channel | 4 for a release step).
  std::vector<std::size_t> enabled;
  bool drained = false;
  while (true) {
    enabled.clear();
    if (!live.empty() || !drained) enabled.push_back(0);
    for (WorkerId w = 0; w < n; ++w) {
      for (std::size_t c = 0; c < 4; ++c) {
        if (!chans[w][c].empty()) enabled.push_back(1 + w * 5 + c);
      }
      if (cores[w]->may_step()) enabled.push_back(1 + w * 5 + 4);
    }
    if (enabled.empty()) break;
    auto a = enabled[rng() % enabled.size()];
    if (a == 0) {
      if (live.empty()) {
        for (WorkerId w = 0; w < n; ++w) {
          Msg m;
          m.kind = Msg::Kind::Drain;
          chans[w][0].push_back(std::move(m));
        }
        drained = true;
        continue;
      }
      auto li = rng() % live.size();
      auto s = live[li];
      const auto& msg = streams[s][cursor[s]++];
      for (const auto& d : routes.route(msg)) {
        Msg m;
        make_routed<S>(msg, d, 0, m);
        chans[d.worker][0].push_back(std::move(m));
      }
      if (cursor[s] == streams[s].size()) {
        live[li] = live.back();
        live.pop_back();
      }
      continue;
    }
    auto w = (a - 1) / 5;
    auto c = (a - 1) % 5;
    if (c == 4) {
      cores[w]->step();
    } else {
      auto m = std::move(chans[w][c].front());
      chans[w][c].pop_front();
      cores[w]->deliver(std::move(m));
    }
  }
  std::string stuck;
  for (WorkerId w = 0; w < n; ++w) {
    if (!cores[w]->done()) {
      stuck += (stuck.empty() ? "" : ", ") + plan.workers[w].name + " (" +
               std::to_string(cores[w]->mailbox().pending()) + " pending" +
               (cores[w]->idle() ? "" : ", awaiting a synchronization") + ")";
    }
  }
  if (!stuck.empty()) throw Error(ErrorCode::Deadlock, "no worker can make progress: " + stuck);
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return collect(cores, plan, streams, secs, false, opts.record_logs);
}

template <class S>
RunResult run_concurrent(const Program<S>& p, const SyncPlan& plan, const Streams& streams,
                            const RunOptions& opts) {
  using Msg = WorkerMsg<S>;
  struct Inbox {
    std::mutex mu;
    std::condition_variable cv;
    std::vector<Msg> queue;
  };
  RoutingTable routes(plan);
  auto n = plan.workers.size();
  std::vector<Inbox> inboxes(n);
  std::atomic<bool> abort{false};
  std::atomic<std::uint64_t> progress{0};
  std::atomic<std::size_t> finished{0};
  std::mutex err_mu;
  std::exception_ptr error;
  auto fail = [&](std::exception_ptr e) {
    {
      std::lock_guard<std::mutex> lk(err_mu);
      if (!error) error = e;
    }
    abort = true;
    for (auto& ib : inboxes) {
      std::lock_guard<std::mutex> lk(ib.mu);
      ib.cv.notify_all();
    }
  };
  auto push = [&](WorkerId to, std::vector<Msg>& batch) {
    if (batch.empty()) return;
    auto& ib = inboxes[to];
    {
      std::lock_guard<std::mutex> lk(ib.mu);
      if (ib.queue.empty()) {
        ib.queue.swap(batch);
      } else {
        for (auto& m : batch) ib.queue.push_back(std::move(m));
      }
    }
    ib.cv.notify_one();
    batch.clear();
  };

  std::vector<std::unique_ptr<WorkerCore<S>>> cores;
  auto states = initial_states(p, plan);
  for (WorkerId w = 0; w < n; ++w) {
    auto send = [&push](WorkerId to, Msg m) {
      std::vector<Msg> one;
      one.push_back(std::move(m));
      push(to, one);
    };
    cores.push_back(std::make_unique<WorkerCore<S>>(p, plan, routes, w, std::move(states[w]), opts, true, send));
  }

  auto start = std::chrono::steady_clock::now();
  std::vector<std::thread> threads;
  for (WorkerId w = 0; w < n; ++w) {
    threads.emplace_back([&, w] {
      auto& core = *cores[w];
      auto& ib = inboxes[w];
      std::vector<Msg> local;
      try {
        while (!abort) {
          {
            std::unique_lock<std::mutex> lk(ib.mu);
            ib.cv.wait_for(lk, std::chrono::milliseconds(50), [&] { return !ib.queue.empty() || abort; });
            local.swap(ib.queue);
          }
          bool moved = !local.empty();
          for (auto& m : local) core.deliver(std::move(m));
          local.clear();
          while (core.step()) moved = true;
          if (moved) ++progress;
          if (core.done()) break;
        }
      } catch (...) {
        fail(std::current_exception());
      }
      ++finished;
    });
  }
  std::thread router([&] {
    try {
      std::vector<std::vector<Msg>> pending(n);
      std::size_t since_flush = 0;
      auto flush = [&] {
        for (WorkerId w = 0; w < n; ++w) push(w, pending[w]);
        since_flush = 0;
      };
      for (const auto& msg : merge_streams(streams)) {
        if (abort) return;
        auto ingest = now_ns();
        for (const auto& d : routes.route(msg)) {
          Msg m;
          make_routed<S>(msg, d, ingest, m);
          pending[d.worker].push_back(std::move(m));
        }
        if (++since_flush >= opts.batch) flush();
      }
      for (WorkerId w = 0; w < n; ++w) {
        Msg m;
        m.kind = Msg::Kind::Drain;
        pending[w].push_back(std::move(m));
      }
      flush();
    } catch (...) {
      fail(std::current_exception());
    }
  });

  auto last_progress = progress.load();
  auto last_change = std::chrono::steady_clock::now();
  while (finished.load() < n && !abort) {
    std::this_thread::sleep_for(std::chrono::milliseconds(5));
    auto cur = progress.load();
    auto now = std::chrono::steady_clock::now();
    if (cur != last_progress) {
      last_progress = cur;
      last_change = now;
    } else if (std::chrono::duration<double>(now - last_change).count() > opts.stall_timeout_s) {
      fail(std::make_exception_ptr(Error(ErrorCode::Deadlock, "workers stalled without progress")));
    }
  }
  router.join();
  for (auto& t : threads) t.join();
  double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (error) std::rethrow_exception(error);
  return collect(cores, plan, streams, secs, true, opts.record_logs);
}

}  // namespace detail

/// Runs `plan` on `streams`. The result's output multiset equals the
/// sequential fold over sort_streams(streams) for consistent programs and
/// valid plans and inputs.
template <class S>
RunResult run_plan(const Program<S>& p, const SyncPlan& plan, const Streams& streams,
                      const RunOptions& opts = {}) {
  precheck_run(p.validate(), p.signature(), plan, streams);
  if (opts.mode == Mode::Concurrent) return detail::run_concurrent(p, plan, streams, opts);
  return detail::run_simulated(p, plan, streams, opts);
}

}  // namespace dgs
