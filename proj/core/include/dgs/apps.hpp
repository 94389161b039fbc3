// SPDX-License-Identifier: Apache-2.0
//
// Example programs and their input generators.
//
// Stream layout shared by all generators: stream 0 carries the synchronizing
// events (resets, barriers, rules, address updates), streams 1..k carry the
// parallel events. Each round emits one event on every parallel stream, and
// every `sync_ratio` rounds a synchronizing event follows on stream 0.
#pragma once

#include <map>
#include <memory>
#include <string>
#include <vector>

#include "dgs/consistency.hpp"
#include "dgs/runtime.hpp"
#include "dgs/wire.hpp"

namespace dgs {

struct GenConfig {
  std::size_t streams = 2;  // parallel streams, in addition to stream 0
  std::size_t events_per_stream = 1000;
  std::size_t sync_ratio = 10000;
  /// 0 means only the terminal heartbeat on each stream.
  Timestamp heartbeat_period = 100;
  std::uint64_t seed = 1;
  /// Keys for key-counter, user ids for page-view.
  std::size_t keys = 2;
  /// Page-view: one address lookup per this many views.
  std::size_t get_every = 100;
};

using CounterState = std::map<std::int64_t, std::int64_t>;

struct FraudState {
  std::int64_t sum = 0;
  /// Timestamp of the last rule, -1 before any. The last rule's modulus is
  /// (rule_ts + 1) mod 1000.
  std::int64_t rule_ts = -1;

  std::int64_t prev_modulo() const { return (rule_ts + 1) % 1000; }
};

/// Key-counter: i(k) increments key k, r(k) outputs the count and resets it.
Program<CounterState> key_counter_program(std::size_t keys, bool mutant = false);
/// a(i) adds its value, b outputs the sum since the previous barrier.
Program<std::int64_t> value_barrier_program(std::size_t value_streams, bool mutant = false);
/// Address updates per user, page views and lookups that read the address.
Program<CounterState> page_view_program(std::size_t uids, bool mutant = false);
/// Transactions flagged when their value matches the last rule modulo 1000.
Program<FraudState> fraud_program(std::size_t value_streams, bool mutant = false);

Generators<CounterState> key_counter_generators(const Program<CounterState>& p);
Generators<std::int64_t> value_barrier_generators(const Program<std::int64_t>& p);
Generators<CounterState> page_view_generators(const Program<CounterState>& p);
Generators<FraudState> fraud_generators(const Program<FraudState>& p);

struct CheckResult {
  ConditionTally c1, c2, c3;
  Value report;
  /// Every recorded witness fails again when replayed.
  bool witnesses_replay = true;

  std::size_t failures() const { return c1.failures + c2.failures + c3.failures; }
};

/// Type-erased view of an example program with its generators.
class AnyApp {
 public:
  virtual ~AnyApp() = default;

  virtual std::string name() const = 0;
  virtual ProgramSignature signature() const = 0;
  /// Heartbeat tag for each stream id.
  virtual std::vector<TagId> heartbeat_tags() const = 0;
  virtual Streams generate(const GenConfig& cfg) const = 0;
  virtual std::vector<Output> sequential(const std::vector<Event>& input) const = 0;
  /// Canonical form of the sequential fold.
  virtual Value fold_state(const std::vector<Event>& input) const = 0;
  virtual RunResult run(const SyncPlan& plan, const Streams& streams, const RunOptions& opts) const = 0;
  virtual CheckResult check(const SuiteConfig& cfg, bool mutant) const = 0;
  virtual std::vector<Output> eval_random_wire(const std::vector<Event>& input, int depth,
                                               std::uint64_t seed) const = 0;
};

std::vector<std::string> app_names();
/// Throws Error{Config} for unknown names. The program is sized for
/// `cfg.streams` and `cfg.keys`.
std::unique_ptr<AnyApp> make_app(std::string_view name, const GenConfig& cfg);

}  // namespace dgs
