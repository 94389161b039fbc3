// SPDX-License-Identifier: Apache-2.0
//
// Selective-reordering mailbox. Holds one buffer per tracked implementation
// tag and one timer per tracked stream, and releases a buffered message once
// no dependent message with a smaller O-value can still arrive or is still
// waiting.
#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <vector>

#include "dgs/model.hpp"

namespace dgs {

struct MailboxEntry {
  Event event;
  /// Set for events owned by an ancestor: they only mark where the worker
  /// has to hand its state up.
  bool marker = false;
  std::uint64_t ingest_ns = 0;

  OrderKey order() const noexcept { return event.order(); }
};

class Mailbox {
 public:
  Mailbox() = default;
  /// `sync[i]` makes tracked[i] dependent on every tracked itag.
  Mailbox(std::vector<ImplTag> tracked, const std::vector<bool>& sync, const DependenceRelation& rel);

  /// Buffers an entry and advances the timer of its stream.
  /// Throws Error{StaleMessage} if the stream timer is not below the entry,
  /// Error{ProtocolViolation} if the itag is not tracked.
  void insert(MailboxEntry entry);
  /// Heartbeat or forwarded progress: timer only.
  void advance(StreamId stream, OrderKey order);
  /// Events are buffered as owned; heartbeats advance timers.
  void insert(const Message& m);

  /// Removes and returns the releasable head with the smallest O-value.
  std::optional<MailboxEntry> pop();
  /// insert followed by popping until nothing is releasable.
  std::vector<MailboxEntry> insert_release(const Message& m);

  bool empty() const noexcept { return pending_ == 0; }
  /// False when the last pop found nothing and nothing changed since.
  bool may_release() const noexcept { return pending_ > 0 && dirty_; }
  std::size_t pending() const noexcept { return pending_; }
  const std::vector<ImplTag>& tracked() const noexcept { return tracked_; }
  bool tracks_stream(StreamId s) const;
  std::optional<OrderKey> timer(StreamId s) const;
  bool dependent(std::size_t a, std::size_t b) const { return dep_[a * tracked_.size() + b]; }
  std::optional<std::size_t> index_of(const ImplTag& t) const;

 private:
  bool releasable(std::size_t i) const;

  std::vector<ImplTag> tracked_;
  std::vector<bool> dep_;
  std::vector<std::vector<std::size_t>> dep_list_;
  std::vector<std::deque<MailboxEntry>> buffers_;
  std::vector<StreamId> streams_;                 // tracked stream ids, sorted
  std::vector<std::optional<OrderKey>> timers_;  // parallel to streams_
  std::vector<std::size_t> stream_slot_;          // per tracked itag
  std::size_t pending_ = 0;
  bool dirty_ = false;
};

/// Per-worker record of what reached the mailbox and what left it.
struct ReleaseLog {
  struct Item {
    ImplTag itag;
    OrderKey order;
    bool marker = false;
    auto operator<=>(const Item&) const = default;
  };
  std::vector<Item> delivered;
  std::vector<Item> released;
};

/// Violations of the release discipline: the released sequence must be a
/// permutation of the delivered one, and any two dependent items (tags
/// dependent, or either one a marker) must leave in O-order.
std::vector<std::string> check_release_log(const ReleaseLog& log, const DependenceRelation& rel);

}  // namespace dgs
