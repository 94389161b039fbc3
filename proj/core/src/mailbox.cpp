// SPDX-License-Identifier: Apache-2.0
#include "dgs/mailbox.hpp"

#include <algorithm>
#include <map>

namespace dgs {

Mailbox::Mailbox(std::vector<ImplTag> tracked, const std::vector<bool>& sync, const DependenceRelation& rel)
    : tracked_(std::move(tracked)) {
  auto n = tracked_.size();
  dep_.assign(n * n, false);
  dep_list_.resize(n);
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) {
      bool d = rel.depends(tracked_[a].tag, tracked_[b].tag) || sync.at(a) || sync.at(b);
      dep_[a * n + b] = d;
      if (d) dep_list_[a].push_back(b);
    }
  }
  buffers_.resize(n);
  for (const auto& t : tracked_) streams_.push_back(t.stream);
  std::sort(streams_.begin(), streams_.end());
  streams_.erase(std::unique(streams_.begin(), streams_.end()), streams_.end());
  timers_.resize(streams_.size());
  for (const auto& t : tracked_) {
    stream_slot_.push_back(static_cast<std::size_t>(
        std::lower_bound(streams_.begin(), streams_.end(), t.stream) - streams_.begin()));
  }
}

std::optional<std::size_t> Mailbox::index_of(const ImplTag& t) const {
  for (std::size_t i = 0; i < tracked_.size(); ++i) {
    if (tracked_[i] == t) return i;
  }
  return std::nullopt;
}

bool Mailbox::tracks_stream(StreamId s) const { return std::binary_search(streams_.begin(), streams_.end(), s); }

std::optional<OrderKey> Mailbox::timer(StreamId s) const {
  auto it = std::lower_bound(streams_.begin(), streams_.end(), s);
  if (it == streams_.end() || *it != s) return std::nullopt;
  return timers_[static_cast<std::size_t>(it - streams_.begin())];
}

void Mailbox::advance(StreamId stream, OrderKey order) {
  auto it = std::lower_bound(streams_.begin(), streams_.end(), stream);
  if (it == streams_.end() || *it != stream) return;
  auto& t = timers_[static_cast<std::size_t>(it - streams_.begin())];
  if (t && order <= *t) {
    throw Error(ErrorCode::StaleMessage, "stream " + std::to_string(stream) + " went back to ts " +
                                             std::to_string(order.ts));
  }
  t = order;
  dirty_ = true;
}

void Mailbox::insert(MailboxEntry entry) {
  auto idx = index_of(entry.event.itag);
  if (!idx) throw Error(ErrorCode::ProtocolViolation, "entry for an untracked itag");
  advance(entry.event.itag.stream, entry.order());
  buffers_[*idx].push_back(std::move(entry));
  ++pending_;
}

void Mailbox::insert(const Message& m) {
  if (const auto* e = std::get_if<Event>(&m)) {
    insert(MailboxEntry{*e, false, 0});
  } else {
    const auto& h = std::get<Heartbeat>(m);
    advance(h.itag.stream, h.order());
  }
}

bool Mailbox::releasable(std::size_t i) const {
  const auto& head = buffers_[i].front();
  auto o = head.order();
  for (auto j : dep_list_[i]) {
    const auto& t = timers_[stream_slot_[j]];
    if (!t || *t < o) return false;
    if (j != i && !buffers_[j].empty() && !(o < buffers_[j].front().order())) return false;
  }
  return true;
}

std::optional<MailboxEntry> Mailbox::pop() {
  if (pending_ == 0 || !dirty_) return std::nullopt;
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < buffers_.size(); ++i) {
    if (buffers_[i].empty() || !releasable(i)) continue;
    if (!best || buffers_[i].front().order() < buffers_[*best].front().order()) best = i;
  }
  if (!best) {
    // Nothing can move until the next insert or timer advance.
    dirty_ = false;
    return std::nullopt;
  }
  auto out = std::move(buffers_[*best].front());
  buffers_[*best].pop_front();
  --pending_;
  return out;
}

std::vector<MailboxEntry> Mailbox::insert_release(const Message& m) {
  insert(m);
  std::vector<MailboxEntry> out;
  while (auto e = pop()) out.push_back(std::move(*e));
  return out;
}

std::vector<std::string> check_release_log(const ReleaseLog& log, const DependenceRelation& rel) {
  std::vector<std::string> out;
  auto a = log.delivered, b = log.released;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  if (a != b) {
    out.push_back("released " + std::to_string(b.size()) + " items, delivered " + std::to_string(a.size()) +
                  " (or contents differ)");
  }
  // Track the largest O-value released so far per itag, plus over markers.
  // A later release below a dependent maximum is an inversion.
  std::map<ImplTag, OrderKey> latest;
  std::optional<OrderKey> latest_marker;
  for (const auto& item : log.released) {
    const OrderKey* worst = nullptr;
    if (latest_marker && item.order < *latest_marker) worst = &*latest_marker;
    for (const auto& [t, o] : latest) {
      if (o <= item.order) continue;
      if (item.marker || rel.depends(t.tag, item.itag.tag)) worst = &o;
    }
    if (worst) {
      out.push_back("item at ts " + std::to_string(item.order.ts) + " on stream " + std::to_string(item.order.stream) +
                    " released after a dependent item at ts " + std::to_string(worst->ts));
      if (out.size() > 10) return out;
    }
    auto& l = latest[item.itag];
    l = std::max(l, item.order);
    if (item.marker) latest_marker = std::max(latest_marker.value_or(item.order), item.order);
  }
  return out;
}

}  // namespace dgs
