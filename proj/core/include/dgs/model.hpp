// SPDX-License-Identifier: Apache-2.0
//
// Core data model: tags, implementation tags, events, heartbeats, the total
// event order and the dependence relation.
#pragma once

#include <compare>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "dgs/error.hpp"

namespace dgs {

using TagId = std::uint32_t;
using StreamId = std::uint32_t;
using Timestamp = std::uint64_t;

/// Opaque application value. The framework never looks inside payloads.
using Value = nlohmann::json;

/// Symbolic tag, e.g. `i(3)`, `r(1)` or `b`.
struct Tag {
  std::string name;
  std::optional<std::int64_t> key;

  auto operator<=>(const Tag&) const = default;
  bool operator==(const Tag&) const = default;

  std::string str() const;
  /// Parses `name` or `name(key)`. Throws Error{Config} on malformed input.
  static Tag parse(std::string_view text);
};

/// The finite tag alphabet of a program. Tags are interned to dense ids.
class Alphabet {
 public:
  Alphabet() = default;
  explicit Alphabet(std::vector<Tag> tags);

  TagId add(Tag tag);
  std::optional<TagId> find(const Tag& tag) const;
  /// Throws Error{UnknownTag}.
  TagId id(const Tag& tag) const;
  TagId id(std::string_view text) const { return id(Tag::parse(text)); }
  const Tag& tag(TagId id) const { return tags_.at(id); }
  std::string name(TagId id) const { return tags_.at(id).str(); }
  std::size_t size() const noexcept { return tags_.size(); }
  const std::vector<Tag>& tags() const noexcept { return tags_; }

 private:
  std::vector<Tag> tags_;
  std::map<Tag, TagId> index_;
};

/// A finite set of tags. Predicates over events are represented this way.
class TagSet {
 public:
  TagSet() = default;
  explicit TagSet(std::size_t universe) : universe_(universe), words_((universe + 63) / 64, 0) {}
  TagSet(std::size_t universe, std::initializer_list<TagId> ids);

  static TagSet full(std::size_t universe);

  std::size_t universe() const noexcept { return universe_; }
  void insert(TagId id);
  void erase(TagId id);
  bool contains(TagId id) const noexcept {
    return id < universe_ && ((words_[id / 64] >> (id % 64)) & 1U) != 0;
  }
  bool empty() const noexcept;
  std::size_t size() const noexcept;
  bool subset_of(const TagSet& other) const noexcept;
  TagSet operator|(const TagSet& other) const;
  TagSet operator&(const TagSet& other) const;
  TagSet& operator|=(const TagSet& other);
  std::vector<TagId> ids() const;

  bool operator==(const TagSet& other) const = default;

 private:
  std::size_t universe_ = 0;
  std::vector<std::uint64_t> words_;
};

/// Symmetric relation over tags. Entries are stored directed so that an
/// asymmetric relation can be built and then rejected by validation.
class DependenceRelation {
 public:
  DependenceRelation() = default;
  explicit DependenceRelation(std::size_t universe)
      : universe_(universe), bits_(universe * universe, false) {}

  std::size_t universe() const noexcept { return universe_; }
  void add(TagId a, TagId b) {
    add_directed(a, b);
    add_directed(b, a);
  }
  void add_directed(TagId a, TagId b) { bits_.at(static_cast<std::size_t>(a) * universe_ + b) = true; }
  void remove(TagId a, TagId b) {
    bits_.at(static_cast<std::size_t>(a) * universe_ + b) = false;
    bits_.at(static_cast<std::size_t>(b) * universe_ + a) = false;
  }
  bool depends(TagId a, TagId b) const {
    return bits_.at(static_cast<std::size_t>(a) * universe_ + b);
  }
  bool independent(TagId a, TagId b) const { return !depends(a, b); }

 private:
  std::size_t universe_ = 0;
  std::vector<bool> bits_;
};

/// Returns the unordered pairs (a, b) for which only one direction is stored.
std::vector<std::pair<TagId, TagId>> validate_dependence(const DependenceRelation& rel,
                                                         const Alphabet& alphabet);

/// True iff every tag of p1 is independent of every tag of p2.
bool indep_preds(const TagSet& p1, const TagSet& p2, const DependenceRelation& rel);

/// Implementation tag: a tag together with the stream it arrives on.
struct ImplTag {
  TagId tag = 0;
  StreamId stream = 0;

  auto operator<=>(const ImplTag&) const = default;
  bool operator==(const ImplTag&) const = default;
};

/// Position in the total order O: by timestamp, then stream id.
struct OrderKey {
  Timestamp ts = 0;
  StreamId stream = 0;

  auto operator<=>(const OrderKey&) const = default;
  bool operator==(const OrderKey&) const = default;

  static constexpr OrderKey min() { return {0, 0}; }
};

struct Event {
  ImplTag itag;
  Timestamp ts = 0;
  Value payload;

  OrderKey order() const noexcept { return {ts, itag.stream}; }
  TagId tag() const noexcept { return itag.tag; }
};

struct Heartbeat {
  ImplTag itag;
  Timestamp ts = 0;

  OrderKey order() const noexcept { return {ts, itag.stream}; }
};

using Message = std::variant<Event, Heartbeat>;
using Stream = std::vector<Message>;
/// Input streams; `streams[i]` holds the messages of stream id i.
using Streams = std::vector<Stream>;

inline const ImplTag& itag_of(const Message& m) {
  return std::visit([](const auto& x) -> const ImplTag& { return x.itag; }, m);
}
inline OrderKey order_of(const Message& m) {
  return std::visit([](const auto& x) { return x.order(); }, m);
}
inline bool is_heartbeat(const Message& m) { return std::holds_alternative<Heartbeat>(m); }

/// Merges individually sorted streams by O and drops heartbeats.
/// Throws Error{UnsortedStream} if a stream is not strictly increasing.
std::vector<Event> sort_streams(const Streams& streams);

/// Like sort_streams but keeps heartbeats.
std::vector<Message> merge_streams(const Streams& streams);

struct InputViolation {
  enum class Kind { Monotonicity, WrongStream, Progress };
  Kind kind;
  StreamId stream;
  std::size_t index;
  /// For progress violations: the stream lacking a later message.
  StreamId other = 0;

  bool operator==(const InputViolation&) const = default;
};

/// Checks per-stream monotonicity and progress. An event only needs a later
/// message on every *other* stream.
std::vector<InputViolation> validate_input_instance(const Streams& streams);

/// Set of implementation tags that occur (events or heartbeats) in the input.
std::vector<ImplTag> itags_in(const Streams& streams);

}  // namespace dgs
