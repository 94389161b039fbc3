// SPDX-License-Identifier: Apache-2.0
#include "dgs/model.hpp"

#include <algorithm>
#include <bit>
#include <charconv>
#include <queue>
#include <set>

namespace dgs {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::UnknownTag: return "UnknownTag";
    case ErrorCode::UnsortedStream: return "UnsortedStream";
    case ErrorCode::InvalidDiagram: return "InvalidDiagram";
    case ErrorCode::PreconditionUnsatisfiable: return "PreconditionUnsatisfiable";
    case ErrorCode::IncompatiblePair: return "IncompatiblePair";
    case ErrorCode::GeneratorExhausted: return "GeneratorExhausted";
    case ErrorCode::Unowned: return "Unowned";
    case ErrorCode::NoMatch: return "NoMatch";
    case ErrorCode::StaleMessage: return "StaleMessage";
    case ErrorCode::ProtocolViolation: return "ProtocolViolation";
    case ErrorCode::InvalidProgram: return "InvalidProgram";
    case ErrorCode::InvalidPlan: return "InvalidPlan";
    case ErrorCode::InvalidInput: return "InvalidInput";
    case ErrorCode::Deadlock: return "Deadlock";
    case ErrorCode::Config: return "Config";
  }
  return "Unknown";
}

std::string Tag::str() const {
  if (!key) return name;
  return name + "(" + std::to_string(*key) + ")";
}

Tag Tag::parse(std::string_view text) {
  auto open = text.find('(');
  if (open == std::string_view::npos) {
    if (text.empty()) throw Error(ErrorCode::Config, "empty tag");
    return Tag{std::string(text), std::nullopt};
  }
  if (text.back() != ')' || open == 0) {
    throw Error(ErrorCode::Config, "malformed tag '" + std::string(text) + "'");
  }
  auto digits = text.substr(open + 1, text.size() - open - 2);
  std::int64_t key = 0;
  auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), key);
  if (ec != std::errc() || ptr != digits.data() + digits.size()) {
    throw Error(ErrorCode::Config, "malformed tag key in '" + std::string(text) + "'");
  }
  return Tag{std::string(text.substr(0, open)), key};
}

Alphabet::Alphabet(std::vector<Tag> tags) {
  for (auto& t : tags) add(std::move(t));
}

TagId Alphabet::add(Tag tag) {
  if (auto it = index_.find(tag); it != index_.end()) return it->second;
  auto id = static_cast<TagId>(tags_.size());
  index_.emplace(tag, id);
  tags_.push_back(std::move(tag));
  return id;
}

std::optional<TagId> Alphabet::find(const Tag& tag) const {
  if (auto it = index_.find(tag); it != index_.end()) return it->second;
  return std::nullopt;
}

TagId Alphabet::id(const Tag& tag) const {
  if (auto found = find(tag)) return *found;
  throw Error(ErrorCode::UnknownTag, tag.str());
}

TagSet::TagSet(std::size_t universe, std::initializer_list<TagId> ids) : TagSet(universe) {
  for (auto id : ids) insert(id);
}

TagSet TagSet::full(std::size_t universe) {
  TagSet s(universe);
  for (std::size_t i = 0; i < universe; ++i) s.insert(static_cast<TagId>(i));
  return s;
}

void TagSet::insert(TagId id) {
  if (id >= universe_) throw Error(ErrorCode::UnknownTag, "tag id " + std::to_string(id));
  words_[id / 64] |= (std::uint64_t{1} << (id % 64));
}

void TagSet::erase(TagId id) {
  if (id < universe_) words_[id / 64] &= ~(std::uint64_t{1} << (id % 64));
}

bool TagSet::empty() const noexcept {
  return std::all_of(words_.begin(), words_.end(), [](auto w) { return w == 0; });
}

std::size_t TagSet::size() const noexcept {
  std::size_t n = 0;
  for (auto w : words_) n += static_cast<std::size_t>(std::popcount(w));
  return n;
}

bool TagSet::subset_of(const TagSet& other) const noexcept {
  for (std::size_t i = 0; i < words_.size(); ++i) {
    auto theirs = i < other.words_.size() ? other.words_[i] : 0;
    if ((words_[i] & ~theirs) != 0) return false;
  }
  return true;
}

TagSet& TagSet::operator|=(const TagSet& other) {
  if (other.universe_ > universe_) {
    universe_ = other.universe_;
    words_.resize(other.words_.size(), 0);
  }
  for (std::size_t i = 0; i < other.words_.size(); ++i) words_[i] |= other.words_[i];
  return *this;
}

TagSet TagSet::operator|(const TagSet& other) const {
  TagSet out = *this;
  out |= other;
  return out;
}

TagSet TagSet::operator&(const TagSet& other) const {
  TagSet out(std::max(universe_, other.universe_));
  for (std::size_t i = 0; i < out.words_.size(); ++i) {
    auto a = i < words_.size() ? words_[i] : 0;
    auto b = i < other.words_.size() ? other.words_[i] : 0;
    out.words_[i] = a & b;
  }
  return out;
}

std::vector<TagId> TagSet::ids() const {
  std::vector<TagId> out;
  for (std::size_t i = 0; i < universe_; ++i) {
    if (contains(static_cast<TagId>(i))) out.push_back(static_cast<TagId>(i));
  }
  return out;
}

std::vector<std::pair<TagId, TagId>> validate_dependence(const DependenceRelation& rel,
                                                         const Alphabet& alphabet) {
  std::vector<std::pair<TagId, TagId>> bad;
  auto n = static_cast<TagId>(std::min(alphabet.size(), rel.universe()));
  for (TagId a = 0; a < n; ++a) {
    for (TagId b = a + 1; b < n; ++b) {
      if (rel.depends(a, b) != rel.depends(b, a)) bad.emplace_back(a, b);
    }
  }
  return bad;
}

bool indep_preds(const TagSet& p1, const TagSet& p2, const DependenceRelation& rel) {
  auto left = p1.ids();
  auto right = p2.ids();
  for (auto a : left) {
    for (auto b : right) {
      if (rel.depends(a, b)) return false;
    }
  }
  return true;
}

namespace {

void check_sorted(const Streams& streams) {
  for (std::size_t s = 0; s < streams.size(); ++s) {
    const auto& stream = streams[s];
    for (std::size_t i = 1; i < stream.size(); ++i) {
      if (order_of(stream[i]).ts <= order_of(stream[i - 1]).ts) {
        throw Error(ErrorCode::UnsortedStream,
                    "stream " + std::to_string(s) + " at index " + std::to_string(i));
      }
    }
  }
}

template <class Out, class Keep>
std::vector<Out> kway_merge(const Streams& streams, Keep keep) {
  check_sorted(streams);
  using Head = std::pair<OrderKey, std::pair<std::size_t, std::size_t>>;
  std::priority_queue<Head, std::vector<Head>, std::greater<>> heap;
  std::size_t total = 0;
  for (std::size_t s = 0; s < streams.size(); ++s) {
    total += streams[s].size();
    if (!streams[s].empty()) heap.push({order_of(streams[s][0]), {s, 0}});
  }
  std::vector<Out> out;
  out.reserve(total);
  while (!heap.empty()) {
    auto [key, pos] = heap.top();
    heap.pop();
    const auto& msg = streams[pos.first][pos.second];
    keep(out, msg);
    if (pos.second + 1 < streams[pos.first].size()) {
      heap.push({order_of(streams[pos.first][pos.second + 1]), {pos.first, pos.second + 1}});
    }
  }
  return out;
}

}  // namespace

std::vector<Event> sort_streams(const Streams& streams) {
  return kway_merge<Event>(streams, [](std::vector<Event>& out, const Message& m) {
    if (const auto* e = std::get_if<Event>(&m)) out.push_back(*e);
  });
}

std::vector<Message> merge_streams(const Streams& streams) {
  return kway_merge<Message>(streams,
                             [](std::vector<Message>& out, const Message& m) { out.push_back(m); });
}

std::vector<InputViolation> validate_input_instance(const Streams& streams) {
  std::vector<InputViolation> out;
  std::vector<std::optional<OrderKey>> last(streams.size());
  for (std::size_t s = 0; s < streams.size(); ++s) {
    const auto& stream = streams[s];
    for (std::size_t i = 0; i < stream.size(); ++i) {
      if (itag_of(stream[i]).stream != s) {
        out.push_back({InputViolation::Kind::WrongStream, static_cast<StreamId>(s), i});
      }
      if (i > 0 && order_of(stream[i]).ts <= order_of(stream[i - 1]).ts) {
        out.push_back({InputViolation::Kind::Monotonicity, static_cast<StreamId>(s), i});
      }
    }
    if (!stream.empty()) last[s] = order_of(stream.back());
  }
  for (std::size_t s = 0; s < streams.size(); ++s) {
    const auto& stream = streams[s];
    for (std::size_t i = 0; i < stream.size(); ++i) {
      if (is_heartbeat(stream[i])) continue;
      auto key = order_of(stream[i]);
      for (std::size_t j = 0; j < streams.size(); ++j) {
        if (j == s) continue;
        // Each stream's last message is its maximum only when the stream is
        // sorted; otherwise scan.
        bool found = false;
        if (last[j] && *last[j] > key) {
          found = true;
        } else {
          for (const auto& m : streams[j]) {
            if (order_of(m) > key) {
              found = true;
              break;
            }
          }
        }
        if (!found) {
          out.push_back({InputViolation::Kind::Progress, static_cast<StreamId>(s), i,
                         static_cast<StreamId>(j)});
        }
      }
    }
  }
  return out;
}

std::vector<ImplTag> itags_in(const Streams& streams) {
  std::set<ImplTag> seen;
  for (const auto& stream : streams) {
    for (const auto& m : stream) seen.insert(itag_of(m));
  }
  return {seen.begin(), seen.end()};
}

}  // namespace dgs
