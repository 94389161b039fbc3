// SPDX-License-Identifier: Apache-2.0
#include "app_impl.hpp"

namespace dgs {

Program<std::int64_t> value_barrier_program(std::size_t value_streams, bool mutant) {
  Program<std::int64_t> p;
  p.name = "value-barrier";
  for (std::size_t i = 1; i <= value_streams; ++i) p.alphabet.add({"a", static_cast<std::int64_t>(i)});
  auto b = p.alphabet.add({"b", std::nullopt});
  auto n = p.alphabet.size();
  p.rel = DependenceRelation(n);
  for (TagId t = 0; t < n; ++t) p.rel.add(t, b);
  p.init = 0;
  p.state_types.push_back({"sum", TagSet::full(n), [b](std::int64_t& s, const Event& e, std::vector<Value>& out) {
                             if (e.tag() == b) {
                               out.emplace_back(s);
                               s = 0;
                             } else {
                               s += e.payload.get<std::int64_t>();
                             }
                           }});
  if (mutant) {
    p.forks.push_back({{"duplicate", 0, 0, 0}, [](const std::int64_t& s, const TagSet&, const TagSet&) {
                         return std::make_pair(s, s);
                       }});
  } else {
    // The running sum follows the barrier; without one on the right it stays left.
    p.forks.push_back({{"sum-follows-barrier", 0, 0, 0},
                       [b](const std::int64_t& s, const TagSet&, const TagSet& p2) {
                         return p2.contains(b) ? std::make_pair(std::int64_t{0}, s) : std::make_pair(s, std::int64_t{0});
                       }});
  }
  p.joins.push_back({{"add", 0, 0, 0}, [](const std::int64_t& x, const std::int64_t& y) { return x + y; }});
  p.canonical = [](const std::int64_t& s) { return Value(s); };
  return p;
}

Generators<std::int64_t> value_barrier_generators(const Program<std::int64_t>& p) {
  auto b = p.alphabet.id(Tag{"b", std::nullopt});
  return detail::make_generators<std::int64_t>(
      [](std::mt19937_64& rng) { return static_cast<std::int64_t>(rng() % 10000); },
      [b](TagId t, std::mt19937_64& rng) { return t == b ? Value(0) : Value(static_cast<std::int64_t>(rng() % 10000)); },
      [b](TagId t) -> StreamId { return t == b ? 0 : 1; });
}

namespace detail {

std::unique_ptr<AnyApp> make_value_barrier(const GenConfig& cfg) {
  auto k = std::max<std::size_t>(cfg.streams, 1);
  auto p = value_barrier_program(k);
  auto b = p.alphabet.id(Tag{"b", std::nullopt});
  Layout layout;
  layout.sync = [b](std::mt19937_64&) { return std::make_pair(b, Value(0)); };
  layout.parallel = [](std::mt19937_64& rng, StreamId s, std::size_t) {
    // a(i) has id i - 1.
    return std::make_pair(static_cast<TagId>(s - 1), Value(static_cast<std::int64_t>(rng() % 10000)));
  };
  layout.heartbeat_tags.push_back(b);
  for (std::size_t s = 1; s <= k; ++s) layout.heartbeat_tags.push_back(static_cast<TagId>(s - 1));
  auto mutant = value_barrier_program(k, true);
  return std::make_unique<App<std::int64_t>>("value-barrier", std::move(p), std::move(mutant), std::move(layout),
                                             value_barrier_generators);
}

}  // namespace detail
}  // namespace dgs
