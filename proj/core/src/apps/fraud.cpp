// SPDX-License-Identifier: Apache-2.0
#include "app_impl.hpp"

namespace dgs {

Program<FraudState> fraud_program(std::size_t value_streams, bool mutant) {
  Program<FraudState> p;
  p.name = "fraud";
  for (std::size_t i = 1; i <= value_streams; ++i) p.alphabet.add({"a", static_cast<std::int64_t>(i)});
  auto b = p.alphabet.add({"b", std::nullopt});
  auto n = p.alphabet.size();
  p.rel = DependenceRelation(n);
  for (TagId t = 0; t < n; ++t) p.rel.add(t, b);
  p.state_types.push_back({"sum-and-rule", TagSet::full(n), [b](FraudState& s, const Event& e, std::vector<Value>& out) {
                             if (e.tag() == b) {
                               out.push_back({{"sum", s.sum}});
                               s.rule_ts = static_cast<std::int64_t>(e.ts);
                               return;
                             }
                             auto v = e.payload.get<std::int64_t>();
                             if (v % 1000 == s.prev_modulo()) out.push_back({{"fraud", v}});
                             s.sum += v;
                           }});
  p.forks.push_back({{"sum-follows-rule", 0, 0, 0}, [b](const FraudState& s, const TagSet&, const TagSet& p2) {
                       FraudState rest{0, s.rule_ts};
                       return p2.contains(b) ? std::make_pair(rest, s) : std::make_pair(s, rest);
                     }});
  if (mutant) {
    p.joins.push_back({{"left-rule", 0, 0, 0}, [](const FraudState& x, const FraudState& y) {
                         return FraudState{x.sum + y.sum, x.rule_ts};
                       }});
  } else {
    // Rules are totally ordered, so the later one is the current one.
    p.joins.push_back({{"latest-rule", 0, 0, 0}, [](const FraudState& x, const FraudState& y) {
                         return FraudState{x.sum + y.sum, std::max(x.rule_ts, y.rule_ts)};
                       }});
  }
  p.canonical = [](const FraudState& s) { return Value{{"sum", s.sum}, {"rule_ts", s.rule_ts}}; };
  return p;
}

Generators<FraudState> fraud_generators(const Program<FraudState>& p) {
  auto b = p.alphabet.id(Tag{"b", std::nullopt});
  return detail::make_generators<FraudState>(
      [](std::mt19937_64& rng) {
        return FraudState{static_cast<std::int64_t>(rng() % 10000), static_cast<std::int64_t>(rng() % 10) - 1};
      },
      [b](TagId t, std::mt19937_64& rng) {
        if (t == b) return Value(0);
        // Small residues make matches against the rule modulus likely.
        auto hi = static_cast<std::int64_t>(rng() % 10) * 1000;
        auto lo = static_cast<std::int64_t>(rng() & 1U ? rng() % 10 : rng() % 1000);
        return Value(hi + lo);
      },
      [b](TagId t) -> StreamId { return t == b ? 0 : 1; });
}

namespace detail {

std::unique_ptr<AnyApp> make_fraud(const GenConfig& cfg) {
  auto k = std::max<std::size_t>(cfg.streams, 1);
  auto p = fraud_program(k);
  auto b = p.alphabet.id(Tag{"b", std::nullopt});
  Layout layout;
  layout.sync = [b](std::mt19937_64&) { return std::make_pair(b, Value(0)); };
  layout.parallel = [](std::mt19937_64& rng, StreamId s, std::size_t) {
    return std::make_pair(static_cast<TagId>(s - 1), Value(static_cast<std::int64_t>(rng() % 10000)));
  };
  layout.heartbeat_tags.push_back(b);
  for (std::size_t s = 1; s <= k; ++s) layout.heartbeat_tags.push_back(static_cast<TagId>(s - 1));
  auto mutant = fraud_program(k, true);
  return std::make_unique<App<FraudState>>("fraud", std::move(p), std::move(mutant), std::move(layout),
                                           fraud_generators);
}

}  // namespace detail
}  // namespace dgs
