// SPDX-License-Identifier: Apache-2.0
#include "app_impl.hpp"

namespace dgs {

Program<CounterState> key_counter_program(std::size_t keys, bool mutant) {
  Program<CounterState> p;
  p.name = "key-counter";
  for (std::size_t k = 1; k <= keys; ++k) {
    p.alphabet.add({"i", static_cast<std::int64_t>(k)});
    p.alphabet.add({"r", static_cast<std::int64_t>(k)});
  }
  auto n = p.alphabet.size();
  p.rel = DependenceRelation(n);
  for (std::size_t k = 1; k <= keys; ++k) {
    auto kk = static_cast<std::int64_t>(k);
    auto i = p.alphabet.id(Tag{"i", kk});
    auto r = p.alphabet.id(Tag{"r", kk});
    p.rel.add(r, r);
    p.rel.add(r, i);
  }
  auto idx = std::make_shared<detail::TagIndex>(p.alphabet);
  auto reset_tag = std::make_shared<std::map<std::int64_t, TagId>>();
  for (std::size_t k = 1; k <= keys; ++k) {
    (*reset_tag)[static_cast<std::int64_t>(k)] = p.alphabet.id(Tag{"r", static_cast<std::int64_t>(k)});
  }
  p.state_types.push_back({"counts", TagSet::full(n), [idx](CounterState& s, const Event& e, std::vector<Value>& out) {
                             auto k = idx->key[e.tag()];
                             if (idx->kind[e.tag()] == "i") {
                               ++s[k];
                             } else {
                               auto it = s.find(k);
                               out.emplace_back(it == s.end() ? 0 : it->second);
                               if (it != s.end()) s.erase(it);
                             }
                           }});
  // Each key's count goes to the side that may see its reset, else right.
  p.forks.push_back({{"split-by-reset", 0, 0, 0},
                     [reset_tag](const CounterState& s, const TagSet& p1, const TagSet&) {
                       std::pair<CounterState, CounterState> out;
                       for (const auto& [k, c] : s) {
                         auto it = reset_tag->find(k);
                         bool left = it != reset_tag->end() && p1.contains(it->second);
                         (left ? out.first : out.second)[k] = c;
                       }
                       return out;
                     }});
  if (mutant) {
    p.joins.push_back({{"max", 0, 0, 0}, [](const CounterState& a, const CounterState& b) {
                         CounterState out = a;
                         for (const auto& [k, c] : b) out[k] = std::max(out[k], c);
                         return out;
                       }});
  } else {
    p.joins.push_back({{"sum", 0, 0, 0}, [](const CounterState& a, const CounterState& b) {
                         CounterState out = a;
                         for (const auto& [k, c] : b) out[k] += c;
                         return out;
                       }});
  }
  p.canonical = [](const CounterState& s) {
    Value out = Value::object();
    for (const auto& [k, c] : s) {
      if (c != 0) out[std::to_string(k)] = c;
    }
    return out;
  };
  return p;
}

Generators<CounterState> key_counter_generators(const Program<CounterState>& p) {
  auto idx = std::make_shared<detail::TagIndex>(p.alphabet);
  auto keys = static_cast<std::int64_t>(p.alphabet.size() / 2);
  return detail::make_generators<CounterState>(
      [keys](std::mt19937_64& rng) {
        CounterState s;
        for (std::int64_t k = 1; k <= keys; ++k) {
          if (rng() % 3 != 0) s[k] = static_cast<std::int64_t>(rng() % 20);
        }
        return s;
      },
      [](TagId, std::mt19937_64&) { return Value(0); },
      [idx](TagId t) -> StreamId { return idx->kind[t] == "r" ? 0 : 1; });
}

namespace detail {

std::unique_ptr<AnyApp> make_key_counter(const GenConfig& cfg) {
  auto keys = std::max<std::size_t>(cfg.keys, 1);
  auto p = key_counter_program(keys);
  Layout layout;
  auto inc = std::make_shared<std::vector<TagId>>();
  auto reset = std::make_shared<std::vector<TagId>>();
  for (std::size_t k = 1; k <= keys; ++k) {
    inc->push_back(p.alphabet.id(Tag{"i", static_cast<std::int64_t>(k)}));
    reset->push_back(p.alphabet.id(Tag{"r", static_cast<std::int64_t>(k)}));
  }
  layout.sync = [reset](std::mt19937_64& rng) { return std::make_pair((*reset)[rng() % reset->size()], Value(0)); };
  layout.parallel = [inc](std::mt19937_64& rng, StreamId, std::size_t) {
    return std::make_pair((*inc)[rng() % inc->size()], Value(0));
  };
  layout.heartbeat_tags.push_back(reset->front());
  for (std::size_t s = 1; s <= cfg.streams; ++s) layout.heartbeat_tags.push_back(inc->front());
  auto mutant = key_counter_program(keys, true);
  return std::make_unique<App<CounterState>>("key-counter", std::move(p), std::move(mutant), std::move(layout),
                                             key_counter_generators);
}

}  // namespace detail
}  // namespace dgs
