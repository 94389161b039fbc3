// SPDX-License-Identifier: Apache-2.0
#include "app_impl.hpp"

namespace dgs {

namespace {

const char* const kUpdate = "update_user_address";
const char* const kGet = "get_user_address";
const char* const kView = "page_view";

}  // namespace

Program<CounterState> page_view_program(std::size_t uids, bool mutant) {
  Program<CounterState> p;
  p.name = "page-view";
  for (std::size_t u = 1; u <= uids; ++u) {
    auto uu = static_cast<std::int64_t>(u);
    p.alphabet.add({kUpdate, uu});
    p.alphabet.add({kGet, uu});
    p.alphabet.add({kView, uu});
  }
  auto n = p.alphabet.size();
  p.rel = DependenceRelation(n);
  // Per user: update <-> update, get, page_view.
  auto uid_tags = std::make_shared<std::map<std::int64_t, std::vector<TagId>>>();
  for (std::size_t u = 1; u <= uids; ++u) {
    auto uu = static_cast<std::int64_t>(u);
    auto up = p.alphabet.id(Tag{kUpdate, uu});
    auto get = p.alphabet.id(Tag{kGet, uu});
    auto view = p.alphabet.id(Tag{kView, uu});
    p.rel.add(up, up);
    p.rel.add(up, get);
    p.rel.add(up, view);
    (*uid_tags)[uu] = {up, get, view};
  }
  auto idx = std::make_shared<detail::TagIndex>(p.alphabet);
  p.state_types.push_back(
      {"addresses", TagSet::full(n), [idx](CounterState& s, const Event& e, std::vector<Value>& out) {
         const auto& kind = idx->kind[e.tag()];
         auto uid = idx->key[e.tag()];
         if (kind == kUpdate) {
           auto zip = e.payload.get<std::int64_t>();
           s[uid] = zip;
           out.push_back({{"event", kind}, {"uid", uid}, {"zipcode", zip}});
           return;
         }
         auto it = s.find(uid);
         Value zip = it == s.end() ? Value("no_zipcode") : Value(it->second);
         out.push_back({{"event", kind}, {"uid", uid}, {"zipcode", zip}});
       }});
  p.forks.push_back(
      {{mutant ? "filter-both" : "filter-or-left", 0, 0, 0},
       [uid_tags, mutant](const CounterState& s, const TagSet& p1, const TagSet& p2) {
         std::pair<CounterState, CounterState> out;
         for (const auto& [uid, zip] : s) {
           bool in1 = false, in2 = false;
           auto it = uid_tags->find(uid);
           if (it != uid_tags->end()) {
             for (auto t : it->second) {
               in1 = in1 || p1.contains(t);
               in2 = in2 || p2.contains(t);
             }
           }
           // A user neither side may touch is kept on the left so that the
           // join restores it.
           if (in1 || (!in2 && !mutant)) out.first[uid] = zip;
           if (in2) out.second[uid] = zip;
         }
         return out;
       }});
  p.joins.push_back({{"merge-left", 0, 0, 0}, [](const CounterState& a, const CounterState& b) {
                       CounterState out = b;
                       for (const auto& [k, v] : a) out[k] = v;
                       return out;
                     }});
  p.canonical = [](const CounterState& s) {
    Value out = Value::object();
    for (const auto& [k, v] : s) out[std::to_string(k)] = v;
    return out;
  };
  return p;
}

Generators<CounterState> page_view_generators(const Program<CounterState>& p) {
  auto idx = std::make_shared<detail::TagIndex>(p.alphabet);
  auto uids = static_cast<std::int64_t>(p.alphabet.size() / 3);
  return detail::make_generators<CounterState>(
      [uids](std::mt19937_64& rng) {
        CounterState s;
        for (std::int64_t u = 1; u <= uids; ++u) {
          if (rng() % 3 != 0) s[u] = static_cast<std::int64_t>(rng() % 100000);
        }
        return s;
      },
      [idx](TagId t, std::mt19937_64& rng) {
        return idx->kind[t] == kUpdate ? Value(static_cast<std::int64_t>(rng() % 100000)) : Value(0);
      },
      [idx](TagId t) -> StreamId { return idx->kind[t] == kUpdate ? 0 : 1; });
}

namespace detail {

std::unique_ptr<AnyApp> make_page_view(const GenConfig& cfg) {
  auto uids = std::max<std::size_t>(cfg.keys, 1);
  auto p = page_view_program(uids);
  std::vector<TagId> updates, gets, views;
  for (std::size_t u = 1; u <= uids; ++u) {
    auto uu = static_cast<std::int64_t>(u);
    updates.push_back(p.alphabet.id(Tag{kUpdate, uu}));
    gets.push_back(p.alphabet.id(Tag{kGet, uu}));
    views.push_back(p.alphabet.id(Tag{kView, uu}));
  }
  // Views are spread over the first two pages only.
  auto hot = std::min<std::size_t>(2, uids);
  auto get_every = std::max<std::size_t>(cfg.get_every, 1);
  Layout layout;
  layout.sync = [updates](std::mt19937_64& rng) {
    return std::make_pair(updates[rng() % updates.size()], Value(static_cast<std::int64_t>(rng() % 100000)));
  };
  layout.parallel = [gets, views, hot, get_every](std::mt19937_64& rng, StreamId, std::size_t n) {
    auto u = rng() % hot;
    return std::make_pair((n + 1) % get_every == 0 ? gets[u] : views[u], Value(0));
  };
  layout.heartbeat_tags.push_back(updates.front());
  for (std::size_t s = 1; s <= cfg.streams; ++s) layout.heartbeat_tags.push_back(views.front());
  auto mutant = page_view_program(uids, true);
  return std::make_unique<App<CounterState>>("page-view", std::move(p), std::move(mutant), std::move(layout),
                                             page_view_generators);
}

}  // namespace detail
}  // namespace dgs
