// SPDX-License-Identifier: Apache-2.0
#include "dgs/optimizer.hpp"

#include <algorithm>
#include <functional>
#include <map>
#include <numeric>

namespace dgs {

RateSpec::RateSpec(std::vector<ItagRate> entries) : entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end(), [](const auto& a, const auto& b) { return a.itag < b.itag; });
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    if (entries_[i].itag == entries_[i - 1].itag) throw Error(ErrorCode::Config, "duplicate rate entry");
  }
}

const ItagRate& RateSpec::at(const ImplTag& t) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), t,
                             [](const ItagRate& e, const ImplTag& x) { return e.itag < x; });
  if (it == entries_.end() || it->itag != t) {
    throw Error(ErrorCode::Config, "no rate for tag id " + std::to_string(t.tag) + " on stream " +
                                       std::to_string(t.stream));
  }
  return *it;
}

double RateSpec::rate(const ImplTag& t) const { return at(t).rate; }
const std::string& RateSpec::location(const ImplTag& t) const { return at(t).location; }

bool RateSpec::contains(const ImplTag& t) const {
  return std::binary_search(entries_.begin(), entries_.end(), ItagRate{t, 0, {}},
                            [](const ItagRate& a, const ItagRate& b) { return a.itag < b.itag; });
}

RateSpec RateSpec::uniform(const std::vector<ImplTag>& itags, double rate) {
  std::vector<ItagRate> entries;
  for (const auto& t : itags) entries.push_back({t, rate, {}});
  return RateSpec(std::move(entries));
}

RateSpec RateSpec::observed(const Streams& streams) {
  std::map<ImplTag, double> count;
  for (const auto& s : streams) {
    for (const auto& m : s) count[itag_of(m)] += 1;
  }
  std::vector<ItagRate> entries;
  for (const auto& [t, c] : count) entries.push_back({t, c, {}});
  return RateSpec(std::move(entries));
}

RateSpec rates_from_json(const nlohmann::json& j, const Alphabet& alphabet) {
  if (!j.is_object() || !j.contains("itags") || !j["itags"].is_array()) {
    throw Error(ErrorCode::Config, "rates file needs an itags array");
  }
  std::vector<ItagRate> entries;
  for (const auto& e : j["itags"]) {
    ItagRate r;
    r.itag = itag_from_json(e, alphabet);
    if (!e.contains("rate") || !e["rate"].is_number()) throw Error(ErrorCode::Config, "entry needs a rate: " + e.dump());
    r.rate = e["rate"].get<double>();
    if (!(r.rate > 0)) throw Error(ErrorCode::Config, "rates must be positive: " + e.dump());
    if (e.contains("location")) {
      if (!e["location"].is_string()) throw Error(ErrorCode::Config, "location must be a string: " + e.dump());
      r.location = e["location"].get<std::string>();
    }
    entries.push_back(std::move(r));
  }
  return RateSpec(std::move(entries));
}

nlohmann::json rates_to_json(const RateSpec& rates, const Alphabet& alphabet) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : rates.entries()) {
    auto j = itag_to_json(e.itag, alphabet);
    j["rate"] = e.rate;
    j["location"] = e.location;
    arr.push_back(std::move(j));
  }
  return {{"itags", arr}};
}

std::vector<std::vector<std::size_t>> TagGraph::components(const std::vector<bool>& alive) const {
  auto n = vertices.size();
  std::vector<int> comp(n, -1);
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t s = 0; s < n; ++s) {
    if (!alive[s] || comp[s] >= 0) continue;
    auto id = static_cast<int>(out.size());
    out.emplace_back();
    std::vector<std::size_t> stack{s};
    comp[s] = id;
    while (!stack.empty()) {
      auto v = stack.back();
      stack.pop_back();
      out.back().push_back(v);
      for (std::size_t u = 0; u < n; ++u) {
        if (alive[u] && comp[u] < 0 && adj[v][u]) {
          comp[u] = id;
          stack.push_back(u);
        }
      }
    }
    std::sort(out.back().begin(), out.back().end());
  }
  return out;
}

TagGraph build_tag_graph(std::vector<ImplTag> itags, const DependenceRelation& rel) {
  std::sort(itags.begin(), itags.end());
  itags.erase(std::unique(itags.begin(), itags.end()), itags.end());
  TagGraph g;
  auto n = itags.size();
  g.adj.assign(n, std::vector<bool>(n, false));
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = 0; b < n; ++b) g.adj[a][b] = rel.depends(itags[a].tag, itags[b].tag);
  }
  g.vertices = std::move(itags);
  return g;
}

SplitResult greedy_split(const TagGraph& g, const RateSpec& rates) {
  SplitResult out;
  auto n = g.vertices.size();
  std::vector<bool> alive(n, true);
  std::size_t left = n;
  auto comps = g.components(alive);
  while (comps.size() < 2 && left > 0) {
    std::size_t pick = n;
    for (std::size_t v = 0; v < n; ++v) {
      if (alive[v] && (pick == n || rates.rate(g.vertices[v]) < rates.rate(g.vertices[pick]))) pick = v;
    }
    alive[pick] = false;
    --left;
    out.removed.push_back(g.vertices[pick]);
    comps = g.components(alive);
  }
  if (comps.size() < 2) return out;
  std::vector<std::pair<double, std::vector<ImplTag>>> weighted;
  for (const auto& c : comps) {
    double total = 0;
    std::vector<ImplTag> tags;
    for (auto v : c) {
      total += rates.rate(g.vertices[v]);
      tags.push_back(g.vertices[v]);
    }
    weighted.emplace_back(total, std::move(tags));
  }
  std::stable_sort(weighted.begin(), weighted.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (auto& [_, tags] : weighted) out.components.push_back(std::move(tags));
  return out;
}

std::vector<ImplTag> TagTree::all_itags() const {
  std::vector<ImplTag> out = owned;
  for (const auto& c : children) {
    auto sub = c.all_itags();
    out.insert(out.end(), sub.begin(), sub.end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t TagTree::depth() const {
  std::size_t d = 0;
  for (const auto& c : children) d = std::max(d, c.depth());
  return d + 1;
}

namespace {

TagTree chain(std::vector<TagTree> parts, std::size_t from) {
  if (parts.size() - from == 1) return std::move(parts[from]);
  TagTree node;
  node.children.push_back(std::move(parts[from]));
  node.children.push_back(chain(std::move(parts), from + 1));
  return node;
}

}  // namespace

TagTree build_tag_tree(const std::vector<ImplTag>& itags, const DependenceRelation& rel, const RateSpec& rates) {
  auto g = build_tag_graph(itags, rel);
  auto split = greedy_split(g, rates);
  TagTree node;
  node.owned = std::move(split.removed);
  if (split.components.empty()) return node;
  std::vector<TagTree> parts;
  for (const auto& c : split.components) parts.push_back(build_tag_tree(c, rel, rates));
  auto first = std::move(parts.front());
  parts.erase(parts.begin());
  node.children.push_back(std::move(first));
  node.children.push_back(chain(std::move(parts), 0));
  return node;
}

namespace {

class Matcher {
 public:
  Matcher(const ProgramSignature& p, SyncPlan& plan) : p_(p), plan_(plan) {}

  bool assign(const TagTree& t, StateTypeId st) {
    const auto& pred = p_.state_preds.at(st);
    for (const auto& it : t.all_itags()) {
      if (!pred.contains(it.tag)) {
        note(t, st, "state type does not admit " + itag_str(it, p_.alphabet));
        return false;
      }
    }
    auto id = plan_.workers.size();
    WorkerNode node;
    node.state_type = st;
    node.itags = t.owned;
    std::sort(node.itags.begin(), node.itags.end());
    plan_.workers.push_back(std::move(node));
    if (t.children.empty()) return true;
    if (t.children.size() != 2) {
      note(t, st, "tree nodes need zero or two children");
      plan_.workers.resize(id);
      return false;
    }
    for (std::size_t f = 0; f < p_.forks.size(); ++f) {
      if (p_.forks[f].whole != st) continue;
      for (auto j : p_.joins_for(f)) {
        plan_.workers.resize(id + 1);
        auto left = plan_.workers.size();
        if (!assign(t.children[0], p_.forks[f].left)) continue;
        auto right = plan_.workers.size();
        if (!assign(t.children[1], p_.forks[f].right)) continue;
        auto& w = plan_.workers[id];
        w.fork = f;
        w.join = j;
        w.children = {left, right};
        return true;
      }
    }
    note(t, st, "no fork/join pair splits this node");
    plan_.workers.resize(id);
    return false;
  }

  std::string failure;

 private:
  void note(const TagTree& t, StateTypeId st, const std::string& why) {
    if (!failure.empty()) return;
    std::string owned;
    for (const auto& it : t.owned) owned += (owned.empty() ? "" : ", ") + itag_str(it, p_.alphabet);
    failure = "tree node {" + owned + "} with " + std::to_string(t.children.size()) + " children at state type " +
              std::to_string(st) + ": " + why;
  }

  const ProgramSignature& p_;
  SyncPlan& plan_;
};

}  // namespace

SyncPlan synthesize_plan(const ProgramSignature& p, const TagTree& tree, const RateSpec* rates) {
  SyncPlan plan;
  Matcher m(p, plan);
  if (!m.assign(tree, 0)) throw Error(ErrorCode::NoMatch, m.failure);
  plan.roots = {0};
  for (std::size_t w = 0; w < plan.workers.size(); ++w) plan.workers[w].name = "w" + std::to_string(w + 1);
  if (rates) {
    for (WorkerId w = 0; w < plan.workers.size(); ++w) {
      auto& node = plan.workers[w];
      const ImplTag* best = nullptr;
      if (!node.itags.empty()) {
        for (const auto& t : node.itags) {
          if (!best || rates->rate(t) > rates->rate(*best)) best = &t;
        }
        node.location = rates->location(*best);
      } else {
        // Itag-free workers sit with the least busy source below them.
        auto sub = plan.subtree_itags(w);
        for (const auto& t : sub) {
          if (!best || rates->rate(t) < rates->rate(*best)) best = &t;
        }
        if (best) node.location = rates->location(*best);
      }
    }
  }
  return plan;
}

double comm_cost(const SyncPlan& plan, const RateSpec& rates) {
  double cost = 0;
  for (WorkerId w = 0; w < plan.workers.size(); ++w) {
    const auto& node = plan.workers[w];
    auto fan_out = static_cast<double>(plan.subtree(w).size() - 1);
    for (const auto& t : node.itags) {
      auto r = rates.rate(t);
      cost += r * (node.is_leaf() ? 0.0 : 1.0) + r * fan_out;
    }
  }
  return cost;
}

SyncPlan optimize(const ProgramSignature& p, const std::vector<ImplTag>& itags, const RateSpec& rates) {
  return synthesize_plan(p, build_tag_tree(itags, p.rel, rates), &rates);
}

TagTree random_tag_tree(const std::vector<ImplTag>& itags, const DependenceRelation& rel, std::mt19937_64& rng,
                        std::size_t max_depth) {
  TagTree node;
  if (max_depth <= 1 || itags.size() <= 1 || rng() % 4 == 0) {
    node.owned = itags;
    return node;
  }
  auto g = build_tag_graph(itags, rel);
  auto n = g.vertices.size();
  std::vector<bool> alive;
  std::vector<std::vector<std::size_t>> comps;
  // Random removal orders often empty the graph before it falls apart, so
  // try a few before settling for a leaf.
  for (int attempt = 0; attempt < 8 && comps.size() < 2; ++attempt) {
    alive.assign(n, true);
    for (std::size_t v = 0; v < n; ++v) {
      if (rng() % 4 == 0) alive[v] = false;
    }
    comps = g.components(alive);
    while (comps.size() < 2) {
      std::vector<std::size_t> live;
      for (std::size_t v = 0; v < n; ++v) {
        if (alive[v]) live.push_back(v);
      }
      if (live.empty()) break;
      alive[live[rng() % live.size()]] = false;
      comps = g.components(alive);
    }
  }
  if (comps.size() < 2) {
    node.owned = g.vertices;
    return node;
  }
  for (std::size_t v = 0; v < n; ++v) {
    if (!alive[v]) node.owned.push_back(g.vertices[v]);
  }
  std::shuffle(comps.begin(), comps.end(), rng);
  auto cut = 1 + rng() % (comps.size() - 1);
  std::vector<ImplTag> left, right;
  for (std::size_t c = 0; c < comps.size(); ++c) {
    for (auto v : comps[c]) (c < cut ? left : right).push_back(g.vertices[v]);
  }
  node.children.push_back(random_tag_tree(left, rel, rng, max_depth - 1));
  node.children.push_back(random_tag_tree(right, rel, rng, max_depth - 1));
  return node;
}

SyncPlan peel_empty_roots(const SyncPlan& plan) {
  if (plan.roots.size() != 1) return plan;
  std::vector<WorkerId> roots;
  std::vector<ForestBinding> forest;
  std::vector<bool> drop(plan.workers.size(), false);
  auto cur = plan.roots.front();
  while (plan.workers[cur].itags.empty() && !plan.workers[cur].is_leaf()) {
    const auto& w = plan.workers[cur];
    forest.push_back({*w.fork, *w.join});
    drop[cur] = true;
    roots.push_back(w.children[0]);
    cur = w.children[1];
  }
  if (forest.empty()) return plan;
  roots.push_back(cur);
  std::vector<WorkerId> remap(plan.workers.size());
  SyncPlan out;
  for (WorkerId w = 0; w < plan.workers.size(); ++w) {
    if (drop[w]) continue;
    remap[w] = out.workers.size();
    out.workers.push_back(plan.workers[w]);
  }
  for (auto& w : out.workers) {
    for (auto& c : w.children) c = remap[c];
  }
  for (auto r : roots) out.roots.push_back(remap[r]);
  out.forest = std::move(forest);
  return out;
}

SyncPlan random_plan(const ProgramSignature& p, const std::vector<ImplTag>& itags, std::mt19937_64& rng,
                     std::size_t max_depth) {
  auto tree = random_tag_tree(itags, p.rel, rng, max_depth);
  SyncPlan plan;
  try {
    plan = synthesize_plan(p, tree);
  } catch (const Error& e) {
    if (e.code() != ErrorCode::NoMatch) throw;
    return single_worker_plan(itags);
  }
  if (rng() % 3 == 0) plan = peel_empty_roots(plan);
  return plan;
}

}  // namespace dgs
