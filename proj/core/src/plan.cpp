// SPDX-License-Identifier: Apache-2.0
#include "dgs/plan.hpp"

#include <algorithm>
#include <map>
#include <ostream>
#include <set>

namespace dgs {

bool WorkerNode::owns(const ImplTag& t) const { return std::find(itags.begin(), itags.end(), t) != itags.end(); }

std::vector<std::optional<WorkerId>> SyncPlan::parents() const {
  std::vector<std::optional<WorkerId>> out(workers.size());
  for (WorkerId w = 0; w < workers.size(); ++w) {
    for (auto c : workers[w].children) {
      if (c < out.size()) out[c] = w;
    }
  }
  return out;
}

std::vector<WorkerId> SyncPlan::ancestors(WorkerId w) const {
  auto par = parents();
  std::vector<WorkerId> out;
  for (auto p = par.at(w); p; p = par[*p]) {
    out.push_back(*p);
    if (out.size() > workers.size()) break;  // cycle guard
  }
  return out;
}

std::vector<WorkerId> SyncPlan::subtree(WorkerId w) const {
  std::vector<WorkerId> out;
  std::vector<WorkerId> stack{w};
  while (!stack.empty() && out.size() <= workers.size()) {
    auto cur = stack.back();
    stack.pop_back();
    out.push_back(cur);
    const auto& ch = workers.at(cur).children;
    for (auto it = ch.rbegin(); it != ch.rend(); ++it) stack.push_back(*it);
  }
  return out;
}

std::vector<ImplTag> SyncPlan::subtree_itags(WorkerId w) const {
  std::vector<ImplTag> out;
  for (auto d : subtree(w)) out.insert(out.end(), workers[d].itags.begin(), workers[d].itags.end());
  std::sort(out.begin(), out.end());
  return out;
}

TagSet SyncPlan::subtree_tags(WorkerId w, std::size_t universe) const {
  TagSet out(universe);
  for (const auto& t : subtree_itags(w)) out.insert(t.tag);
  return out;
}

std::size_t SyncPlan::depth() const {
  std::size_t best = 0;
  std::vector<std::pair<WorkerId, std::size_t>> stack;
  for (auto r : roots) stack.emplace_back(r, 1);
  std::size_t guard = 0;
  while (!stack.empty() && guard++ <= workers.size()) {
    auto [w, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    for (auto c : workers.at(w).children) stack.emplace_back(c, d + 1);
  }
  return best;
}

std::optional<WorkerId> SyncPlan::find(std::string_view name) const {
  for (WorkerId w = 0; w < workers.size(); ++w) {
    if (workers[w].name == name) return w;
  }
  return std::nullopt;
}

std::string_view to_string(PlanViolation::Kind k) {
  switch (k) {
    case PlanViolation::Kind::Structure: return "structure";
    case PlanViolation::Kind::V1: return "V1";
    case PlanViolation::Kind::V2: return "V2";
    case PlanViolation::Kind::Coverage: return "coverage";
  }
  return "?";
}

std::string itag_str(const ImplTag& t, const Alphabet& alphabet) {
  return alphabet.name(t.tag) + "@" + std::to_string(t.stream);
}

namespace {

bool check_structure(const SyncPlan& plan, std::vector<PlanViolation>& out) {
  auto n = plan.workers.size();
  bool ok = true;
  auto bad = [&](const std::string& who, const std::string& what) {
    out.push_back({PlanViolation::Kind::Structure, who, what});
    ok = false;
  };
  if (n == 0) {
    bad("", "plan has no workers");
    return false;
  }
  std::vector<int> in_degree(n, 0);
  std::set<std::string> names;
  for (const auto& w : plan.workers) {
    if (!names.insert(w.name).second) bad(w.name, "duplicate worker name");
    if (!w.children.empty() && w.children.size() != 2) bad(w.name, "internal workers need exactly two children");
    for (auto c : w.children) {
      if (c >= n) {
        bad(w.name, "child index out of range");
      } else {
        ++in_degree[c];
      }
    }
    bool has_children = !w.children.empty();
    if (has_children != w.fork.has_value() || has_children != w.join.has_value()) {
      bad(w.name, "fork/join bindings must be present exactly when the worker has children");
    }
  }
  if (!ok) return false;
  std::set<WorkerId> roots(plan.roots.begin(), plan.roots.end());
  if (roots.size() != plan.roots.size()) bad("", "duplicate root");
  for (WorkerId w = 0; w < n; ++w) {
    bool is_root = roots.count(w) > 0;
    if (in_degree[w] > 1) bad(plan.workers[w].name, "worker has several parents");
    if (is_root && in_degree[w] != 0) bad(plan.workers[w].name, "root has a parent");
    if (!is_root && in_degree[w] == 0) bad(plan.workers[w].name, "worker unreachable from any root");
  }
  if (plan.roots.empty()) bad("", "plan has no roots");
  if (!ok) return false;
  // Every worker must be reached exactly once from the roots.
  std::vector<int> seen(n, 0);
  for (auto r : plan.roots) {
    std::vector<WorkerId> stack{r};
    while (!stack.empty()) {
      auto w = stack.back();
      stack.pop_back();
      if (seen[w]++) {
        bad(plan.workers[w].name, "cycle through worker");
        return false;
      }
      for (auto c : plan.workers[w].children) stack.push_back(c);
    }
  }
  for (WorkerId w = 0; w < n; ++w) {
    if (!seen[w]) bad(plan.workers[w].name, "worker unreachable from any root");
  }
  if (plan.forest.size() + 1 != plan.roots.size()) {
    bad("", "a forest of " + std::to_string(plan.roots.size()) + " trees needs " +
                std::to_string(plan.roots.size() - 1) + " forest bindings");
  }
  return ok;
}

}  // namespace

std::vector<PlanViolation> validate_plan(const ProgramSignature& p, const SyncPlan& plan,
                                         const std::vector<ImplTag>& all_itags) {
  std::vector<PlanViolation> out;
  if (!check_structure(plan, out)) return out;
  auto n_tags = p.alphabet.size();
  auto n_types = p.state_preds.size();

  // V1: typing of every worker and of the forest chain.
  auto check_binding = [&](const std::string& who, std::size_t fork, std::size_t join, StateTypeId whole,
                           StateTypeId left, StateTypeId right) {
    if (fork >= p.forks.size() || join >= p.joins.size()) {
      out.push_back({PlanViolation::Kind::V1, who, "unknown fork or join"});
      return;
    }
    const auto& f = p.forks[fork];
    const auto& j = p.joins[join];
    if (f.whole != whole || f.left != left || f.right != right) {
      out.push_back({PlanViolation::Kind::V1, who, "fork " + f.name + " does not connect the state types"});
    }
    if (j.whole != whole || j.left != left || j.right != right) {
      out.push_back({PlanViolation::Kind::V1, who, "join " + j.name + " does not connect the state types"});
    }
  };
  for (WorkerId w = 0; w < plan.workers.size(); ++w) {
    const auto& node = plan.workers[w];
    if (node.state_type >= n_types) {
      out.push_back({PlanViolation::Kind::V1, node.name, "unknown state type"});
      continue;
    }
    const auto& pred = p.state_preds[node.state_type];
    for (const auto& t : plan.subtree_itags(w)) {
      if (t.tag >= n_tags || !pred.contains(t.tag)) {
        out.push_back({PlanViolation::Kind::V1, node.name,
                       "state type does not admit " + (t.tag < n_tags ? itag_str(t, p.alphabet) : "unknown tag")});
      }
    }
    if (!node.is_leaf()) {
      const auto& l = plan.workers[node.children[0]];
      const auto& r = plan.workers[node.children[1]];
      check_binding(node.name, *node.fork, *node.join, node.state_type, l.state_type, r.state_type);
    }
  }
  if (!plan.roots.empty() && plan.workers[plan.roots.front()].state_type != 0 && plan.roots.size() == 1) {
    out.push_back({PlanViolation::Kind::V1, plan.workers[plan.roots.front()].name,
                   "root must have the initial state type"});
  }
  StateTypeId rest = 0;
  for (std::size_t i = 0; i < plan.forest.size(); ++i) {
    const auto& b = plan.forest[i];
    if (b.fork >= p.forks.size() || b.join >= p.joins.size()) {
      out.push_back({PlanViolation::Kind::V1, "forest", "unknown fork or join"});
      break;
    }
    const auto& f = p.forks[b.fork];
    StateTypeId right_expected =
        i + 2 == plan.roots.size() ? plan.workers[plan.roots[i + 1]].state_type : p.forks[b.fork].right;
    check_binding("forest", b.fork, b.join, rest, plan.workers[plan.roots[i]].state_type, right_expected);
    rest = f.right;
  }

  // V2: workers with no ancestry relation own disjoint, independent itags.
  auto par = plan.parents();
  auto n = plan.workers.size();
  std::vector<std::vector<bool>> related(n, std::vector<bool>(n, false));
  for (WorkerId w = 0; w < n; ++w) {
    related[w][w] = true;
    for (auto a = par[w]; a; a = par[*a]) {
      related[w][*a] = related[*a][w] = true;
    }
  }
  for (WorkerId a = 0; a < n; ++a) {
    for (WorkerId b = a + 1; b < n; ++b) {
      if (related[a][b]) continue;
      for (const auto& x : plan.workers[a].itags) {
        for (const auto& y : plan.workers[b].itags) {
          if (x.tag >= n_tags || y.tag >= n_tags) continue;
          if (x == y) {
            out.push_back({PlanViolation::Kind::V2, plan.workers[a].name,
                           "shares " + itag_str(x, p.alphabet) + " with " + plan.workers[b].name});
          } else if (p.rel.depends(x.tag, y.tag)) {
            out.push_back({PlanViolation::Kind::V2, plan.workers[a].name,
                           itag_str(x, p.alphabet) + " depends on " + itag_str(y, p.alphabet) + " owned by " +
                               plan.workers[b].name});
          }
        }
      }
    }
  }

  // Coverage: every itag of the run has exactly one owner.
  std::map<ImplTag, std::vector<std::string>> owners;
  for (const auto& w : plan.workers) {
    for (const auto& t : w.itags) owners[t].push_back(w.name);
  }
  for (const auto& [t, ws] : owners) {
    if (ws.size() > 1) {
      std::string who;
      for (const auto& s : ws) who += (who.empty() ? "" : ", ") + s;
      out.push_back({PlanViolation::Kind::Coverage, ws.front(),
                     (t.tag < n_tags ? itag_str(t, p.alphabet) : "?") + " owned by several workers: " + who});
    }
  }
  for (const auto& t : all_itags) {
    if (!owners.count(t)) {
      out.push_back({PlanViolation::Kind::Coverage, "",
                     (t.tag < n_tags ? itag_str(t, p.alphabet) : "unknown tag") + " has no owner"});
    }
  }
  return out;
}

WorkerId responsible_worker(const SyncPlan& plan, const ImplTag& itag) {
  for (WorkerId w = 0; w < plan.workers.size(); ++w) {
    if (plan.workers[w].owns(itag)) return w;
  }
  throw Error(ErrorCode::Unowned, "tag id " + std::to_string(itag.tag) + " on stream " + std::to_string(itag.stream));
}

std::vector<WorkerId> routing_targets(const SyncPlan& plan, const ImplTag& itag) {
  return plan.subtree(responsible_worker(plan, itag));
}

SyncPlan single_worker_plan(const std::vector<ImplTag>& itags, std::string location) {
  SyncPlan plan;
  WorkerNode w;
  w.name = "w1";
  w.itags = itags;
  std::sort(w.itags.begin(), w.itags.end());
  w.location = std::move(location);
  plan.workers.push_back(std::move(w));
  plan.roots = {0};
  return plan;
}

nlohmann::json itag_to_json(const ImplTag& t, const Alphabet& alphabet) {
  return {{"tag", alphabet.name(t.tag)}, {"stream", t.stream}};
}

ImplTag itag_from_json(const nlohmann::json& j, const Alphabet& alphabet) {
  if (!j.is_object() || !j.contains("tag") || !j.contains("stream") || !j["tag"].is_string() ||
      !j["stream"].is_number_unsigned()) {
    throw Error(ErrorCode::Config, "itag needs a string tag and a stream id: " + j.dump());
  }
  return {alphabet.id(j["tag"].get<std::string>()), j["stream"].get<StreamId>()};
}

nlohmann::json plan_to_json(const ProgramSignature& p, const SyncPlan& plan) {
  nlohmann::json workers = nlohmann::json::array();
  for (const auto& w : plan.workers) {
    nlohmann::json node{{"id", w.name}, {"state_type", w.state_type}, {"location", w.location}};
    node["itags"] = nlohmann::json::array();
    for (const auto& t : w.itags) node["itags"].push_back(itag_to_json(t, p.alphabet));
    node["children"] = nlohmann::json::array();
    for (auto c : w.children) node["children"].push_back(plan.workers[c].name);
    if (w.fork) node["fork"] = p.forks.at(*w.fork).name;
    if (w.join) node["join"] = p.joins.at(*w.join).name;
    workers.push_back(std::move(node));
  }
  nlohmann::json roots = nlohmann::json::array();
  for (auto r : plan.roots) roots.push_back(plan.workers[r].name);
  nlohmann::json forest = nlohmann::json::array();
  for (const auto& b : plan.forest) forest.push_back({{"fork", p.forks.at(b.fork).name}, {"join", p.joins.at(b.join).name}});
  return {{"program", p.name}, {"workers", workers}, {"roots", roots}, {"forest", forest}};
}

SyncPlan plan_from_json(const ProgramSignature& p, const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("workers") || !j["workers"].is_array()) {
    throw Error(ErrorCode::Config, "plan needs a workers array");
  }
  SyncPlan plan;
  std::map<std::string, WorkerId> ids;
  for (const auto& node : j["workers"]) {
    if (!node.is_object() || !node.contains("id") || !node["id"].is_string()) {
      throw Error(ErrorCode::Config, "worker needs a string id: " + node.dump());
    }
    auto name = node["id"].get<std::string>();
    if (!ids.emplace(name, plan.workers.size()).second) throw Error(ErrorCode::InvalidPlan, "duplicate worker " + name);
    WorkerNode w;
    w.name = name;
    plan.workers.push_back(std::move(w));
  }
  try {
    for (std::size_t i = 0; i < plan.workers.size(); ++i) {
      const auto& node = j["workers"][i];
      auto& w = plan.workers[i];
      w.state_type = node.value("state_type", std::size_t{0});
      w.location = node.value("location", std::string{});
      for (const auto& t : node.value("itags", nlohmann::json::array())) w.itags.push_back(itag_from_json(t, p.alphabet));
      for (const auto& c : node.value("children", nlohmann::json::array())) {
        auto it = ids.find(c.get<std::string>());
        if (it == ids.end()) throw Error(ErrorCode::InvalidPlan, "unknown child " + c.dump());
        w.children.push_back(it->second);
      }
      if (node.contains("fork")) w.fork = p.fork_index(node["fork"].get<std::string>());
      if (node.contains("join")) w.join = p.join_index(node["join"].get<std::string>());
    }
    if (j.contains("roots")) {
      for (const auto& r : j["roots"]) {
        auto it = ids.find(r.get<std::string>());
        if (it == ids.end()) throw Error(ErrorCode::InvalidPlan, "unknown root " + r.dump());
        plan.roots.push_back(it->second);
      }
    } else {
      auto par = plan.parents();
      for (WorkerId w = 0; w < plan.workers.size(); ++w) {
        if (!par[w]) plan.roots.push_back(w);
      }
    }
    for (const auto& b : j.value("forest", nlohmann::json::array())) {
      plan.forest.push_back({p.fork_index(b.at("fork").get<std::string>()), p.join_index(b.at("join").get<std::string>())});
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Config, std::string("malformed plan: ") + e.what());
  }
  return plan;
}

void write_dot(std::ostream& out, const ProgramSignature& p, const SyncPlan& plan) {
  out << "digraph plan {\n  node [shape=box];\n";
  for (const auto& w : plan.workers) {
    out << "  \"" << w.name << "\" [label=\"" << w.name;
    if (!w.location.empty()) out << " @" << w.location;
    out << "\\n{";
    for (std::size_t i = 0; i < w.itags.size(); ++i) out << (i ? ", " : "") << itag_str(w.itags[i], p.alphabet);
    out << "}";
    if (w.fork) out << "\\n" << p.forks.at(*w.fork).name << " / " << p.joins.at(*w.join).name;
    out << "\"];\n";
    for (auto c : w.children) out << "  \"" << w.name << "\" -> \"" << plan.workers[c].name << "\";\n";
  }
  out << "}\n";
}

}  // namespace dgs
