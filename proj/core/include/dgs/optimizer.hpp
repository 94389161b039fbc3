// SPDX-License-Identifier: Apache-2.0
//
// Plan synthesis: split the dependence graph of implementation tags by
// repeatedly removing the lowest-rate tag, then match the resulting tree
// against the program's forks and joins.
#pragma once

#include <random>
#include <string>
#include <vector>

#include "dgs/plan.hpp"

namespace dgs {

struct ItagRate {
  ImplTag itag;
  double rate = 1.0;
  std::string location;
};

class RateSpec {
 public:
  RateSpec() = default;
  explicit RateSpec(std::vector<ItagRate> entries);

  /// Throws Error{Config} for itags without an entry.
  double rate(const ImplTag& t) const;
  const std::string& location(const ImplTag& t) const;
  bool contains(const ImplTag& t) const;
  const std::vector<ItagRate>& entries() const noexcept { return entries_; }

  /// Every itag with the same rate and an empty location.
  static RateSpec uniform(const std::vector<ImplTag>& itags, double rate = 1.0);
  /// Rate of each itag equal to its message count in `streams`, heartbeats
  /// included.
  static RateSpec observed(const Streams& streams);

 private:
  const ItagRate& at(const ImplTag& t) const;
  std::vector<ItagRate> entries_;  // sorted by itag
};

/// Rates file: {"itags": [{"tag": .., "stream": .., "rate": .., "location": ..}]}
RateSpec rates_from_json(const nlohmann::json& j, const Alphabet& alphabet);
nlohmann::json rates_to_json(const RateSpec& rates, const Alphabet& alphabet);

struct TagGraph {
  std::vector<ImplTag> vertices;  // sorted
  std::vector<std::vector<bool>> adj;

  bool edge(std::size_t a, std::size_t b) const { return adj[a][b]; }
  /// Connected components over the vertex subset `alive`, each sorted.
  std::vector<std::vector<std::size_t>> components(const std::vector<bool>& alive) const;
};

TagGraph build_tag_graph(std::vector<ImplTag> itags, const DependenceRelation& rel);

struct SplitResult {
  std::vector<ImplTag> removed;
  /// Components of the residual graph, heaviest total rate first.
  std::vector<std::vector<ImplTag>> components;
};

SplitResult greedy_split(const TagGraph& g, const RateSpec& rates);

/// A node owns the itags removed at its split. Nodes have zero or two children.
struct TagTree {
  std::vector<ImplTag> owned;
  std::vector<TagTree> children;

  std::vector<ImplTag> all_itags() const;
  std::size_t depth() const;
};

TagTree build_tag_tree(const std::vector<ImplTag>& itags, const DependenceRelation& rel, const RateSpec& rates);

/// Matches the tree against forks and joins, depth first in declaration
/// order. Locations come from `rates` when given. Throws Error{NoMatch}.
SyncPlan synthesize_plan(const ProgramSignature& p, const TagTree& tree, const RateSpec* rates = nullptr);

/// Rate-weighted cost: events handled by internal workers plus broadcast fan-out.
double comm_cost(const SyncPlan& plan, const RateSpec& rates);

/// Convenience: graph, tree and plan in one go.
SyncPlan optimize(const ProgramSignature& p, const std::vector<ImplTag>& itags, const RateSpec& rates);

/// A random tree whose sibling subtrees are independent, of depth at most
/// `max_depth` (a single leaf has depth 1).
TagTree random_tag_tree(const std::vector<ImplTag>& itags, const DependenceRelation& rel, std::mt19937_64& rng,
                        std::size_t max_depth);

/// A random plan accepted by validate_plan. Empty roots are sometimes peeled
/// off into a forest. Falls back to a single worker if nothing matches.
SyncPlan random_plan(const ProgramSignature& p, const std::vector<ImplTag>& itags, std::mt19937_64& rng,
                     std::size_t max_depth);

/// Replaces a root chain of itag-free workers by a forest of their subtrees.
SyncPlan peel_empty_roots(const SyncPlan& plan);

}  // namespace dgs
