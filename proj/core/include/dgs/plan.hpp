// SPDX-License-Identifier: Apache-2.0
//
// Synchronization plans: forests of binary worker trees annotated with state
// types, owned implementation tags and fork/join bindings.
#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "dgs/program.hpp"

namespace dgs {

using WorkerId = std::size_t;

struct WorkerNode {
  std::string name;
  StateTypeId state_type = 0;
  std::vector<ImplTag> itags;
  std::optional<std::size_t> fork;
  std::optional<std::size_t> join;
  std::vector<WorkerId> children;  // empty or exactly two
  std::string location;

  bool is_leaf() const noexcept { return children.empty(); }
  bool owns(const ImplTag& t) const;
};

/// Fork/join pair used to split the initial state between consecutive roots
/// of a forest.
struct ForestBinding {
  std::size_t fork = 0;
  std::size_t join = 0;
};

/// A forest of worker trees. With several roots, the initial state is split
/// along a right-leaning chain: binding i separates roots[i] from the rest.
struct SyncPlan {
  std::vector<WorkerNode> workers;
  std::vector<WorkerId> roots;
  std::vector<ForestBinding> forest;

  /// Parent of each worker, or nullopt for roots.
  std::vector<std::optional<WorkerId>> parents() const;
  /// Strict ancestors, nearest first.
  std::vector<WorkerId> ancestors(WorkerId w) const;
  /// `w` and all its descendants, pre-order.
  std::vector<WorkerId> subtree(WorkerId w) const;
  std::vector<ImplTag> subtree_itags(WorkerId w) const;
  /// Tags of every itag owned in the subtree of `w`, as a predicate.
  TagSet subtree_tags(WorkerId w, std::size_t universe) const;
  std::size_t depth() const;
  std::optional<WorkerId> find(std::string_view name) const;
};

struct PlanViolation {
  enum class Kind { Structure, V1, V2, Coverage };
  Kind kind;
  std::string worker;
  std::string detail;
};

std::string_view to_string(PlanViolation::Kind k);

/// Structural, typing (V1), independence (V2) and coverage checks.
std::vector<PlanViolation> validate_plan(const ProgramSignature& p, const SyncPlan& plan,
                                         const std::vector<ImplTag>& all_itags);

/// Throws Error{Unowned}.
WorkerId responsible_worker(const SyncPlan& plan, const ImplTag& itag);
/// The owner of `itag` followed by its descendants.
std::vector<WorkerId> routing_targets(const SyncPlan& plan, const ImplTag& itag);

/// One worker owning every itag.
SyncPlan single_worker_plan(const std::vector<ImplTag>& itags, std::string location = "");

nlohmann::json plan_to_json(const ProgramSignature& p, const SyncPlan& plan);
/// Throws Error{Config} on malformed documents and Error{InvalidPlan} on
/// references to unknown workers, forks or joins.
SyncPlan plan_from_json(const ProgramSignature& p, const nlohmann::json& j);
void write_dot(std::ostream& out, const ProgramSignature& p, const SyncPlan& plan);

nlohmann::json itag_to_json(const ImplTag& t, const Alphabet& alphabet);
ImplTag itag_from_json(const nlohmann::json& j, const Alphabet& alphabet);
std::string itag_str(const ImplTag& t, const Alphabet& alphabet);

}  // namespace dgs
