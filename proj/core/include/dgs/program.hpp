// SPDX-License-Identifier: Apache-2.0
//
// DGS programs: state types with predicates and updates, an initial state,
// and fork/join primitives over a dependence relation.
#pragma once

#include <algorithm>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dgs/model.hpp"

namespace dgs {

using StateTypeId = std::size_t;

/// An output together with the timestamp of the event that produced it.
struct Output {
  Value value;
  Timestamp ts = 0;

  bool operator==(const Output&) const = default;
};

/// Canonical multiset form of an output list, for order-insensitive comparison.
std::vector<std::pair<Timestamp, std::string>> output_multiset(const std::vector<Output>& outs);
inline bool same_multiset(const std::vector<Output>& a, const std::vector<Output>& b) {
  return output_multiset(a) == output_multiset(b);
}

/// Fork/join shape without the callbacks; enough to type-check plans.
struct PrimitiveSignature {
  std::string name;
  StateTypeId whole = 0;  // fork input, join output
  StateTypeId left = 0;
  StateTypeId right = 0;
};

/// Everything about a program except its state representation.
struct ProgramSignature {
  std::string name;
  Alphabet alphabet;
  DependenceRelation rel;
  std::vector<TagSet> state_preds;
  std::vector<PrimitiveSignature> forks;
  std::vector<PrimitiveSignature> joins;

  std::size_t fork_index(std::string_view name) const;
  std::size_t join_index(std::string_view name) const;
  bool depends(const ImplTag& a, const ImplTag& b) const { return rel.depends(a.tag, b.tag); }
  /// Joins pairing with fork `f`, in declaration order.
  std::vector<std::size_t> joins_for(std::size_t f) const;
};

template <class S>
struct StateType {
  std::string name;
  TagSet pred;
  /// Updates the state in place and appends zero or more output values.
  std::function<void(S&, const Event&, std::vector<Value>&)> update;
};

template <class S>
struct Fork {
  PrimitiveSignature sig;
  std::function<std::pair<S, S>(const S&, const TagSet&, const TagSet&)> fn;
};

template <class S>
struct Join {
  PrimitiveSignature sig;
  std::function<S(const S&, const S&)> fn;
};

template <class S>
struct Program {
  std::string name;
  Alphabet alphabet;
  DependenceRelation rel;
  std::vector<StateType<S>> state_types;
  S init{};
  std::vector<Fork<S>> forks;
  std::vector<Join<S>> joins;
  /// Canonical form; states are equal iff their canonical forms are.
  std::function<Value(const S&)> canonical;

  ProgramSignature signature() const {
    ProgramSignature sig{name, alphabet, rel, {}, {}, {}};
    for (const auto& st : state_types) sig.state_preds.push_back(st.pred);
    for (const auto& f : forks) sig.forks.push_back(f.sig);
    for (const auto& j : joins) sig.joins.push_back(j.sig);
    return sig;
  }

  bool equal(const S& a, const S& b) const { return canonical(a) == canonical(b); }

  bool admits(StateTypeId st, TagId tag) const { return state_types.at(st).pred.contains(tag); }

  /// Applies update_st to `state`, appending outputs stamped with the event
  /// timestamp. The event's tag must satisfy the state type's predicate.
  void apply(StateTypeId st, S& state, const Event& e, std::vector<Output>& out) const {
    if (e.tag() >= alphabet.size()) throw Error(ErrorCode::UnknownTag, "tag id " + std::to_string(e.tag()));
    const auto& type = state_types.at(st);
    if (!type.pred.contains(e.tag())) {
      throw Error(ErrorCode::InvalidProgram, "state type " + type.name + " cannot process " +
                                                 alphabet.name(e.tag()));
    }
    thread_local std::vector<Value> scratch;
    scratch.clear();
    type.update(state, e, scratch);
    for (auto& v : scratch) out.push_back(Output{std::move(v), e.ts});
  }

  /// Checks the structural requirements on a program. Empty means ok.
  std::vector<std::string> validate() const {
    std::vector<std::string> problems;
    for (auto [a, b] : validate_dependence(rel, alphabet)) {
      problems.push_back("dependence not symmetric for " + alphabet.name(a) + ", " + alphabet.name(b));
    }
    if (rel.universe() != alphabet.size()) problems.push_back("relation universe mismatch");
    if (state_types.empty()) {
      problems.push_back("no state types");
    } else if (!(TagSet::full(alphabet.size()).subset_of(state_types[0].pred))) {
      problems.push_back("initial state type must admit every tag");
    }
    for (const auto& st : state_types) {
      if (st.pred.universe() > alphabet.size()) problems.push_back(st.name + ": predicate outside alphabet");
      if (!st.update) problems.push_back(st.name + ": missing update");
    }
    auto check_prim = [&](const PrimitiveSignature& p) {
      auto n = state_types.size();
      if (p.whole >= n || p.left >= n || p.right >= n) problems.push_back(p.name + ": unknown state type");
    };
    for (const auto& f : forks) check_prim(f.sig);
    for (const auto& j : joins) check_prim(j.sig);
    if (!canonical) problems.push_back("missing canonicalizer");
    return problems;
  }
};

/// Folds update_0 over the input in order.
template <class S>
std::vector<Output> sequential_spec(const Program<S>& p, const std::vector<Event>& input) {
  std::vector<Output> out;
  S state = p.init;
  for (const auto& e : input) p.apply(0, state, e, out);
  return out;
}

/// Sequential fold returning the final state as well.
template <class S>
S sequential_state(const Program<S>& p, const std::vector<Event>& input) {
  std::vector<Output> sink;
  S state = p.init;
  for (const auto& e : input) p.apply(0, state, e, sink);
  return state;
}

}  // namespace dgs
