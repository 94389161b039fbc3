// SPDX-License-Identifier: Apache-2.0
//
// Randomized checking of the consistency conditions:
//   C1  join(update(s1, e), s2) == update(join(s1, s2), e), outputs included
//   C2  join(fork(s, p1, p2)) == s
//   C3  update(update(s, e1), e2) == update(update(s, e2), e1) for indep(e1, e2)
#pragma once

#include <optional>
#include <random>
#include <string>
#include <vector>

#include "dgs/program.hpp"

namespace dgs {

enum class Condition { C1, C2, C3 };
std::string_view to_string(Condition c);

/// Which input of the join the event is applied to in C1.
enum class Side { Left, Right };

struct CheckOutcome {
  bool pass = true;
  Value witness;  // both sides, for reporting
};

nlohmann::json event_to_json(const Event& e, const Alphabet& alphabet);

template <class S>
Value side_json(const Program<S>& p, const S& s, const std::vector<Value>& outs) {
  return Value{{"state", p.canonical(s)}, {"outputs", outs}};
}

namespace detail {
template <class S>
std::vector<Value> apply_values(const Program<S>& p, StateTypeId st, S& s, const Event& e) {
  std::vector<Output> outs;
  p.apply(st, s, e, outs);
  std::vector<Value> vals;
  vals.reserve(outs.size());
  for (auto& o : outs) vals.push_back(std::move(o.value));
  return vals;
}
}  // namespace detail

/// C1 for `join`, applying `e` to the chosen input of the join.
template <class S>
CheckOutcome check_c1(const Program<S>& p, std::size_t join, const Event& e, const S& s1, const S& s2,
                      Side side = Side::Left) {
  const auto& j = p.joins.at(join);
  auto input_type = side == Side::Left ? j.sig.left : j.sig.right;
  if (!p.admits(j.sig.whole, e.tag()) || !p.admits(input_type, e.tag())) {
    throw Error(ErrorCode::PreconditionUnsatisfiable,
                "event " + p.alphabet.name(e.tag()) + " not admitted by both state types of " + j.sig.name);
  }
  S a = s1, b = s2;
  auto lhs_out = detail::apply_values(p, input_type, side == Side::Left ? a : b, e);
  S lhs = j.fn(a, b);
  S rhs = j.fn(s1, s2);
  auto rhs_out = detail::apply_values(p, j.sig.whole, rhs, e);
  bool pass = p.equal(lhs, rhs) && lhs_out == rhs_out;
  return {pass, Value{{"condition", "C1"},
                      {"join", j.sig.name},
                      {"side", side == Side::Left ? "left" : "right"},
                      {"s1", p.canonical(s1)},
                      {"s2", p.canonical(s2)},
                      {"event", event_to_json(e, p.alphabet)},
                      {"lhs", side_json(p, lhs, lhs_out)},
                      {"rhs", side_json(p, rhs, rhs_out)}}};
}

template <class S>
CheckOutcome check_c2(const Program<S>& p, std::size_t fork, std::size_t join, const S& s, const TagSet& p1,
                      const TagSet& p2) {
  const auto& f = p.forks.at(fork);
  const auto& j = p.joins.at(join);
  if (f.sig.whole != j.sig.whole || f.sig.left != j.sig.left || f.sig.right != j.sig.right) {
    throw Error(ErrorCode::IncompatiblePair, f.sig.name + " / " + j.sig.name);
  }
  auto [a, b] = f.fn(s, p1, p2);
  S joined = j.fn(a, b);
  auto name_set = [&](const TagSet& t) {
    Value out = Value::array();
    for (auto id : t.ids()) out.push_back(p.alphabet.name(id));
    return out;
  };
  return {p.equal(joined, s), Value{{"condition", "C2"},
                                    {"fork", f.sig.name},
                                    {"join", j.sig.name},
                                    {"s", p.canonical(s)},
                                    {"pred1", name_set(p1)},
                                    {"pred2", name_set(p2)},
                                    {"forked", {p.canonical(a), p.canonical(b)}},
                                    {"joined", p.canonical(joined)}}};
}

template <class S>
CheckOutcome check_c3(const Program<S>& p, StateTypeId st, const S& s, const Event& e1, const Event& e2) {
  if (p.rel.depends(e1.tag(), e2.tag()) || !p.admits(st, e1.tag()) || !p.admits(st, e2.tag())) {
    throw Error(ErrorCode::PreconditionUnsatisfiable, "C3 needs independent events admitted by the state type");
  }
  S a = s;
  auto lhs_out = detail::apply_values(p, st, a, e1);
  auto lhs_tail = detail::apply_values(p, st, a, e2);
  S b = s;
  auto rhs_second = detail::apply_values(p, st, b, e2);
  auto rhs_first = detail::apply_values(p, st, b, e1);
  // out(s, e1) + out(update(s, e1), e2)  vs  out(update(s, e2), e1) + out(s, e2)
  lhs_out.insert(lhs_out.end(), lhs_tail.begin(), lhs_tail.end());
  auto rhs_out = rhs_first;
  rhs_out.insert(rhs_out.end(), rhs_second.begin(), rhs_second.end());
  bool pass = p.equal(a, b) && lhs_out == rhs_out;
  return {pass, Value{{"condition", "C3"},
                      {"state_type", p.state_types.at(st).name},
                      {"s", p.canonical(s)},
                      {"e1", event_to_json(e1, p.alphabet)},
                      {"e2", event_to_json(e2, p.alphabet)},
                      {"lhs", side_json(p, a, lhs_out)},
                      {"rhs", side_json(p, b, rhs_out)}}};
}

/// Random state and event sources for the suite.
template <class S>
struct Generators {
  std::function<S(std::mt19937_64&)> state;
  /// An event whose tag lies in `allowed`, or nullopt if there is none.
  std::function<std::optional<Event>(std::mt19937_64&, const TagSet& allowed)> event;
};

/// Inputs of a failing case, sufficient to replay it.
template <class S>
struct Counterexample {
  Condition condition = Condition::C1;
  std::size_t fork = 0;
  std::size_t join = 0;
  StateTypeId state_type = 0;
  Side side = Side::Left;
  S s1{};
  S s2{};
  Event e1;
  Event e2;
  TagSet pred1;
  TagSet pred2;
  Value witness;
};

template <class S>
CheckOutcome replay(const Program<S>& p, const Counterexample<S>& c) {
  switch (c.condition) {
    case Condition::C1: return check_c1(p, c.join, c.e1, c.s1, c.s2, c.side);
    case Condition::C2: return check_c2(p, c.fork, c.join, c.s1, c.pred1, c.pred2);
    case Condition::C3: return check_c3(p, c.state_type, c.s1, c.e1, c.e2);
  }
  return {};
}

struct ConditionTally {
  std::size_t cases = 0;
  std::size_t failures = 0;
};

template <class S>
struct ConsistencyReport {
  ConditionTally c1, c2, c3;
  std::vector<Counterexample<S>> failures;

  std::size_t total_failures() const { return c1.failures + c2.failures + c3.failures; }
  std::size_t total_cases() const { return c1.cases + c2.cases + c3.cases; }

  Value to_json() const {
    Value out{{"C1", {{"cases", c1.cases}, {"failures", c1.failures}}},
              {"C2", {{"cases", c2.cases}, {"failures", c2.failures}}},
              {"C3", {{"cases", c3.cases}, {"failures", c3.failures}}},
              {"witnesses", Value::array()}};
    for (const auto& f : failures) out["witnesses"].push_back(f.witness);
    return out;
  }
};

struct SuiteConfig {
  std::size_t cases = 1000;  // per condition per applicable primitive/state type
  std::uint64_t seed = 1;
  /// Give up once rejected samples exceed this multiple of requested cases.
  std::size_t max_rejection_factor = 50;
  /// Updates applied to each forked state before a C1 case.
  std::size_t max_updates = 6;
  /// Keep at most this many witnesses in the report.
  std::size_t max_witnesses = 10;
};

/// Draws two independent predicates, each within its `allowed` set.
TagSet random_subset(std::mt19937_64& rng, const TagSet& allowed);
std::pair<TagSet, TagSet> random_independent_preds(std::mt19937_64& rng, const DependenceRelation& rel,
                                                   const TagSet& allowed1, const TagSet& allowed2);

/// Runs `cases` samples of each condition for every join (C1), every matching
/// fork/join pair (C2) and every state type (C3).
///
/// C1 samples are drawn from reachable configurations: a random state is
/// forked with random independent predicates, each side is advanced with
/// events its predicate admits, and the checked event is admitted by the
/// predicate of the side it is applied to. Joins without a matching fork fall
/// back to two independently generated states.
template <class S>
ConsistencyReport<S> run_consistency_suite(const Program<S>& p, const Generators<S>& gen, const SuiteConfig& cfg) {
  ConsistencyReport<S> report;
  if (cfg.cases == 0) return report;
  std::mt19937_64 rng(cfg.seed);
  std::size_t rejections = 0;
  auto budget = cfg.cases * cfg.max_rejection_factor;
  auto reject = [&] {
    if (++rejections > budget) throw Error(ErrorCode::GeneratorExhausted, "too many rejected samples");
  };
  auto record = [&](ConditionTally& tally, const CheckOutcome& out, Counterexample<S> c) {
    ++tally.cases;
    if (out.pass) return;
    ++tally.failures;
    if (report.failures.size() < cfg.max_witnesses) {
      c.witness = out.witness;
      report.failures.push_back(std::move(c));
    }
  };
  auto n = p.alphabet.size();

  for (std::size_t j = 0; j < p.joins.size(); ++j) {
    const auto& js = p.joins[j].sig;
    std::optional<std::size_t> fork;
    for (std::size_t f = 0; f < p.forks.size(); ++f) {
      const auto& fs = p.forks[f].sig;
      if (fs.whole == js.whole && fs.left == js.left && fs.right == js.right) {
        fork = f;
        break;
      }
    }
    const auto& whole = p.state_types[js.whole].pred;
    std::size_t done = 0;
    while (done < cfg.cases) {
      Counterexample<S> c;
      c.condition = Condition::C1;
      c.join = j;
      c.side = (rng() & 1U) ? Side::Left : Side::Right;
      TagSet p1 = p.state_types[js.left].pred & whole;
      TagSet p2 = p.state_types[js.right].pred & whole;
      if (fork) {
        std::tie(p1, p2) = random_independent_preds(rng, p.rel, p1, p2);
        auto [a, b] = p.forks[*fork].fn(gen.state(rng), p1, p2);
        std::vector<Output> sink;
        auto advance = [&](S& s, StateTypeId st, const TagSet& pred) {
          auto steps = rng() % (cfg.max_updates + 1);
          for (std::size_t i = 0; i < steps; ++i) {
            if (auto e = gen.event(rng, pred)) p.apply(st, s, *e, sink);
          }
        };
        advance(a, js.left, p1);
        advance(b, js.right, p2);
        c.s1 = std::move(a);
        c.s2 = std::move(b);
      } else {
        c.s1 = gen.state(rng);
        c.s2 = gen.state(rng);
        c.side = Side::Left;
      }
      const auto& side_pred = c.side == Side::Left ? p1 : p2;
      auto input_type = c.side == Side::Left ? js.left : js.right;
      auto e = gen.event(rng, side_pred & p.state_types[input_type].pred & whole);
      if (!e) {
        reject();
        continue;
      }
      c.e1 = *e;
      c.pred1 = p1;
      c.pred2 = p2;
      auto out = check_c1(p, j, c.e1, c.s1, c.s2, c.side);
      record(report.c1, out, std::move(c));
      ++done;
    }
  }

  for (std::size_t f = 0; f < p.forks.size(); ++f) {
    const auto& fs = p.forks[f].sig;
    for (auto j : p.signature().joins_for(f)) {
      for (std::size_t i = 0; i < cfg.cases; ++i) {
        Counterexample<S> c;
        c.condition = Condition::C2;
        c.fork = f;
        c.join = j;
        const auto& whole = p.state_types[fs.whole].pred;
        std::tie(c.pred1, c.pred2) = random_independent_preds(rng, p.rel, p.state_types[fs.left].pred & whole,
                                                              p.state_types[fs.right].pred & whole);
        c.s1 = gen.state(rng);
        auto out = check_c2(p, f, j, c.s1, c.pred1, c.pred2);
        record(report.c2, out, std::move(c));
      }
    }
  }

  for (StateTypeId st = 0; st < p.state_types.size(); ++st) {
    const auto& pred = p.state_types[st].pred;
    std::size_t done = 0;
    while (done < cfg.cases) {
      auto e1 = gen.event(rng, pred);
      if (!e1) {
        reject();
        continue;
      }
      TagSet indep(n);
      for (auto t : pred.ids()) {
        if (!p.rel.depends(e1->tag(), t)) indep.insert(t);
      }
      auto e2 = gen.event(rng, indep);
      if (!e2) {
        reject();
        continue;
      }
      Counterexample<S> c;
      c.condition = Condition::C3;
      c.state_type = st;
      c.s1 = gen.state(rng);
      c.e1 = *e1;
      c.e2 = *e2;
      auto out = check_c3(p, st, c.s1, c.e1, c.e2);
      record(report.c3, out, std::move(c));
      ++done;
    }
  }
  return report;
}

}  // namespace dgs
