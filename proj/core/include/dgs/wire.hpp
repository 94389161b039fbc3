// SPDX-License-Identifier: Apache-2.0
//
// Wire diagrams: a pure interpreter for parallel executions built from
// update segments, sequential composition and fork/join pairs.
#pragma once

#include <random>
#include <string>
#include <variant>
#include <vector>

#include "dgs/program.hpp"

namespace dgs {

struct WireDiagram;

struct WireLeaf {
  std::vector<Event> segment;
};

struct WireSeq {
  std::vector<WireDiagram> parts;
};

struct WirePar {
  std::size_t fork = 0;
  std::size_t join = 0;
  TagSet pred1;
  TagSet pred2;
  std::vector<WireDiagram> legs;  // exactly two
};

struct WireDiagram {
  std::variant<WireLeaf, WireSeq, WirePar> node;

  static WireDiagram leaf(std::vector<Event> segment) { return {WireLeaf{std::move(segment)}}; }
  static WireDiagram seq(std::vector<WireDiagram> parts) { return {WireSeq{std::move(parts)}}; }
  static WireDiagram par(std::size_t fork, std::size_t join, TagSet p1, TagSet p2, WireDiagram left,
                         WireDiagram right) {
    WirePar par{fork, join, std::move(p1), std::move(p2), {}};
    par.legs.push_back(std::move(left));
    par.legs.push_back(std::move(right));
    return {std::move(par)};
  }

  /// Events of all leaves, in left-to-right order.
  std::vector<Event> events() const;
  std::size_t par_count() const;
};

namespace detail {

template <class S>
class WireEvaluator {
 public:
  WireEvaluator(const Program<S>& p, std::uint64_t seed) : p_(p), rng_(seed) {}

  std::vector<Output> run(const WireDiagram& d, StateTypeId st, const TagSet& pred, S& state) {
    std::vector<Output> out;
    std::visit([&](const auto& n) { eval(n, st, pred, state, out); }, d.node);
    return out;
  }

 private:
  [[noreturn]] void invalid(const std::string& why) { throw Error(ErrorCode::InvalidDiagram, why); }

  void eval(const WireLeaf& leaf, StateTypeId st, const TagSet& pred, S& state, std::vector<Output>& out) {
    for (const auto& e : leaf.segment) {
      if (!pred.contains(e.tag())) invalid("event " + p_.alphabet.name(e.tag()) + " outside wire predicate");
      p_.apply(st, state, e, out);
    }
  }

  void eval(const WireSeq& seq, StateTypeId st, const TagSet& pred, S& state, std::vector<Output>& out) {
    for (const auto& part : seq.parts) {
      auto sub = run(part, st, pred, state);
      out.insert(out.end(), std::make_move_iterator(sub.begin()), std::make_move_iterator(sub.end()));
    }
  }

  void eval(const WirePar& par, StateTypeId st, const TagSet& pred, S& state, std::vector<Output>& out) {
    if (par.legs.size() != 2) invalid("par node needs two legs");
    if (par.fork >= p_.forks.size() || par.join >= p_.joins.size()) invalid("unknown fork or join");
    const auto& f = p_.forks[par.fork];
    const auto& j = p_.joins[par.join];
    if (f.sig.whole != st || j.sig.whole != st || f.sig.left != j.sig.left || f.sig.right != j.sig.right) {
      invalid("fork " + f.sig.name + " / join " + j.sig.name + " do not match wire state type");
    }
    if (!par.pred1.subset_of(pred) || !par.pred2.subset_of(pred)) invalid("leg predicate not within wire predicate");
    if (!par.pred1.subset_of(p_.state_types.at(f.sig.left).pred) ||
        !par.pred2.subset_of(p_.state_types.at(f.sig.right).pred)) {
      invalid("leg predicate not within leg state type predicate");
    }
    if (!indep_preds(par.pred1, par.pred2, p_.rel)) invalid("leg predicates are not independent");
    auto [s1, s2] = f.fn(state, par.pred1, par.pred2);
    auto o1 = run(par.legs[0], f.sig.left, par.pred1, s1);
    auto o2 = run(par.legs[1], f.sig.right, par.pred2, s2);
    state = j.fn(s1, s2);
    interleave(std::move(o1), std::move(o2), out);
  }

  void interleave(std::vector<Output> a, std::vector<Output> b, std::vector<Output>& out) {
    std::size_t i = 0, k = 0;
    while (i < a.size() || k < b.size()) {
      bool take_a = k == b.size() || (i < a.size() && (rng_() & 1U) == 0);
      out.push_back(std::move(take_a ? a[i++] : b[k++]));
    }
  }

  const Program<S>& p_;
  std::mt19937_64 rng_;
};

}  // namespace detail

/// Evaluates a diagram from the initial state. Child outputs of each Par are
/// interleaved pseudo-randomly from `seed`.
template <class S>
std::vector<Output> eval_wire_diagram(const Program<S>& p, const WireDiagram& d, std::uint64_t seed) {
  S state = p.init;
  detail::WireEvaluator<S> ev(p, seed);
  return ev.run(d, 0, p.state_types.at(0).pred, state);
}

namespace detail {

template <class S>
class WireGenerator {
 public:
  WireGenerator(const Program<S>& p, std::uint64_t seed) : p_(p), rng_(seed) {}

  WireDiagram build(std::vector<Event> events, StateTypeId st, const TagSet& pred, int depth) {
    if (depth <= 0 || events.empty()) return WireDiagram::leaf(std::move(events));
    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t f = 0; f < p_.forks.size(); ++f) {
      if (p_.forks[f].sig.whole != st) continue;
      for (std::size_t j = 0; j < p_.joins.size(); ++j) {
        const auto& js = p_.joins[j].sig;
        const auto& fs = p_.forks[f].sig;
        if (js.whole == st && js.left == fs.left && js.right == fs.right) pairs.emplace_back(f, j);
      }
    }
    if (pairs.empty()) return WireDiagram::leaf(std::move(events));
    auto [f, j] = pairs[rng_() % pairs.size()];
    const auto& fs = p_.forks[f].sig;
    auto [p1, p2] = choose_preds(events, pred & p_.state_types[fs.left].pred, pred & p_.state_types[fs.right].pred);

    // Maximal runs admitted by either leg become Par nodes; the rest stays on
    // this wire. Long runs are sometimes cut into several Pars.
    std::vector<WireDiagram> parts;
    std::vector<Event> pending;
    std::vector<Event> run;
    auto flush_pending = [&] {
      if (!pending.empty()) parts.push_back(WireDiagram::leaf(std::move(pending)));
      pending.clear();
    };
    auto flush_run = [&] {
      if (run.empty()) return;
      flush_pending();
      std::vector<Event> left, right;
      for (auto& e : run) {
        bool a = p1.contains(e.tag()), b = p2.contains(e.tag());
        if (a && b) {
          ((rng_() & 1U) ? left : right).push_back(std::move(e));
        } else if (a) {
          left.push_back(std::move(e));
        } else {
          right.push_back(std::move(e));
        }
      }
      run.clear();
      parts.push_back(WireDiagram::par(f, j, p1, p2, build(std::move(left), fs.left, p1, depth - 1),
                                       build(std::move(right), fs.right, p2, depth - 1)));
    };
    for (auto& e : events) {
      if (p1.contains(e.tag()) || p2.contains(e.tag())) {
        run.push_back(std::move(e));
        if (rng_() % 16 == 0) flush_run();
      } else {
        flush_run();
        pending.push_back(std::move(e));
      }
    }
    flush_run();
    flush_pending();
    if (parts.size() == 1) return std::move(parts.front());
    return WireDiagram::seq(std::move(parts));
  }

 private:
  std::pair<TagSet, TagSet> choose_preds(const std::vector<Event>& events, const TagSet& allowed1,
                                         const TagSet& allowed2) {
    auto n = p_.alphabet.size();
    TagSet present(n);
    for (const auto& e : events) present.insert(e.tag());
    auto tags = present.ids();
    std::shuffle(tags.begin(), tags.end(), rng_);
    TagSet p1(n), p2(n);
    for (auto t : tags) {
      auto choice = rng_() % 4;  // left, right, both, neither
      bool want1 = (choice == 0 || choice == 2) && allowed1.contains(t);
      bool want2 = (choice == 1 || choice == 2) && allowed2.contains(t);
      auto clashes = [&](const TagSet& other) {
        for (auto o : other.ids()) {
          if (p_.rel.depends(t, o)) return true;
        }
        return false;
      };
      // Adding t to one side must keep it independent of the other side,
      // including t itself when it lands on both.
      if (want1 && want2 && p_.rel.depends(t, t)) want2 = false;
      if (want1 && !clashes(p2)) p1.insert(t);
      if (want2 && !clashes(p1)) p2.insert(t);
    }
    return {p1, p2};
  }

  const Program<S>& p_;
  std::mt19937_64 rng_;
};

}  // namespace detail

/// Builds a random structurally valid diagram whose leaves partition `input`
/// in order. With depth 0, or when no fork applies, the result is one leaf.
template <class S>
WireDiagram random_wire_diagram(const Program<S>& p, std::vector<Event> input, int depth, std::uint64_t seed) {
  detail::WireGenerator<S> gen(p, seed);
  return gen.build(std::move(input), 0, p.state_types.at(0).pred, depth);
}

}  // namespace dgs
