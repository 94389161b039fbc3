// SPDX-License-Identifier: Apache-2.0
#include "dgs/consistency.hpp"

#include <algorithm>

namespace dgs {

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::C1: return "C1";
    case Condition::C2: return "C2";
    case Condition::C3: return "C3";
  }
  return "?";
}

nlohmann::json event_to_json(const Event& e, const Alphabet& alphabet) {
  return {{"tag", alphabet.name(e.tag())}, {"stream", e.itag.stream}, {"ts", e.ts}, {"payload", e.payload}};
}

TagSet random_subset(std::mt19937_64& rng, const TagSet& allowed) {
  TagSet out(allowed.universe());
  for (auto t : allowed.ids()) {
    if (rng() & 1U) out.insert(t);
  }
  return out;
}

std::pair<TagSet, TagSet> random_independent_preds(std::mt19937_64& rng, const DependenceRelation& rel,
                                                   const TagSet& allowed1, const TagSet& allowed2) {
  auto n = std::max(allowed1.universe(), allowed2.universe());
  auto tags = (allowed1 | allowed2).ids();
  std::shuffle(tags.begin(), tags.end(), rng);
  TagSet p1(n), p2(n);
  auto clashes = [&](TagId t, const TagSet& other) {
    for (auto o : other.ids()) {
      if (rel.depends(t, o)) return true;
    }
    return false;
  };
  for (auto t : tags) {
    auto choice = rng() % 4;  // left, right, both, neither
    bool want1 = (choice == 0 || choice == 2) && allowed1.contains(t);
    bool want2 = (choice == 1 || choice == 2) && allowed2.contains(t);
    if (want1 && want2 && rel.depends(t, t)) {
      if (rng() & 1U) {
        want1 = false;
      } else {
        want2 = false;
      }
    }
    if (want1 && !clashes(t, p2)) p1.insert(t);
    if (want2 && !clashes(t, p1)) p2.insert(t);
  }
  return {p1, p2};
}

}  // namespace dgs
