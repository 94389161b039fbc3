// SPDX-License-Identifier: Apache-2.0
#include "dgs/program.hpp"
#include "dgs/wire.hpp"

namespace dgs {

std::vector<std::pair<Timestamp, std::string>> output_multiset(const std::vector<Output>& outs) {
  std::vector<std::pair<Timestamp, std::string>> ms;
  ms.reserve(outs.size());
  for (const auto& o : outs) ms.emplace_back(o.ts, o.value.dump());
  std::sort(ms.begin(), ms.end());
  return ms;
}

std::size_t ProgramSignature::fork_index(std::string_view n) const {
  for (std::size_t i = 0; i < forks.size(); ++i) {
    if (forks[i].name == n) return i;
  }
  throw Error(ErrorCode::InvalidPlan, "unknown fork '" + std::string(n) + "'");
}

std::size_t ProgramSignature::join_index(std::string_view n) const {
  for (std::size_t i = 0; i < joins.size(); ++i) {
    if (joins[i].name == n) return i;
  }
  throw Error(ErrorCode::InvalidPlan, "unknown join '" + std::string(n) + "'");
}

std::vector<std::size_t> ProgramSignature::joins_for(std::size_t f) const {
  std::vector<std::size_t> out;
  const auto& fs = forks.at(f);
  for (std::size_t j = 0; j < joins.size(); ++j) {
    const auto& js = joins[j];
    if (js.whole == fs.whole && js.left == fs.left && js.right == fs.right) out.push_back(j);
  }
  return out;
}

std::vector<Event> WireDiagram::events() const {
  std::vector<Event> out;
  std::visit(
      [&](const auto& n) {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, WireLeaf>) {
          out.insert(out.end(), n.segment.begin(), n.segment.end());
        } else if constexpr (std::is_same_v<N, WireSeq>) {
          for (const auto& p : n.parts) {
            auto sub = p.events();
            out.insert(out.end(), sub.begin(), sub.end());
          }
        } else {
          for (const auto& p : n.legs) {
            auto sub = p.events();
            out.insert(out.end(), sub.begin(), sub.end());
          }
        }
      },
      node);
  return out;
}

std::size_t WireDiagram::par_count() const {
  return std::visit(
      [](const auto& n) -> std::size_t {
        using N = std::decay_t<decltype(n)>;
        if constexpr (std::is_same_v<N, WireLeaf>) {
          return 0;
        } else if constexpr (std::is_same_v<N, WireSeq>) {
          std::size_t c = 0;
          for (const auto& p : n.parts) c += p.par_count();
          return c;
        } else {
          std::size_t c = 1;
          for (const auto& p : n.legs) c += p.par_count();
          return c;
        }
      },
      node);
}

}  // namespace dgs
