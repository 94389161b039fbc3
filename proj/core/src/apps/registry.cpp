// SPDX-License-Identifier: Apache-2.0
#include "app_impl.hpp"
#include "dgs/trace.hpp"

namespace dgs {

namespace detail {

Streams generate_layout(const Layout& layout, const GenConfig& cfg) {
  if (cfg.streams == 0) throw Error(ErrorCode::Config, "need at least one parallel stream");
  if (cfg.sync_ratio == 0) throw Error(ErrorCode::Config, "sync ratio must be positive");
  std::mt19937_64 rng(cfg.seed);
  Streams streams(cfg.streams + 1);
  Timestamp t = 0;
  for (std::size_t n = 0; n < cfg.events_per_stream; ++n) {
    for (StreamId s = 1; s <= cfg.streams; ++s) {
      auto [tag, payload] = layout.parallel(rng, s, n);
      streams[s].push_back(Event{{tag, s}, ++t, std::move(payload)});
    }
    if ((n + 1) % cfg.sync_ratio == 0) {
      auto [tag, payload] = layout.sync(rng);
      streams[0].push_back(Event{{tag, 0}, ++t, std::move(payload)});
    }
  }
  std::vector<TagId> hb(layout.heartbeat_tags.begin(), layout.heartbeat_tags.begin() + cfg.streams + 1);
  auto period = cfg.heartbeat_period ? cfg.heartbeat_period : t + 1;
  return inject_heartbeats(streams, hb, period);
}

}  // namespace detail

std::vector<std::string> app_names() { return {"key-counter", "value-barrier", "page-view", "fraud"}; }

std::unique_ptr<AnyApp> make_app(std::string_view name, const GenConfig& cfg) {
  if (name == "key-counter") return detail::make_key_counter(cfg);
  if (name == "value-barrier") return detail::make_value_barrier(cfg);
  if (name == "page-view") return detail::make_page_view(cfg);
  if (name == "fraud") return detail::make_fraud(cfg);
  throw Error(ErrorCode::Config, "unknown app '" + std::string(name) + "'");
}

}  // namespace dgs
