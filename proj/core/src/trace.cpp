// SPDX-License-Identifier: Apache-2.0
#include "dgs/trace.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <string>

namespace dgs {

nlohmann::json message_to_json(const Message& m, const Alphabet& alphabet) {
  const auto& it = itag_of(m);
  nlohmann::json j;
  j["stream"] = it.stream;
  j["tag"] = alphabet.name(it.tag);
  j["ts"] = order_of(m).ts;
  if (const auto* e = std::get_if<Event>(&m)) {
    j["payload"] = e->payload;
  } else {
    j["payload"] = nullptr;
  }
  return j;
}

Message message_from_json(const nlohmann::json& j, const Alphabet& alphabet) {
  if (!j.is_object() || !j.contains("stream") || !j.contains("tag") || !j.contains("ts")) {
    throw Error(ErrorCode::Config, "trace line needs stream, tag and ts: " + j.dump());
  }
  if (!j["stream"].is_number_unsigned() || !j["ts"].is_number_unsigned() || !j["tag"].is_string()) {
    throw Error(ErrorCode::Config, "trace line has ill-typed fields: " + j.dump());
  }
  ImplTag itag{alphabet.id(j["tag"].get<std::string>()), j["stream"].get<StreamId>()};
  auto ts = j["ts"].get<Timestamp>();
  if (!j.contains("payload") || j["payload"].is_null()) return Heartbeat{itag, ts};
  return Event{itag, ts, j["payload"]};
}

Streams read_trace(std::istream& in, const Alphabet& alphabet) {
  Streams streams;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (std::all_of(line.begin(), line.end(), [](unsigned char c) { return std::isspace(c); })) {
      continue;
    }
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorCode::Config, "trace line " + std::to_string(lineno) + ": " + e.what());
    }
    auto msg = message_from_json(j, alphabet);
    auto s = itag_of(msg).stream;
    if (s >= streams.size()) streams.resize(s + 1);
    streams[s].push_back(std::move(msg));
  }
  return streams;
}

void write_trace(std::ostream& out, const Streams& streams, const Alphabet& alphabet) {
  for (const auto& m : merge_streams(streams)) out << message_to_json(m, alphabet).dump() << '\n';
}

Streams inject_heartbeats(const Streams& streams, const std::vector<TagId>& heartbeat_tags,
                          Timestamp period) {
  if (period == 0) throw Error(ErrorCode::Config, "heartbeat period must be >= 1");
  if (heartbeat_tags.size() < streams.size()) {
    throw Error(ErrorCode::Config, "missing heartbeat tag for some stream");
  }
  Timestamp max_ts = 0;
  for (const auto& s : streams) {
    if (!s.empty()) max_ts = std::max(max_ts, order_of(s.back()).ts);
  }
  Streams out(streams.size());
  for (std::size_t s = 0; s < streams.size(); ++s) {
    const auto& in = streams[s];
    auto& dst = out[s];
    ImplTag hb_itag{heartbeat_tags[s], static_cast<StreamId>(s)};
    std::size_t i = 0;
    for (Timestamp tick = period; tick <= max_ts; tick += period) {
      while (i < in.size() && order_of(in[i]).ts < tick) dst.push_back(in[i++]);
      if (i < in.size() && order_of(in[i]).ts == tick) continue;
      dst.push_back(Heartbeat{hb_itag, tick});
    }
    while (i < in.size()) dst.push_back(in[i++]);
    dst.push_back(Heartbeat{hb_itag, max_ts + 1});
  }
  return out;
}

}  // namespace dgs
