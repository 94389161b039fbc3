// SPDX-License-Identifier: Apache-2.0
//
// JSONL trace files. One message per line:
//   {"stream": int, "tag": string, "ts": int, "payload": any | null}
// A null payload marks a heartbeat.
#pragma once

#include <iosfwd>
#include <vector>

#include "dgs/model.hpp"

namespace dgs {

/// Reads a trace. Lines may appear in any order across streams but must be in
/// stream order within a stream. Blank lines are skipped. Throws Error{Config}
/// on malformed lines and Error{UnknownTag} on tags outside the alphabet.
Streams read_trace(std::istream& in, const Alphabet& alphabet);

/// Writes all messages in O order.
void write_trace(std::ostream& out, const Streams& streams, const Alphabet& alphabet);

nlohmann::json message_to_json(const Message& m, const Alphabet& alphabet);
Message message_from_json(const nlohmann::json& j, const Alphabet& alphabet);

/// Adds a heartbeat on each stream at every multiple of `period` up to the
/// largest timestamp in the input, skipping ticks already taken by a message
/// of that stream, plus a terminal heartbeat one tick past the largest
/// timestamp. `heartbeat_tags[s]` is the tag heartbeats of stream s carry.
/// Existing heartbeats are kept. Requires period >= 1.
Streams inject_heartbeats(const Streams& streams, const std::vector<TagId>& heartbeat_tags,
                          Timestamp period);

}  // namespace dgs
