#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

namespace simulst::wire {

enum class Type { Hello, Segment, ReadReq, Write, EosSrc, EosTgt, Metrics };
enum class Direction { ServerToClient, ClientToServer };

std::string to_string(Type t);
/// Throws ProtocolError on an unknown name.
Type parse_type(const std::string& name);
Direction direction(Type t);

struct Message {
  Type type = Type::Hello;
  std::string session_id;
  std::uint64_t seq_no = 0;
  nlohmann::json body = nlohmann::json::object();
};

/// One JSON object, no trailing newline.
std::string encode(const Message& m);
/// Throws ProtocolError on malformed input.
Message decode(const std::string& line);

/// Validates one direction of one session: fixed session id, strictly
/// increasing seq_no, and message types allowed for that direction.
class StreamChecker {
 public:
  explicit StreamChecker(Direction dir) : dir_(dir) {}
  void check(const Message& m);

 private:
  Direction dir_;
  std::optional<std::uint64_t> last_seq_;
  std::optional<std::string> session_;
};

/// Stamps outgoing messages with the session id and the next seq_no.
class Sequencer {
 public:
  explicit Sequencer(std::string session_id = {}) : session_(std::move(session_id)) {}
  void set_session(std::string id) { session_ = std::move(id); }
  Message make(Type type, nlohmann::json body = nlohmann::json::object());

 private:
  std::string session_;
  std::uint64_t next_ = 1;
};

}  // namespace simulst::wire
