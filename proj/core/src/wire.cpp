#include "simulst/wire.hpp"

#include "simulst/error.hpp"

namespace simulst::wire {

using nlohmann::json;

std::string to_string(Type t) {
  switch (t) {
    case Type::Hello: return "HELLO";
    case Type::Segment: return "SEGMENT";
    case Type::ReadReq: return "READ_REQ";
    case Type::Write: return "WRITE";
    case Type::EosSrc: return "EOS_SRC";
    case Type::EosTgt: return "EOS_TGT";
    case Type::Metrics: return "METRICS";
  }
  return "UNKNOWN";
}

Type parse_type(const std::string& name) {
  for (auto t : {Type::Hello, Type::Segment, Type::ReadReq, Type::Write, Type::EosSrc,
                 Type::EosTgt, Type::Metrics})
    if (to_string(t) == name) return t;
  throw ProtocolError("unknown message type '" + name + "'");
}

Direction direction(Type t) {
  switch (t) {
    case Type::ReadReq:
    case Type::Write:
    case Type::EosTgt:
      return Direction::ClientToServer;
    default:
      return Direction::ServerToClient;
  }
}

std::string encode(const Message& m) {
  return json{{"type", to_string(m.type)},
              {"session_id", m.session_id},
              {"seq_no", m.seq_no},
              {"body", m.body}}
      .dump();
}

Message decode(const std::string& line) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::parse_error& e) {
    throw ProtocolError(std::string("malformed message: ") + e.what());
  }
  if (!j.is_object()) throw ProtocolError("message is not a JSON object");
  for (const char* key : {"type", "session_id", "seq_no", "body"})
    if (!j.contains(key)) throw ProtocolError(std::string("message lacks '") + key + "'");
  if (!j["type"].is_string() || !j["session_id"].is_string() ||
      !j["seq_no"].is_number_unsigned() || !j["body"].is_object())
    throw ProtocolError("message field has the wrong type");
  Message m;
  m.type = parse_type(j["type"].get<std::string>());
  m.session_id = j["session_id"].get<std::string>();
  m.seq_no = j["seq_no"].get<std::uint64_t>();
  m.body = std::move(j["body"]);
  return m;
}

void StreamChecker::check(const Message& m) {
  if (direction(m.type) != dir_)
    throw ProtocolError(to_string(m.type) + " sent in the wrong direction");
  if (last_seq_ && m.seq_no <= *last_seq_)
    throw ProtocolError("seq_no " + std::to_string(m.seq_no) + " does not increase past " +
                        std::to_string(*last_seq_));
  if (session_ && m.session_id != *session_)
    throw ProtocolError("message for session '" + m.session_id + "' on '" + *session_ + "'");
  last_seq_ = m.seq_no;
  if (!session_) session_ = m.session_id;
}

Message Sequencer::make(Type type, json body) {
  Message m;
  m.type = type;
  m.session_id = session_;
  m.seq_no = next_++;
  m.body = std::move(body);
  return m;
}

}  // namespace simulst::wire
