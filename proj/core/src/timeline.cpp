#include "simulst/timeline.hpp"

#include <algorithm>
#include <istream>
#include <ostream>

#include "fmt/format.h"
#include "json.hpp"
#include "simulst/error.hpp"

namespace simulst {

using nlohmann::json;

std::string to_string(EventKind kind) {
  switch (kind) {
    case EventKind::SegmentArrived: return "segment_arrived";
    case EventKind::Read: return "read";
    case EventKind::WriteUnit: return "write_unit";
    case EventKind::VocoderCall: return "vocoder_call";
    case EventKind::EmitAudio: return "emit_audio";
    case EventKind::Finish: return "finish";
  }
  return "unknown";
}

EventKind parse_event_kind(const std::string& name) {
  for (auto k : {EventKind::SegmentArrived, EventKind::Read, EventKind::WriteUnit,
                 EventKind::VocoderCall, EventKind::EmitAudio, EventKind::Finish})
    if (to_string(k) == name) return k;
  throw ProtocolError("unknown event kind '" + name + "'");
}

std::size_t SessionTimeline::full_source_token() const {
  for (std::size_t i = 0; i < consumed.size(); ++i)
    if (consumed[i] >= src_len) return i + 1;
  return 0;
}

Micros SessionTimeline::t0_sim_us() const {
  for (const auto& e : events)
    if (e.kind == EventKind::VocoderCall) return e.sim_us;
  return -1;
}

Micros SessionTimeline::t0_wall_us() const {
  for (const auto& e : events)
    if (e.kind == EventKind::VocoderCall) return e.wall_us;
  return -1;
}

void check_timeline(const SessionTimeline& tl) {
  Micros last_sim = 0;
  std::size_t units = 0, synthesized = 0;
  Micros prev_end_sim = 0, prev_end_wall = 0;
  for (std::size_t k = 0; k < tl.events.size(); ++k) {
    const Event& e = tl.events[k];
    if (e.sim_us < last_sim)
      throw ProtocolError(fmt::format("event {} ({}) moves the sim clock backwards", k,
                                      to_string(e.kind)));
    last_sim = e.sim_us;
    switch (e.kind) {
      case EventKind::WriteUnit:
        if (e.unit_index != units)
          throw ProtocolError(fmt::format("event {}: unit index {} out of order", k, e.unit_index));
        ++units;
        break;
      case EventKind::VocoderCall:
        if (e.first_unit != synthesized || e.first_unit + e.n_units > units)
          throw ProtocolError(fmt::format("event {}: vocoder call covers units not yet written", k));
        synthesized += e.n_units;
        break;
      case EventKind::EmitAudio:
        if (e.start_sim_us < prev_end_sim || e.start_wall_us < prev_end_wall)
          throw ProtocolError(fmt::format("event {}: emitted audio overlaps the previous span", k));
        prev_end_sim = e.end_sim_us;
        prev_end_wall = e.end_wall_us;
        break;
      default:
        break;
    }
  }
  if (tl.complete && synthesized != units)
    throw ProtocolError(fmt::format("{} of {} units were never synthesised", units - synthesized,
                                    units));
}

TimelineBuilder::TimelineBuilder(std::string session_id, const Utterance& utt, Micros segment_us,
                                 Micros unit_us, std::size_t units_per_token,
                                 std::size_t emission_rate) {
  timeline_.session_id = std::move(session_id);
  timeline_.src_len = utt.source_len();
  timeline_.segment_us = segment_us;
  timeline_.unit_us = unit_us;
  timeline_.units_per_token = units_per_token;
  timeline_.emission_rate = emission_rate;
  timeline_.reference = utt.target;
}

void TimelineBuilder::segment(std::size_t index, Micros arrival_us, Micros read_sim_us,
                              Micros read_wall_us) {
  if (index != read_ + 1)
    throw ProtocolError(fmt::format("segment {} read out of order (expected {})", index, read_ + 1));
  Event arrived;
  arrived.kind = EventKind::SegmentArrived;
  arrived.sim_us = arrival_us;
  arrived.wall_us = arrival_us;
  arrived.segment = index;
  timeline_.events.push_back(arrived);
  Event read = arrived;
  read.kind = EventKind::Read;
  read.sim_us = read_sim_us;
  read.wall_us = read_wall_us;
  timeline_.events.push_back(read);
  read_ = index;
}

bool TimelineBuilder::unit(std::size_t token_index, Token token, std::int64_t unit_id,
                           Micros sim_us, Micros wall_us) {
  auto& tl = timeline_;
  if (token_index == tl.hypothesis.size()) {
    tl.hypothesis.push_back(token);
    tl.consumed.push_back(read_);
  } else if (token_index + 1 != tl.hypothesis.size()) {
    throw ProtocolError(fmt::format("unit for token {} arrived out of order", token_index));
  }
  Event e;
  e.kind = EventKind::WriteUnit;
  e.sim_us = sim_us;
  e.wall_us = wall_us;
  e.token = token_index;
  e.unit = unit_id;
  e.unit_index = units_++;
  tl.events.push_back(e);
  ++pending_;
  return pending_ >= tl.emission_rate;
}

void TimelineBuilder::vocoder(Micros sim_us, Micros done_wall_us) {
  if (pending_ == 0) return;
  const Micros dur = timeline_.unit_us * static_cast<Micros>(pending_);
  Event call;
  call.kind = EventKind::VocoderCall;
  call.sim_us = sim_us;
  call.wall_us = done_wall_us;
  call.first_unit = units_ - pending_;
  call.n_units = pending_;
  timeline_.events.push_back(call);

  Event emit = call;
  emit.kind = EventKind::EmitAudio;
  emit.start_sim_us = std::max(sim_us, audio_end_sim_);
  emit.end_sim_us = emit.start_sim_us + dur;
  emit.start_wall_us = std::max(done_wall_us, audio_end_wall_);
  emit.end_wall_us = emit.start_wall_us + dur;
  audio_end_sim_ = emit.end_sim_us;
  audio_end_wall_ = emit.end_wall_us;
  timeline_.events.push_back(emit);
  pending_ = 0;
}

SessionTimeline TimelineBuilder::finish(Micros sim_us, Micros wall_us) {
  if (pending_ > 0) throw ProtocolError("finish with units still waiting for the vocoder");
  Event e;
  e.kind = EventKind::Finish;
  e.sim_us = sim_us;
  e.wall_us = wall_us;
  timeline_.events.push_back(e);
  timeline_.complete = true;
  return timeline_;
}

namespace {

json event_json(const std::string& session, const Event& e) {
  json j{{"session", session}, {"kind", to_string(e.kind)}, {"sim_us", e.sim_us},
         {"wall_us", e.wall_us}};
  switch (e.kind) {
    case EventKind::SegmentArrived:
    case EventKind::Read:
      j["segment"] = e.segment;
      break;
    case EventKind::WriteUnit:
      j["token"] = e.token;
      j["unit"] = e.unit;
      j["unit_index"] = e.unit_index;
      break;
    case EventKind::VocoderCall:
      j["first_unit"] = e.first_unit;
      j["n_units"] = e.n_units;
      break;
    case EventKind::EmitAudio:
      j["first_unit"] = e.first_unit;
      j["n_units"] = e.n_units;
      j["start_sim_us"] = e.start_sim_us;
      j["end_sim_us"] = e.end_sim_us;
      j["start_wall_us"] = e.start_wall_us;
      j["end_wall_us"] = e.end_wall_us;
      break;
    case EventKind::Finish:
      break;
  }
  return j;
}

Event event_from_json(const json& j) {
  Event e;
  e.kind = parse_event_kind(j.at("kind").get<std::string>());
  e.sim_us = j.at("sim_us").get<Micros>();
  e.wall_us = j.at("wall_us").get<Micros>();
  e.segment = j.value("segment", std::size_t{0});
  e.token = j.value("token", std::size_t{0});
  e.unit = j.value("unit", std::int64_t{0});
  e.unit_index = j.value("unit_index", std::size_t{0});
  e.first_unit = j.value("first_unit", std::size_t{0});
  e.n_units = j.value("n_units", std::size_t{0});
  e.start_sim_us = j.value("start_sim_us", Micros{0});
  e.end_sim_us = j.value("end_sim_us", Micros{0});
  e.start_wall_us = j.value("start_wall_us", Micros{0});
  e.end_wall_us = j.value("end_wall_us", Micros{0});
  return e;
}

}  // namespace

void write_session_log(std::ostream& os, const SessionTimeline& tl) {
  json head{{"session", tl.session_id},      {"kind", "session_start"},
            {"src_len", tl.src_len},         {"segment_us", tl.segment_us},
            {"unit_us", tl.unit_us},         {"units_per_token", tl.units_per_token},
            {"emission_rate", tl.emission_rate}, {"reference", tl.reference}};
  os << head.dump() << '\n';
  for (const auto& e : tl.events) {
    json j = event_json(tl.session_id, e);
    if (e.kind == EventKind::Finish) {
      j["hypothesis"] = tl.hypothesis;
      j["consumed"] = tl.consumed;
    }
    os << j.dump() << '\n';
  }
}

std::vector<SessionTimeline> read_session_logs(std::istream& is) {
  std::vector<SessionTimeline> out;
  std::string line;
  std::size_t lineno = 0;
  SessionTimeline* cur = nullptr;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      const std::string kind = j.at("kind").get<std::string>();
      if (kind == "session_start") {
        SessionTimeline tl;
        tl.session_id = j.at("session").get<std::string>();
        tl.src_len = j.at("src_len").get<std::size_t>();
        tl.segment_us = j.at("segment_us").get<Micros>();
        tl.unit_us = j.at("unit_us").get<Micros>();
        tl.units_per_token = j.at("units_per_token").get<std::size_t>();
        tl.emission_rate = j.at("emission_rate").get<std::size_t>();
        tl.reference = j.at("reference").get<std::vector<Token>>();
        out.push_back(std::move(tl));
        cur = &out.back();
        continue;
      }
      if (cur == nullptr || j.at("session").get<std::string>() != cur->session_id)
        throw ProtocolError("event outside its session_start block");
      cur->events.push_back(event_from_json(j));
      if (kind == "finish") {
        cur->hypothesis = j.at("hypothesis").get<std::vector<Token>>();
        cur->consumed = j.at("consumed").get<std::vector<std::size_t>>();
        cur->complete = true;
      }
    } catch (const json::exception& e) {
      throw ProtocolError(fmt::format("session log line {}: {}", lineno, e.what()));
    } catch (const ProtocolError& e) {
      throw ProtocolError(fmt::format("session log line {}: {}", lineno, e.what()));
    }
  }
  return out;
}

}  // namespace simulst
