#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "simulst/corpus.hpp"

namespace simulst {

/// Integer microseconds; every session clock uses this unit.
using Micros = std::int64_t;

inline Micros ms_to_us(double ms) { return static_cast<Micros>(ms * 1000.0 + (ms >= 0 ? 0.5 : -0.5)); }
inline double us_to_ms(Micros us) { return static_cast<double>(us) / 1000.0; }

enum class EventKind { SegmentArrived, Read, WriteUnit, VocoderCall, EmitAudio, Finish };

std::string to_string(EventKind kind);
EventKind parse_event_kind(const std::string& name);

/// One timeline record. `sim_us` is the ideal clock (computation is free);
/// `wall_us` is the computation-aware clock. Payload fields are used per kind.
struct Event {
  EventKind kind = EventKind::Finish;
  Micros sim_us = 0;
  Micros wall_us = 0;
  std::size_t segment = 0;     // SegmentArrived, Read: 1-based segment index
  std::size_t token = 0;       // WriteUnit: 0-based target token index
  std::int64_t unit = 0;       // WriteUnit: discrete unit id
  std::size_t unit_index = 0;  // WriteUnit: position in the output unit stream
  std::size_t first_unit = 0;  // VocoderCall, EmitAudio
  std::size_t n_units = 0;     // VocoderCall, EmitAudio
  Micros start_sim_us = 0, end_sim_us = 0;    // EmitAudio
  Micros start_wall_us = 0, end_wall_us = 0;  // EmitAudio

  friend bool operator==(const Event&, const Event&) = default;
};

/// Full record of one simulated session.
struct SessionTimeline {
  std::string session_id;
  std::size_t src_len = 0;
  Micros segment_us = 0;
  Micros unit_us = 20'000;
  std::size_t units_per_token = 1;
  std::size_t emission_rate = 1;
  std::vector<Token> reference;
  std::vector<Token> hypothesis;
  std::vector<std::size_t> consumed;  // segments read when each token was written
  std::vector<Event> events;
  bool complete = false;

  Micros source_duration_us() const { return segment_us * static_cast<Micros>(src_len); }
  /// 1-based index of the first token written after the whole source was read,
  /// or 0 when no token was.
  std::size_t full_source_token() const;
  /// Time of the first vocoder call (generation start T_0); -1 if none.
  Micros t0_sim_us() const;
  Micros t0_wall_us() const;

  friend bool operator==(const SessionTimeline&, const SessionTimeline&) = default;
};

/// Throws ProtocolError describing the first violated timeline invariant.
void check_timeline(const SessionTimeline& tl);

/// Assembles a timeline from transport-level observations. Vocoder batching
/// (every `emission_rate` units, plus a final flush) is applied here so that
/// the in-process runner and the network server derive identical events.
class TimelineBuilder {
 public:
  TimelineBuilder(std::string session_id, const Utterance& utt, Micros segment_us,
                  Micros unit_us, std::size_t units_per_token, std::size_t emission_rate);

  void segment(std::size_t index, Micros arrival_us, Micros read_sim_us, Micros read_wall_us);
  /// Records one unit; returns true when the vocoder batch is full.
  bool unit(std::size_t token_index, Token token, std::int64_t unit_id, Micros sim_us,
            Micros wall_us);
  /// Emits the pending batch; `done_wall_us` is when synthesis finished.
  void vocoder(Micros sim_us, Micros done_wall_us);
  std::size_t pending_units() const noexcept { return pending_; }
  std::size_t segments_read() const noexcept { return read_; }
  std::size_t tokens_written() const noexcept { return timeline_.hypothesis.size(); }

  SessionTimeline finish(Micros sim_us, Micros wall_us);

 private:
  SessionTimeline timeline_;
  std::size_t read_ = 0;
  std::size_t units_ = 0;
  std::size_t pending_ = 0;
  Micros audio_end_sim_ = 0;
  Micros audio_end_wall_ = 0;
};

/// Session logs: one JSON object per line; a session_start header line
/// followed by its events and a finish record.
void write_session_log(std::ostream& os, const SessionTimeline& tl);
std::vector<SessionTimeline> read_session_logs(std::istream& is);

}  // namespace simulst
