#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "simulst/matrix.hpp"

namespace simulst {

enum class Action : std::uint8_t { Read, Write };

inline char to_char(Action a) noexcept { return a == Action::Read ? 'R' : 'W'; }

/// A READ/WRITE decision sequence with exactly M READs and N WRITEs.
///
/// A step is *forced* when the monotone process leaves no choice: nothing has
/// been read yet (must READ), the source is exhausted (must WRITE), or every
/// target token is out (must READ). Forced steps carry no likelihood.
class ActionTrace {
 public:
  ActionTrace() = default;
  /// Throws InvalidTraceError if a WRITE precedes the first READ.
  explicit ActionTrace(std::vector<Action> actions);

  static ActionTrace parse(std::string_view rw);

  const std::vector<Action>& actions() const noexcept { return actions_; }
  std::size_t size() const noexcept { return actions_.size(); }
  std::size_t source_len() const noexcept { return reads_; }
  std::size_t target_len() const noexcept { return writes_; }
  Action operator[](std::size_t k) const { return actions_[k]; }

  bool forced(std::size_t k) const { return forced_[k]; }
  const std::vector<bool>& forced_mask() const noexcept { return forced_; }

  /// Number of READs preceding each WRITE (1-based source prefix length).
  std::vector<std::size_t> consumption() const;

  std::string str() const;
  std::string forced_str() const;

  friend bool operator==(const ActionTrace& a, const ActionTrace& b) {
    return a.actions_ == b.actions_;
  }

 private:
  std::vector<Action> actions_;
  std::vector<bool> forced_;
  std::size_t reads_ = 0;
  std::size_t writes_ = 0;
};

/// Change-of-action indicators z*_k; z*_1 is always 0 and the first action
/// is READ.
struct ChangeTrace {
  std::vector<std::uint8_t> changes;
  std::vector<bool> forced;  // optional; empty when unknown

  friend bool operator==(const ChangeTrace& a, const ChangeTrace& b) {
    return a.changes == b.changes;
  }
};

/// Throws InvalidTraceError when the flips do not produce M READs and N WRITEs.
ActionTrace change_to_actions(const ChangeTrace& zstar, std::size_t src_len,
                              std::size_t tgt_len, Action initial = Action::Read);
ChangeTrace actions_to_changes(const ActionTrace& trace);

/// Row i is the indicator of the source position read before WRITE i.
AlignmentMatrix actions_to_alignment(const ActionTrace& trace);
/// Inverse of actions_to_alignment; rows must be one-hot and monotone.
ActionTrace alignment_to_actions(const AlignmentMatrix& alpha);

/// Trace with WRITE i placed after consumption[i] READs.
ActionTrace trace_from_consumption(const std::vector<std::size_t>& consumption,
                                   std::size_t src_len);

/// Every valid trace for (M, N), in lexicographic R<W order.
/// Throws SizeError if the count would exceed `limit`.
std::vector<ActionTrace> enumerate_traces(std::size_t src_len, std::size_t tgt_len,
                                          std::size_t limit = 1'000'000);

}  // namespace simulst
