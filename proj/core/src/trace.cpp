#include "simulst/trace.hpp"

#include <string>

#include "simulst/error.hpp"

namespace simulst {

ActionTrace::ActionTrace(std::vector<Action> actions) : actions_(std::move(actions)) {
  for (Action a : actions_) (a == Action::Read ? reads_ : writes_)++;
  forced_.resize(actions_.size());
  std::size_t r = 0, w = 0;
  for (std::size_t k = 0; k < actions_.size(); ++k) {
    if (actions_[k] == Action::Write && r == 0)
      throw InvalidTraceError("WRITE at step " + std::to_string(k + 1) +
                              " precedes the first READ");
    forced_[k] = r == 0 || r == reads_ || w == writes_;
    (actions_[k] == Action::Read ? r : w)++;
  }
}

ActionTrace ActionTrace::parse(std::string_view rw) {
  std::vector<Action> acts;
  acts.reserve(rw.size());
  for (char c : rw) {
    if (c == 'R' || c == 'r')
      acts.push_back(Action::Read);
    else if (c == 'W' || c == 'w')
      acts.push_back(Action::Write);
    else if (c == ' ')
      continue;
    else
      throw InvalidTraceError(std::string("unexpected character '") + c + "' in trace");
  }
  return ActionTrace(std::move(acts));
}

std::vector<std::size_t> ActionTrace::consumption() const {
  std::vector<std::size_t> out;
  out.reserve(writes_);
  std::size_t r = 0;
  for (Action a : actions_) {
    if (a == Action::Read)
      ++r;
    else
      out.push_back(r);
  }
  return out;
}

std::string ActionTrace::str() const {
  std::string s;
  s.reserve(actions_.size());
  for (Action a : actions_) s.push_back(to_char(a));
  return s;
}

std::string ActionTrace::forced_str() const {
  std::string s;
  s.reserve(forced_.size());
  for (bool f : forced_) s.push_back(f ? '1' : '0');
  return s;
}

ActionTrace change_to_actions(const ChangeTrace& zstar, std::size_t src_len,
                              std::size_t tgt_len, Action initial) {
  std::vector<Action> acts;
  acts.reserve(zstar.changes.size());
  Action cur = initial;
  for (std::size_t k = 0; k < zstar.changes.size(); ++k) {
    if (k > 0 && zstar.changes[k]) cur = cur == Action::Read ? Action::Write : Action::Read;
    acts.push_back(cur);
  }
  ActionTrace trace(std::move(acts));
  if (trace.target_len() != tgt_len || trace.source_len() != src_len)
    throw InvalidTraceError("change trace implies " + std::to_string(trace.source_len()) +
                            " READs and " + std::to_string(trace.target_len()) +
                            " WRITEs, expected " + std::to_string(src_len) + " and " +
                            std::to_string(tgt_len));
  return trace;
}

ChangeTrace actions_to_changes(const ActionTrace& trace) {
  ChangeTrace z;
  z.changes.resize(trace.size());
  for (std::size_t k = 1; k < trace.size(); ++k)
    z.changes[k] = trace[k] != trace[k - 1] ? 1 : 0;
  z.forced = trace.forced_mask();
  return z;
}

AlignmentMatrix actions_to_alignment(const ActionTrace& trace) {
  AlignmentMatrix alpha(trace.target_len(), trace.source_len());
  const auto cons = trace.consumption();
  for (std::size_t i = 0; i < cons.size(); ++i) alpha(i, cons[i] - 1) = 1.0;
  return alpha;
}

ActionTrace alignment_to_actions(const AlignmentMatrix& alpha) {
  std::vector<std::size_t> cons;
  cons.reserve(alpha.rows());
  for (std::size_t i = 0; i < alpha.rows(); ++i) {
    std::size_t hot = alpha.cols();
    for (std::size_t j = 0; j < alpha.cols(); ++j) {
      const double v = alpha(i, j);
      if (v == 1.0 && hot == alpha.cols())
        hot = j;
      else if (v != 0.0)
        throw InvalidTraceError("alignment row " + std::to_string(i) + " is not one-hot");
    }
    if (hot == alpha.cols())
      throw InvalidTraceError("alignment row " + std::to_string(i) + " is empty");
    if (!cons.empty() && hot + 1 < cons.back())
      throw InvalidTraceError("alignment is not monotone at row " + std::to_string(i));
    cons.push_back(hot + 1);
  }
  return trace_from_consumption(cons, alpha.cols());
}

ActionTrace trace_from_consumption(const std::vector<std::size_t>& consumption,
                                   std::size_t src_len) {
  std::vector<Action> acts;
  acts.reserve(consumption.size() + src_len);
  std::size_t r = 0;
  for (std::size_t c : consumption) {
    if (c > src_len || c < r)
      throw InvalidTraceError("consumption sequence must be non-decreasing and <= M");
    for (; r < c; ++r) acts.push_back(Action::Read);
    acts.push_back(Action::Write);
  }
  for (; r < src_len; ++r) acts.push_back(Action::Read);
  return ActionTrace(std::move(acts));
}

namespace {

void enumerate_rec(std::size_t reads_left, std::size_t writes_left, std::size_t reads_done,
                   std::vector<Action>& cur, std::vector<ActionTrace>& out) {
  if (reads_left == 0 && writes_left == 0) {
    out.emplace_back(cur);
    return;
  }
  if (reads_left > 0) {
    cur.push_back(Action::Read);
    enumerate_rec(reads_left - 1, writes_left, reads_done + 1, cur, out);
    cur.pop_back();
  }
  if (writes_left > 0 && reads_done > 0) {
    cur.push_back(Action::Write);
    enumerate_rec(reads_left, writes_left - 1, reads_done, cur, out);
    cur.pop_back();
  }
}

}  // namespace

std::vector<ActionTrace> enumerate_traces(std::size_t src_len, std::size_t tgt_len,
                                          std::size_t limit) {
  if (src_len == 0) throw SizeError("enumerate_traces: source must be non-empty");
  // C(M + N - 1, N) traces once the first READ is fixed.
  double count = 1.0;
  for (std::size_t t = 1; t <= tgt_len; ++t)
    count = count * static_cast<double>(src_len - 1 + t) / static_cast<double>(t);
  if (count > static_cast<double>(limit))
    throw SizeError("enumerate_traces: " + std::to_string(count) + " traces exceed limit " +
                    std::to_string(limit));
  std::vector<ActionTrace> out;
  out.reserve(static_cast<std::size_t>(count + 0.5));
  std::vector<Action> cur;
  cur.reserve(src_len + tgt_len);
  enumerate_rec(src_len, tgt_len, 0, cur, out);
  return out;
}

}  // namespace simulst
