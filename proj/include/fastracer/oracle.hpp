#pragma once

// Brute-force apparent-race oracle.  Builds the happens-before graph of the
// spawn/join structure (locks add no edges), closes it transitively with
// bitsets, and reports every conflicting parallel pair whose locksets at the
// time of access are disjoint.

#include <cstddef>
#include <cstdint>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "fastracer/lockset.hpp"
#include "fastracer/trace.hpp"

namespace fastracer {

inline constexpr std::size_t kDefaultOracleEventCap = 500;

class SizeLimit : public std::length_error {
 public:
  SizeLimit(std::size_t events, std::size_t cap)
      : std::length_error("trace has " + std::to_string(events) + " events; oracle cap is " +
                          std::to_string(cap)) {}
};

struct AccessRecord {
  TaskId task{};
  VarId var{};
  bool is_write = false;
  LockSet lockset;
  std::size_t line = 0;
  std::size_t index = 0;  // position in the trace
};

struct RacePair {
  AccessRecord a;  // earlier in the trace
  AccessRecord b;

  std::string kinds() const {
    std::string s;
    s += a.is_write ? 'W' : 'R';
    s += b.is_write ? 'W' : 'R';
    return s;
  }
};

inline std::string format_pair(const RacePair& p) {
  std::ostringstream os;
  os << "PAIR var=" << p.a.var << " a=" << p.a.task << "@line" << p.a.line << " b=" << p.b.task
     << "@line" << p.b.line << " kinds=" << p.kinds();
  return os.str();
}

class HbGraph {
 public:
  explicit HbGraph(const Trace& trace) : n_(trace.size()), words_((n_ + 63) / 64) {
    anc_.assign(n_ * words_, 0);
    std::unordered_map<TaskId, std::size_t> last;  // latest node of each task
    auto edge = [&](std::size_t from, std::size_t to) {
      std::uint64_t* dst = row(to);
      const std::uint64_t* src = row(from);
      for (std::size_t w = 0; w < words_; ++w) dst[w] |= src[w];
      dst[from / 64] |= std::uint64_t{1} << (from % 64);
    };
    // Edges always point forward in trace order, so one pass in order closes
    // the relation.
    for (std::size_t i = 0; i < n_; ++i) {
      const Event& e = trace.events[i];
      if (auto it = last.find(e.task); it != last.end()) edge(it->second, i);
      if (e.kind == EventKind::Join) {
        if (auto it = last.find(e.child()); it != last.end()) edge(it->second, i);
      }
      last[e.task] = i;
      if (e.kind == EventKind::Spawn) last[e.child()] = i;
    }
  }

  std::size_t size() const noexcept { return n_; }

  bool reaches(std::size_t from, std::size_t to) const {
    if (from == to) return true;
    return (row(to)[from / 64] >> (from % 64)) & 1U;
  }

  bool mhp(std::size_t x, std::size_t y) const { return !reaches(x, y) && !reaches(y, x); }

 private:
  std::uint64_t* row(std::size_t i) { return anc_.data() + i * words_; }
  const std::uint64_t* row(std::size_t i) const { return anc_.data() + i * words_; }

  std::size_t n_;
  std::size_t words_;
  std::vector<std::uint64_t> anc_;  // anc_[i] = set of nodes that reach i
};

// Lockset held at each access, with locks inherited by spawned children.
inline std::vector<AccessRecord> access_records(const Trace& trace) {
  std::vector<AccessRecord> out;
  std::unordered_map<TaskId, LockSet> held;
  for (std::size_t i = 0; i < trace.size(); ++i) {
    const Event& e = trace.events[i];
    switch (e.kind) {
      case EventKind::Spawn: held[e.child()] = held[e.task]; break;
      case EventKind::Acquire: held[e.task] = with_acquired(held[e.task], e.lock()); break;
      case EventKind::Release: held[e.task] = with_released(held[e.task], e.lock()); break;
      case EventKind::Read:
      case EventKind::Write:
        out.push_back({e.task, e.var(), e.kind == EventKind::Write, held[e.task], e.line, i});
        break;
      case EventKind::Join: break;
    }
  }
  return out;
}

inline std::vector<RacePair> apparent_races(const Trace& trace,
                                            std::size_t max_events = kDefaultOracleEventCap) {
  require_valid(trace, false);
  if (trace.size() > max_events) throw SizeLimit(trace.size(), max_events);
  HbGraph g(trace);
  auto acc = access_records(trace);
  std::vector<RacePair> out;
  for (std::size_t j = 0; j < acc.size(); ++j) {
    for (std::size_t i = 0; i < j; ++i) {
      const auto& a = acc[i];
      const auto& b = acc[j];
      if (a.var != b.var || !(a.is_write || b.is_write)) continue;
      if (!are_disjoint(a.lockset, b.lockset)) continue;
      if (!g.mhp(a.index, b.index)) continue;
      out.push_back({a, b});
    }
  }
  return out;
}

inline std::set<VarId> racy_vars(const std::vector<RacePair>& pairs) {
  std::set<VarId> s;
  for (const auto& p : pairs) s.insert(p.a.var);
  return s;
}

}  // namespace fastracer
