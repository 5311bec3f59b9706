#pragma once

// Event model, text trace format, async-finish validation and relinearization.

#include <algorithm>
#include <charconv>
#include <cstddef>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fastracer/types.hpp"

namespace fastracer {

enum class EventKind : std::uint8_t { Spawn, Join, Acquire, Release, Read, Write };

constexpr std::string_view keyword(EventKind k) noexcept {
  switch (k) {
    case EventKind::Spawn: return "spawn";
    case EventKind::Join: return "join";
    case EventKind::Acquire: return "acquire";
    case EventKind::Release: return "release";
    case EventKind::Read: return "read";
    case EventKind::Write: return "write";
  }
  return "?";
}

// One trace record.  `task` is the acting task (the parent for spawn/join);
// `target` is the child, lock or variable depending on the kind.
struct Event {
  EventKind kind{EventKind::Read};
  TaskId task{};
  std::uint64_t target{0};
  std::size_t line{0};

  static Event spawn(TaskId parent, TaskId child, std::size_t line = 0) {
    return {EventKind::Spawn, parent, raw(child), line};
  }
  static Event join(TaskId parent, TaskId child, std::size_t line = 0) {
    return {EventKind::Join, parent, raw(child), line};
  }
  static Event acquire(TaskId t, LockId l, std::size_t line = 0) {
    return {EventKind::Acquire, t, raw(l), line};
  }
  static Event release(TaskId t, LockId l, std::size_t line = 0) {
    return {EventKind::Release, t, raw(l), line};
  }
  static Event read(TaskId t, VarId v, std::size_t line = 0) {
    return {EventKind::Read, t, raw(v), line};
  }
  static Event write(TaskId t, VarId v, std::size_t line = 0) {
    return {EventKind::Write, t, raw(v), line};
  }

  TaskId child() const noexcept { return TaskId{target}; }
  LockId lock() const noexcept { return LockId{target}; }
  VarId var() const noexcept { return VarId{target}; }

  bool is_access() const noexcept {
    return kind == EventKind::Read || kind == EventKind::Write;
  }
  bool is_task_op() const noexcept {
    return kind == EventKind::Spawn || kind == EventKind::Join;
  }

  friend bool operator==(const Event&, const Event&) = default;
};

struct Trace {
  std::vector<Event> events;

  std::size_t size() const noexcept { return events.size(); }
  bool empty() const noexcept { return events.empty(); }

  // Renumbers lines to 1..n, the positions the formatter would produce.
  void renumber() {
    for (std::size_t i = 0; i < events.size(); ++i) events[i].line = i + 1;
  }

  friend bool operator==(const Trace&, const Trace&) = default;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

namespace detail {

inline bool parse_id(std::string_view tok, std::uint64_t& out) {
  if (tok.empty()) return false;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), out);
  return ec == std::errc{} && ptr == tok.data() + tok.size();
}

inline std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t' || s[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < s.size() && s[j] != ' ' && s[j] != '\t' && s[j] != '\r') ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

}  // namespace detail

inline Trace parse_trace(std::string_view text) {
  static constexpr EventKind kKinds[] = {EventKind::Spawn,   EventKind::Join,
                                         EventKind::Acquire, EventKind::Release,
                                         EventKind::Read,    EventKind::Write};
  Trace trace;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string_view line = text.substr(pos, nl - pos);
    pos = nl + 1;
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto toks = detail::split_ws(line);
    if (toks.empty()) {
      if (nl == text.size()) break;
      continue;
    }
    const EventKind* kind = nullptr;
    for (const auto& k : kKinds)
      if (keyword(k) == toks[0]) kind = &k;
    if (kind == nullptr) throw ParseError(line_no, "unknown keyword '" + std::string(toks[0]) + "'");
    if (toks.size() != 3)
      throw ParseError(line_no, "expected 2 operands, got " + std::to_string(toks.size() - 1));
    std::uint64_t a = 0, b = 0;
    if (!detail::parse_id(toks[1], a))
      throw ParseError(line_no, "malformed id '" + std::string(toks[1]) + "'");
    if (!detail::parse_id(toks[2], b))
      throw ParseError(line_no, "malformed id '" + std::string(toks[2]) + "'");
    if (*kind == EventKind::Spawn || *kind == EventKind::Join) {
      if (a == b) throw ParseError(line_no, "task cannot spawn or join itself");
    }
    trace.events.push_back(Event{*kind, TaskId{a}, b, line_no});
    if (nl == text.size()) break;
  }
  return trace;
}

inline Trace parse_trace(std::istream& in) {
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_trace(ss.str());
}

inline std::string format_event(const Event& e) {
  std::string s(keyword(e.kind));
  s += ' ';
  s += std::to_string(raw(e.task));
  s += ' ';
  s += std::to_string(e.target);
  return s;
}

inline std::string write_trace(const Trace& t) {
  std::string out;
  out.reserve(t.events.size() * 16);
  for (const auto& e : t.events) {
    out += format_event(e);
    out += '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validation
// ---------------------------------------------------------------------------

enum class ValidationReason : std::uint8_t {
  UnknownTask,
  ReusedTaskId,
  EventAfterJoin,
  NonAncestorJoin,
  JoinBeforeDescendantDone,
  DoubleAcquire,
  ReleaseNotHeld,
  UnjoinedTaskAtEnd,
};

constexpr std::string_view to_string(ValidationReason r) noexcept {
  switch (r) {
    case ValidationReason::UnknownTask: return "UnknownTask";
    case ValidationReason::ReusedTaskId: return "ReusedTaskId";
    case ValidationReason::EventAfterJoin: return "EventAfterJoin";
    case ValidationReason::NonAncestorJoin: return "NonAncestorJoin";
    case ValidationReason::JoinBeforeDescendantDone: return "JoinBeforeDescendantDone";
    case ValidationReason::DoubleAcquire: return "DoubleAcquire";
    case ValidationReason::ReleaseNotHeld: return "ReleaseNotHeld";
    case ValidationReason::UnjoinedTaskAtEnd: return "UnjoinedTaskAtEnd";
  }
  return "?";
}

struct ValidationError {
  std::size_t position{0};
  ValidationReason reason{};
  TaskId task{};

  friend bool operator==(const ValidationError&, const ValidationError&) = default;
};

class InvalidTrace : public std::runtime_error {
 public:
  explicit InvalidTrace(std::vector<ValidationError> errors)
      : std::runtime_error(describe(errors)), errors_(std::move(errors)) {}
  const std::vector<ValidationError>& errors() const noexcept { return errors_; }

 private:
  static std::string describe(const std::vector<ValidationError>& errs) {
    if (errs.empty()) return "invalid trace";
    return "invalid trace: " + std::string(to_string(errs.front().reason)) + " at line " +
           std::to_string(errs.front().position);
  }
  std::vector<ValidationError> errors_;
};

// Line number used for end-of-trace diagnostics.
inline std::size_t end_position(const Trace& t) {
  return t.events.empty() ? 1 : t.events.back().line + 1;
}

inline std::vector<ValidationError> validate_trace(const Trace& trace, bool strict = false) {
  std::vector<ValidationError> errors;
  const auto& ev = trace.events;

  // Pass 1: spawn tree and the last position at which each task acts.  Used to
  // decide whether a join precedes events of the joined subtree.
  std::unordered_map<TaskId, TaskId> tree_parent;
  std::unordered_map<TaskId, std::size_t> last_act;
  for (std::size_t i = 0; i < ev.size(); ++i) {
    last_act[ev[i].task] = i;
    if (ev[i].kind == EventKind::Spawn && ev[i].child() != kRootTask)
      tree_parent.try_emplace(ev[i].child(), ev[i].task);
  }
  // subtree_last[t] = max last_act over t and its descendants.
  std::unordered_map<TaskId, std::size_t> subtree_last;
  {
    std::unordered_map<TaskId, std::size_t> depth;
    auto depth_of = [&](TaskId t) {
      std::size_t d = 0;
      std::set<TaskId> seen;
      while (t != kRootTask) {
        auto it = tree_parent.find(t);
        if (it == tree_parent.end() || !seen.insert(t).second) break;
        t = it->second;
        ++d;
      }
      return d;
    };
    std::vector<std::pair<std::size_t, TaskId>> order;
    for (auto& [t, p] : tree_parent) order.emplace_back(depth_of(t), t);
    std::sort(order.begin(), order.end(), std::greater<>());
    for (auto& [t, i] : last_act) subtree_last[t] = i;
    for (auto& [d, t] : order) {
      auto p = tree_parent[t];
      auto mine = subtree_last.count(t) ? subtree_last[t] : 0;
      auto& up = subtree_last[p];
      up = std::max(up, mine);
    }
  }

  // Pass 2: sequential state machine.
  std::set<TaskId> known{kRootTask};
  std::set<TaskId> joined;
  std::unordered_map<TaskId, TaskId> parent;
  std::unordered_map<TaskId, std::set<LockId>> held;

  auto report = [&](std::size_t i, ValidationReason r, TaskId t) {
    errors.push_back({ev[i].line, r, t});
  };
  auto check_live = [&](std::size_t i, TaskId t) {
    if (!known.count(t)) {
      report(i, ValidationReason::UnknownTask, t);
      return false;
    }
    if (joined.count(t)) {
      report(i, ValidationReason::EventAfterJoin, t);
      return false;
    }
    return true;
  };
  auto is_ancestor = [&](TaskId anc, TaskId t) {
    while (t != kRootTask) {
      auto it = parent.find(t);
      if (it == parent.end()) return false;
      t = it->second;
      if (t == anc) return true;
    }
    return false;
  };

  for (std::size_t i = 0; i < ev.size(); ++i) {
    const Event& e = ev[i];
    switch (e.kind) {
      case EventKind::Spawn: {
        bool ok = check_live(i, e.task);
        if (known.count(e.child())) {
          report(i, ValidationReason::ReusedTaskId, e.child());
          break;
        }
        known.insert(e.child());
        parent[e.child()] = e.task;
        if (ok) held[e.child()] = held[e.task];
        break;
      }
      case EventKind::Join: {
        check_live(i, e.task);
        TaskId c = e.child();
        if (!known.count(c)) {
          report(i, ValidationReason::UnknownTask, c);
          break;
        }
        if (joined.count(c)) {
          report(i, ValidationReason::EventAfterJoin, c);
          break;
        }
        if (!is_ancestor(e.task, c)) {
          report(i, ValidationReason::NonAncestorJoin, c);
          break;
        }
        if (subtree_last.count(c) && subtree_last[c] > i)
          report(i, ValidationReason::JoinBeforeDescendantDone, c);
        joined.insert(c);
        break;
      }
      case EventKind::Acquire: {
        if (!check_live(i, e.task)) break;
        if (!held[e.task].insert(e.lock()).second)
          report(i, ValidationReason::DoubleAcquire, e.task);
        break;
      }
      case EventKind::Release: {
        if (!check_live(i, e.task)) break;
        if (held[e.task].erase(e.lock()) == 0)
          report(i, ValidationReason::ReleaseNotHeld, e.task);
        break;
      }
      case EventKind::Read:
      case EventKind::Write:
        check_live(i, e.task);
        break;
    }
  }

  if (strict) {
    for (TaskId t : known) {
      if (t != kRootTask && !joined.count(t))
        errors.push_back({end_position(trace), ValidationReason::UnjoinedTaskAtEnd, t});
    }
  }
  return errors;
}

inline void require_valid(const Trace& t, bool strict = false) {
  auto errs = validate_trace(t, strict);
  if (!errs.empty()) throw InvalidTrace(std::move(errs));
}

// ---------------------------------------------------------------------------
// Relinearization
// ---------------------------------------------------------------------------

// Produces another valid schedule of the same events: per-task order is kept,
// a child runs only after its spawn, and a join waits for the whole joined
// subtree.  Lock mutual exclusion is honoured when some event allows it and
// relaxed otherwise, so the walk never deadlocks.
inline Trace relinearize(const Trace& trace, std::uint64_t seed) {
  require_valid(trace, false);
  const auto& ev = trace.events;

  std::map<TaskId, std::vector<std::size_t>> queue;
  std::unordered_map<TaskId, TaskId> parent;
  std::unordered_map<TaskId, std::size_t> remaining;  // subtree events left
  queue[kRootTask];
  for (std::size_t i = 0; i < ev.size(); ++i) {
    queue[ev[i].task].push_back(i);
    if (ev[i].kind == EventKind::Spawn) {
      parent[ev[i].child()] = ev[i].task;
      queue[ev[i].child()];
    }
  }
  for (std::size_t i = 0; i < ev.size(); ++i) {
    TaskId t = ev[i].task;
    for (;;) {
      ++remaining[t];
      auto it = parent.find(t);
      if (it == parent.end()) break;
      t = it->second;
    }
  }

  std::unordered_map<TaskId, std::size_t> pc;
  std::set<TaskId> started{kRootTask};
  std::unordered_map<LockId, std::multiset<TaskId>> holders;
  std::unordered_map<TaskId, std::multiset<LockId>> held;

  std::mt19937_64 rng(seed);
  Trace out;
  out.events.reserve(ev.size());

  std::vector<TaskId> enabled, relaxed;
  while (out.events.size() < ev.size()) {
    enabled.clear();
    relaxed.clear();
    for (TaskId t : started) {
      auto& q = queue[t];
      std::size_t p = pc[t];
      if (p >= q.size()) continue;
      const Event& e = ev[q[p]];
      if (e.kind == EventKind::Join && remaining[e.child()] != 0) continue;
      if (e.kind == EventKind::Acquire) {
        auto& hs = holders[e.lock()];
        bool other = std::any_of(hs.begin(), hs.end(), [&](TaskId h) { return h != t; });
        if (other) {
          relaxed.push_back(t);
          continue;
        }
      }
      enabled.push_back(t);
    }
    auto& pool = enabled.empty() ? relaxed : enabled;
    if (pool.empty()) throw std::logic_error("relinearize: no enabled event in a valid trace");
    std::uniform_int_distribution<std::size_t> pick(0, pool.size() - 1);
    TaskId t = pool[pick(rng)];
    const Event& e = ev[queue[t][pc[t]++]];
    out.events.push_back(e);
    switch (e.kind) {
      case EventKind::Spawn: {
        started.insert(e.child());
        for (LockId l : held[t]) {
          held[e.child()].insert(l);
          holders[l].insert(e.child());
        }
        break;
      }
      case EventKind::Acquire:
        holders[e.lock()].insert(t);
        held[t].insert(e.lock());
        break;
      case EventKind::Release: {
        auto& hs = holders[e.lock()];
        if (auto it = hs.find(t); it != hs.end()) hs.erase(it);
        auto& mine = held[t];
        if (auto it = mine.find(e.lock()); it != mine.end()) mine.erase(it);
        break;
      }
      case EventKind::Join: {
        // A finished task cannot keep a lock it inherited.
        for (LockId l : held[e.child()]) {
          auto& hs = holders[l];
          if (auto it = hs.find(e.child()); it != hs.end()) hs.erase(it);
        }
        held.erase(e.child());
        break;
      }
      default:
        break;
    }
    for (TaskId a = t;;) {
      --remaining[a];
      auto it = parent.find(a);
      if (it == parent.end()) break;
      a = it->second;
    }
  }
  out.renumber();
  return out;
}

}  // namespace fastracer
