#pragma once

// Task-level FastTrack: one full vector clock per task and per lock, a last
// write epoch and an adaptive read epoch / read vector clock per variable.

#include <cstdint>
#include <optional>
#include <unordered_map>
#include <vector>

#include "fastracer/clocks.hpp"
#include "fastracer/report.hpp"
#include "fastracer/trace.hpp"

namespace fastracer {

struct FtTaskState {
  TaskId id{};
  Clock clock = 1;
  VectorClock vc;

  Epoch epoch() const noexcept { return {id, clock}; }
  bool knows(const Epoch& e) const noexcept { return e.clock <= vc.get(e.task); }
};

struct FtLockState {
  VectorClock vc;
};

struct FtVarState {
  std::optional<Epoch> write;
  std::optional<Epoch> read;  // used while !read_shared
  VectorClock read_vc;        // used while read_shared
  bool read_shared = false;
};

struct FtCounters {
  std::uint64_t vc_entries_allocated = 0;
  std::uint64_t read_vc_inflations = 0;
};

inline FtTaskState ft_root() {
  FtTaskState t;
  t.id = kRootTask;
  t.vc.set(kRootTask, 1);
  return t;
}

inline FtTaskState ft_spawn(FtTaskState& parent, TaskId child_id, FtCounters* counters = nullptr) {
  FtTaskState child;
  child.id = child_id;
  child.vc = parent.vc;
  child.clock = 1;
  child.vc.set(child_id, 1);
  parent.clock += 1;
  parent.vc.set(parent.id, parent.clock);
  if (counters) counters->vc_entries_allocated += child.vc.size();
  return child;
}

inline void ft_join(FtTaskState& parent, const FtTaskState& child, FtCounters* counters = nullptr) {
  std::size_t before = parent.vc.size();
  parent.vc = vc_merge(parent.vc, child.vc);
  if (counters) counters->vc_entries_allocated += parent.vc.size() - before;
}

inline void ft_acquire(FtTaskState& t, const FtLockState& l, FtCounters* counters = nullptr) {
  std::size_t before = t.vc.size();
  t.vc = vc_merge(t.vc, l.vc);
  if (counters) counters->vc_entries_allocated += t.vc.size() - before;
}

inline void ft_release(FtTaskState& t, FtLockState& l, FtCounters* counters = nullptr) {
  l.vc = t.vc;
  if (counters) counters->vc_entries_allocated += l.vc.size();
  t.clock += 1;
  t.vc.set(t.id, t.clock);
}

inline std::size_t ft_access(const FtTaskState& t, FtVarState& v, VarId var, bool is_write,
                             std::size_t line, std::vector<RaceReport>& out,
                             FtCounters* counters = nullptr) {
  const Epoch cur = t.epoch();
  const std::size_t before = out.size();
  if (!is_write) {
    if (!v.read_shared && v.read == cur) return 0;
    if (v.read_shared && v.read_vc.get(t.id) == t.clock) return 0;
    if (v.write && !t.knows(*v.write))
      out.push_back({RaceKind::WriteRead, var, *v.write, cur, line});
    if (v.read_shared) {
      v.read_vc.set(t.id, t.clock);
    } else if (!v.read || t.knows(*v.read)) {
      v.read = cur;
    } else {
      v.read_shared = true;
      v.read_vc.clear();
      v.read_vc.set(v.read->task, v.read->clock);
      v.read_vc.set(t.id, t.clock);
      v.read.reset();
      if (counters) {
        ++counters->read_vc_inflations;
        counters->vc_entries_allocated += v.read_vc.size();
      }
    }
    return out.size() - before;
  }

  if (v.write == cur) return 0;
  if (v.write && !t.knows(*v.write))
    out.push_back({RaceKind::WriteWrite, var, *v.write, cur, line});
  if (v.read_shared) {
    for (const auto& [u, c] : v.read_vc)
      if (c > t.vc.get(u)) out.push_back({RaceKind::ReadWrite, var, Epoch{u, c}, cur, line});
  } else if (v.read && !t.knows(*v.read)) {
    out.push_back({RaceKind::ReadWrite, var, *v.read, cur, line});
  }
  if (out.size() == before) {
    v.write = cur;
    if (v.read_shared) {
      v.read_shared = false;
      v.read_vc.clear();
    }
  }
  return out.size() - before;
}

class FastTrack {
 public:
  FastTrack() { tasks_.emplace(kRootTask, ft_root()); }

  void process(const Event& e) {
    switch (e.kind) {
      case EventKind::Spawn:
        tasks_.emplace(e.child(), ft_spawn(task(e.task), e.child(), &counters_));
        break;
      case EventKind::Join: {
        auto it = tasks_.find(e.child());
        if (it == tasks_.end()) throw UnknownTask(e.child());
        ft_join(task(e.task), it->second, &counters_);
        tasks_.erase(it);
        break;
      }
      case EventKind::Acquire:
        ft_acquire(task(e.task), locks_[e.lock()], &counters_);
        break;
      case EventKind::Release:
        ft_release(task(e.task), locks_[e.lock()], &counters_);
        break;
      case EventKind::Read:
      case EventKind::Write:
        if (ft_access(task(e.task), vars_[e.var()], e.var(), e.kind == EventKind::Write, e.line,
                      reports_, &counters_) > 0)
          racy_.insert(e.var());
        break;
    }
  }

  AnalysisResult finish() const {
    AnalysisResult r;
    r.reports = reports_;
    sort_reports(r.reports);
    r.racy_vars = racy_;
    r.counters["vc_entries_allocated"] = counters_.vc_entries_allocated;
    r.counters["read_vc_inflations"] = counters_.read_vc_inflations;
    r.counters["variables"] = vars_.size();
    r.counters["races"] = r.reports.size();
    r.counters["racy_vars"] = racy_.size();
    return r;
  }

  const FtCounters& counters() const noexcept { return counters_; }

 private:
  FtTaskState& task(TaskId t) {
    auto it = tasks_.find(t);
    if (it == tasks_.end()) throw UnknownTask(t);
    return it->second;
  }

  std::unordered_map<TaskId, FtTaskState> tasks_;
  std::unordered_map<LockId, FtLockState> locks_;
  std::unordered_map<VarId, FtVarState> vars_;
  std::vector<RaceReport> reports_;
  std::set<VarId> racy_;
  FtCounters counters_;
};

inline AnalysisResult ft_analyze(const Trace& trace) {
  require_valid(trace, false);
  FastTrack ft;
  for (const auto& e : trace.events) ft.process(e);
  return ft.finish();
}

}  // namespace fastracer
