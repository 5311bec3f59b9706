#pragma once

// The FastRacer detector: split vector clocks and joinsets for ordering,
// locksets for lock-protected accesses, and at most two reader and two writer
// entries per (variable, lockset), chosen by inheritance vector clocks when
// three accesses are mutually parallel.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fastracer/clocks.hpp"
#include "fastracer/ivc.hpp"
#include "fastracer/lockset.hpp"
#include "fastracer/report.hpp"
#include "fastracer/trace.hpp"
#include "fastracer/types.hpp"

namespace fastracer {

struct DetectorConfig {
  std::uint64_t threshold = kDefaultThreshold;
  std::size_t cache_capacity = kDefaultCacheCapacity;
  // Skip the metadata update of a read that raced with a prior write.
  bool paper_strict = false;
  // Skip the update when the access repeats an epoch already stored.
  bool same_epoch_fastpath = true;
};

struct TaskState {
  TaskId id{};
  Clock clock = 1;
  SplitClock sc;
  JoinSet joined;
  LockSet ls;
  Ivc ivc;
  ClockCache cache;

  Epoch epoch() const noexcept { return {id, clock}; }
};

struct AccessEntry {
  Epoch epoch{};
  Ivc ivc;
  bool occupied = false;
};

struct LockMetadata {
  LockSet lockset;
  std::array<AccessEntry, 2> readers;
  std::array<AccessEntry, 2> writers;

  std::size_t occupied() const noexcept {
    std::size_t n = 0;
    for (const auto& e : readers) n += e.occupied;
    for (const auto& e : writers) n += e.occupied;
    return n;
  }
};

struct VarMetadata {
  std::vector<LockMetadata> entries;

  std::size_t occupied() const noexcept {
    std::size_t n = 0;
    for (const auto& p : entries) n += p.occupied();
    return n;
  }
};

struct DetectorCounters {
  ClockCounters clocks;
  std::uint64_t max_ivc_length = 0;
  std::uint64_t lca_selections = 0;
  std::uint64_t metadata_bound_violations = 0;
};

inline TaskState make_root_task(const DetectorConfig& cfg = {}) {
  TaskState t;
  t.id = kRootTask;
  t.cache = ClockCache(cfg.cache_capacity);
  return t;
}

// Derives the child's state from the parent's pre-increment epoch, then
// advances the parent's clock.
inline TaskState on_spawn(TaskState& parent, TaskId child_id, const DetectorConfig& cfg = {},
                          DetectorCounters* counters = nullptr) {
  TaskState child;
  child.id = child_id;
  child.clock = 1;
  std::size_t rw_before = parent.sc.rw().size();
  child.sc = spawn_derive(parent.sc, parent.epoch(), cfg.threshold,
                          counters ? &counters->clocks : nullptr);
  if (parent.sc.rw().size() != rw_before) parent.cache.invalidate();
  child.joined = parent.joined.inherit();
  child.ls = parent.ls;
  child.ivc = derive_child_ivc(parent.ivc, parent.clock);
  child.cache = ClockCache(cfg.cache_capacity);
  parent.clock += 1;
  if (counters) counters->max_ivc_length = std::max<std::uint64_t>(counters->max_ivc_length, child.ivc.size());
  return child;
}

// The joined child's id, and everything the child had itself joined, become
// members of the parent's joinset.  No clock is merged.
inline void on_join(TaskState& parent, const TaskState& child) {
  parent.joined.absorb(child.joined);
  parent.joined.add(child.id);
}

inline void on_lock_op(TaskState& t, LockId lock, bool acquire) {
  t.ls = acquire ? with_acquired(t.ls, lock) : with_released(t.ls, lock);
}

inline bool check_hb_task(const Epoch& e, TaskState& t, ClockCounters* counters = nullptr) {
  if (e.task == t.id) return e.clock <= t.clock;
  if (e.clock <= t.cache.lookup(t.sc, e.task, counters)) return true;
  return t.joined.contains(e.task);
}

namespace detail {

inline void fill(AccessEntry& slot, const TaskState& t) {
  slot.epoch = t.epoch();
  slot.ivc = t.ivc;
  slot.occupied = true;
}

// Keeps the two slots mutually parallel.  A slot ordered before the current
// access is superseded by it; otherwise an empty slot is filled; with three
// mutually parallel accesses the pair with the highest LCA is retained.
inline void update_slots(std::array<AccessEntry, 2>& s, TaskState& t, const DetectorConfig& cfg,
                         DetectorCounters* counters) {
  const Epoch cur = t.epoch();
  if (cfg.same_epoch_fastpath) {
    for (const auto& e : s)
      if (e.occupied && e.epoch == cur) return;
  }
  ClockCounters* cc = counters ? &counters->clocks : nullptr;
  bool hb0 = s[0].occupied && check_hb_task(s[0].epoch, t, cc);
  bool hb1 = s[1].occupied && check_hb_task(s[1].epoch, t, cc);
  if (hb0 || hb1) {
    int keep = hb0 ? 0 : 1;
    fill(s[keep], t);
    if (hb0 && hb1) s[1] = AccessEntry{};
    return;
  }
  for (auto& e : s) {
    if (!e.occupied) {
      fill(e, t);
      return;
    }
  }
  if (counters) ++counters->lca_selections;
  IndexPair kept = select_pair_highest_lca(s[0].ivc, s[1].ivc, t.ivc);
  if (!kept.contains(2)) return;
  int evict = kept.contains(0) ? 1 : 0;
  fill(s[evict], t);
}

inline void check_slots(const std::array<AccessEntry, 2>& s, RaceKind kind, VarId var,
                        TaskState& t, std::size_t line, ClockCounters* cc,
                        std::vector<RaceReport>& out) {
  for (const auto& e : s) {
    if (e.occupied && !check_hb_task(e.epoch, t, cc))
      out.push_back(RaceReport{kind, var, e.epoch, t.epoch(), line});
  }
}

}  // namespace detail

// Race check followed by metadata update for one access.  Returns the number
// of reports appended.
inline std::size_t on_access(TaskState& t, VarMetadata& md, VarId var, bool is_write,
                             std::size_t line, std::vector<RaceReport>& reports,
                             const DetectorConfig& cfg = {}, DetectorCounters* counters = nullptr) {
  ClockCounters* cc = counters ? &counters->clocks : nullptr;
  const std::size_t before = reports.size();

  for (const auto& p : md.entries) {
    if (!are_disjoint(p.lockset, t.ls)) continue;
    detail::check_slots(p.writers, is_write ? RaceKind::WriteWrite : RaceKind::WriteRead, var, t,
                        line, cc, reports);
    if (is_write) detail::check_slots(p.readers, RaceKind::ReadWrite, var, t, line, cc, reports);
  }
  const std::size_t raced = reports.size() - before;
  if (cfg.paper_strict && !is_write && raced > 0) return raced;

  bool found = false;
  for (auto& p : md.entries) {
    if (!(p.lockset == t.ls)) continue;
    found = true;
    detail::update_slots(is_write ? p.writers : p.readers, t, cfg, counters);
    break;
  }
  if (!found) {
    LockMetadata fresh;
    fresh.lockset = t.ls;
    detail::fill(is_write ? fresh.writers[0] : fresh.readers[0], t);
    md.entries.push_back(std::move(fresh));
  }
  if (counters && md.occupied() > 4 * md.entries.size()) ++counters->metadata_bound_violations;
  return raced;
}

// Whole-trace driver.
class FastRacer {
 public:
  explicit FastRacer(DetectorConfig cfg = {}) : cfg_(cfg) {
    tasks_.emplace(kRootTask, make_root_task(cfg_));
  }

  void process(const Event& e) {
    switch (e.kind) {
      case EventKind::Spawn: {
        TaskState& parent = task(e.task);
        if (tasks_.count(e.child())) throw std::invalid_argument("ReusedTaskId");
        TaskState child = on_spawn(parent, e.child(), cfg_, &counters_);
        tasks_.emplace(e.child(), std::move(child));
        ++spawns_;
        break;
      }
      case EventKind::Join: {
        auto it = tasks_.find(e.child());
        if (it == tasks_.end()) throw UnknownTask(e.child());
        on_join(task(e.task), it->second);
        // A joined task never acts again; its joinset storage stays alive
        // through the parent's chain where needed.
        tasks_.erase(it);
        break;
      }
      case EventKind::Acquire:
        on_lock_op(task(e.task), e.lock(), true);
        break;
      case EventKind::Release:
        on_lock_op(task(e.task), e.lock(), false);
        break;
      case EventKind::Read:
      case EventKind::Write: {
        auto& md = vars_[e.var()];
        if (on_access(task(e.task), md, e.var(), e.kind == EventKind::Write, e.line, reports_, cfg_,
                      &counters_) > 0)
          racy_.insert(e.var());
        break;
      }
    }
  }

  AnalysisResult finish() {
    AnalysisResult r;
    r.reports = reports_;
    sort_reports(r.reports);
    r.racy_vars = racy_;
    auto& c = r.counters;
    c["vc_entries_allocated"] = counters_.clocks.vc_entries_allocated;
    c["vc_full_merges"] = counters_.clocks.vc_full_merges;
    c["cache_hits"] = counters_.clocks.cache_hits;
    c["cache_misses"] = counters_.clocks.cache_misses;
    c["max_ivc_length"] = counters_.max_ivc_length;
    c["lca_selections"] = counters_.lca_selections;
    c["metadata_bound_violations"] = counters_.metadata_bound_violations;
    std::uint64_t lock_entries = 0, occupied = 0, max_locksets = 0;
    for (const auto& [v, md] : vars_) {
      lock_entries += md.entries.size();
      occupied += md.occupied();
      max_locksets = std::max<std::uint64_t>(max_locksets, md.entries.size());
    }
    c["metadata_lock_entries"] = lock_entries;
    c["metadata_occupied_entries"] = occupied;
    c["max_locksets_per_var"] = max_locksets;
    c["tasks_spawned"] = spawns_;
    c["variables"] = vars_.size();
    c["races"] = r.reports.size();
    c["racy_vars"] = racy_.size();
    return r;
  }

  const VarMetadata* metadata(VarId v) const {
    auto it = vars_.find(v);
    return it == vars_.end() ? nullptr : &it->second;
  }
  const TaskState* task_state(TaskId t) const {
    auto it = tasks_.find(t);
    return it == tasks_.end() ? nullptr : &it->second;
  }
  const DetectorCounters& counters() const noexcept { return counters_; }

 private:
  TaskState& task(TaskId t) {
    auto it = tasks_.find(t);
    if (it == tasks_.end()) throw UnknownTask(t);
    return it->second;
  }

  DetectorConfig cfg_;
  std::unordered_map<TaskId, TaskState> tasks_;
  std::unordered_map<VarId, VarMetadata> vars_;
  std::vector<RaceReport> reports_;
  std::set<VarId> racy_;
  DetectorCounters counters_;
  std::uint64_t spawns_ = 0;
};

inline AnalysisResult analyze_trace(const Trace& trace, const DetectorConfig& cfg = {}) {
  require_valid(trace, false);
  FastRacer det(cfg);
  for (const auto& e : trace.events) det.process(e);
  return det.finish();
}

}  // namespace fastracer
