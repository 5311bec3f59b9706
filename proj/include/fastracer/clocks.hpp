#pragma once

// Vector clocks, the split read-only/read-write clock used by the detector,
// joinsets and the small recent-entry cache in front of clock lookups.

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fastracer/types.hpp"

namespace fastracer {

// Sparse vector clock stored as a flat map sorted by task id.  Absent entries
// read as 0 and no entry with clock 0 is ever stored.
class VectorClock {
 public:
  using Entry = std::pair<TaskId, Clock>;

  VectorClock() = default;
  VectorClock(std::initializer_list<Entry> entries) {
    for (const auto& [t, c] : entries) raise(t, c);
  }

  Clock get(TaskId t) const noexcept {
    auto it = find(t);
    return (it != entries_.end() && it->first == t) ? it->second : 0;
  }

  void set(TaskId t, Clock c) {
    auto it = find(t);
    bool present = it != entries_.end() && it->first == t;
    if (c == 0) {
      if (present) entries_.erase(it);
    } else if (present) {
      it->second = c;
    } else {
      entries_.insert(it, {t, c});
    }
  }

  // Pointwise max with a single entry.  Returns true if a new key was added.
  bool raise(TaskId t, Clock c) {
    if (c == 0) return false;
    auto it = find(t);
    if (it != entries_.end() && it->first == t) {
      it->second = std::max(it->second, c);
      return false;
    }
    entries_.insert(it, {t, c});
    return true;
  }

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  void clear() noexcept { entries_.clear(); }
  auto begin() const noexcept { return entries_.begin(); }
  auto end() const noexcept { return entries_.end(); }

  friend bool operator==(const VectorClock&, const VectorClock&) = default;

 private:
  std::vector<Entry>::iterator find(TaskId t) {
    return std::lower_bound(entries_.begin(), entries_.end(), t,
                            [](const Entry& e, TaskId k) { return e.first < k; });
  }
  std::vector<Entry>::const_iterator find(TaskId t) const {
    return std::lower_bound(entries_.begin(), entries_.end(), t,
                            [](const Entry& e, TaskId k) { return e.first < k; });
  }

  std::vector<Entry> entries_;
};

inline VectorClock vc_merge(const VectorClock& a, const VectorClock& b) {
  VectorClock out;
  auto i = a.begin(), j = b.begin();
  // Both inputs are sorted, so the append below keeps `out` sorted.
  while (i != a.end() || j != b.end()) {
    if (j == b.end() || (i != a.end() && i->first < j->first)) {
      out.raise(i->first, i->second);
      ++i;
    } else if (i == a.end() || j->first < i->first) {
      out.raise(j->first, j->second);
      ++j;
    } else {
      out.raise(i->first, std::max(i->second, j->second));
      ++i;
      ++j;
    }
  }
  return out;
}

// Pointwise a ⊑ b.
inline bool vc_leq(const VectorClock& a, const VectorClock& b) noexcept {
  return std::all_of(a.begin(), a.end(), [&](const auto& e) { return e.second <= b.get(e.first); });
}

struct ClockCounters {
  std::uint64_t vc_entries_allocated = 0;
  std::uint64_t vc_full_merges = 0;
  std::uint64_t cache_hits = 0;
  std::uint64_t cache_misses = 0;
};

inline constexpr std::uint64_t kDefaultThreshold = 8;

// A task's vector clock split into a read-only part shared by handle with
// other tasks and a small private read-write part.  A lookup takes the max of
// both parts, so rw may shadow ro.
class SplitClock {
 public:
  SplitClock() : ro_(empty_ro()) {}
  SplitClock(std::shared_ptr<const VectorClock> ro, VectorClock rw)
      : ro_(ro ? std::move(ro) : empty_ro()), rw_(std::move(rw)) {}

  Clock lookup(TaskId t) const noexcept { return std::max(ro_->get(t), rw_.get(t)); }

  const VectorClock& ro() const noexcept { return *ro_; }
  const VectorClock& rw() const noexcept { return rw_; }
  const std::shared_ptr<const VectorClock>& ro_handle() const noexcept { return ro_; }

  friend SplitClock spawn_derive(SplitClock& parent, Epoch parent_epoch, std::uint64_t threshold,
                                 ClockCounters* counters);

 private:
  static const std::shared_ptr<const VectorClock>& empty_ro() {
    static const auto kEmpty = std::make_shared<const VectorClock>();
    return kEmpty;
  }

  std::shared_ptr<const VectorClock> ro_;
  VectorClock rw_;
};

// Child clock at a spawn.  When the parent's rw part has grown past the
// threshold, ro and rw are folded into a fresh immutable block that both the
// child and the parent adopt; otherwise the child shares the parent's ro
// block and copies only rw.  The child's rw always gains the parent's
// pre-increment epoch.
inline SplitClock spawn_derive(SplitClock& parent, Epoch parent_epoch,
                               std::uint64_t threshold = kDefaultThreshold,
                               ClockCounters* counters = nullptr) {
  SplitClock child;
  if (parent.rw_.size() > threshold) {
    auto merged = std::make_shared<const VectorClock>(vc_merge(*parent.ro_, parent.rw_));
    parent.ro_ = merged;
    parent.rw_.clear();
    child.ro_ = std::move(merged);
    if (counters) {
      counters->vc_full_merges += 1;
      counters->vc_entries_allocated += child.ro_->size();
    }
  } else {
    child.ro_ = parent.ro_;
    child.rw_ = parent.rw_;
  }
  child.rw_.raise(parent_epoch.task, parent_epoch.clock);
  if (counters) counters->vc_entries_allocated += child.rw_.size();
  return child;
}

inline bool epoch_leq_vc(const Epoch& e, const VectorClock& ro, const VectorClock& rw) noexcept {
  return e.clock <= std::max(ro.get(e.task), rw.get(e.task));
}

// ---------------------------------------------------------------------------
// JoinSet
// ---------------------------------------------------------------------------

// Set of task ids already joined into a task.  Inheriting is O(1): the child
// keeps a pointer to the parent's storage plus the prefix length visible at
// the spawn, so the parent's later additions stay invisible to the child.
// Membership walks at most one node per inheritance level that added ids.
class JoinSet {
  struct Node {
    std::shared_ptr<const Node> base;
    std::size_t base_prefix = 0;
    std::unordered_map<TaskId, std::size_t> index;
    std::vector<TaskId> order;

    bool contains_prefix(TaskId t, std::size_t prefix) const {
      for (const Node* n = this; n != nullptr;) {
        if (auto it = n->index.find(t); it != n->index.end() && it->second < prefix) return true;
        prefix = n->base_prefix;
        n = n->base.get();
      }
      return false;
    }
  };

 public:
  JoinSet() : node_(std::make_shared<Node>()) {}

  bool contains(TaskId t) const { return node_->contains_prefix(t, node_->order.size()); }

  // Snapshot for a newly spawned child.
  JoinSet inherit() const {
    JoinSet child;
    if (node_->order.empty()) {
      child.node_->base = node_->base;
      child.node_->base_prefix = node_->base_prefix;
    } else {
      child.node_->base = node_;
      child.node_->base_prefix = node_->order.size();
    }
    return child;
  }

  void add(TaskId t) {
    if (contains(t)) return;
    node_->index.emplace(t, node_->order.size());
    node_->order.push_back(t);
  }

  // Adds every member of `other`.  Walks other's node chain and stops at the
  // first node whose visible prefix is already covered by this set's chain.
  void absorb(const JoinSet& other) {
    std::unordered_map<const Node*, std::size_t> mine;
    {
      std::size_t prefix = node_->order.size();
      for (const Node* n = node_.get(); n != nullptr; n = n->base.get()) {
        mine.emplace(n, prefix);
        prefix = n->base_prefix;
      }
    }
    std::vector<TaskId> pending;
    std::size_t prefix = other.node_->order.size();
    for (const Node* n = other.node_.get(); n != nullptr; n = n->base.get()) {
      std::size_t from = 0;
      if (auto it = mine.find(n); it != mine.end()) {
        if (it->second >= prefix) break;
        from = it->second;
      }
      for (std::size_t i = from; i < prefix; ++i) pending.push_back(n->order[i]);
      prefix = n->base_prefix;
    }
    for (TaskId t : pending) add(t);
  }

  // Ids added directly to this set (not inherited), in insertion order.
  const std::vector<TaskId>& own() const noexcept { return node_->order; }

 private:
  std::shared_ptr<Node> node_;
};

inline JoinSet joinset_inherit(const JoinSet& parent) { return parent.inherit(); }

inline JoinSet joinset_add(JoinSet s, TaskId t) {
  s.add(t);
  return s;
}

// ---------------------------------------------------------------------------
// Clock cache
// ---------------------------------------------------------------------------

inline constexpr std::size_t kDefaultCacheCapacity = 4;
inline constexpr std::size_t kMaxCacheCapacity = 16;

// Recency-ordered window of the last few (task, clock) lookups.  Purely an
// accelerator: it must be invalidated whenever the clock it fronts changes.
class ClockCache {
 public:
  explicit ClockCache(std::size_t capacity = kDefaultCacheCapacity)
      : capacity_(std::min(capacity, kMaxCacheCapacity)) {}

  std::size_t capacity() const noexcept { return capacity_; }
  std::size_t size() const noexcept { return size_; }
  void invalidate() noexcept { size_ = 0; }

  Clock lookup(const SplitClock& sc, TaskId t, ClockCounters* counters = nullptr) {
    for (std::size_t i = 0; i < size_; ++i) {
      if (slots_[i].first == t) {
        auto hit = slots_[i];
        std::move_backward(slots_.begin(), slots_.begin() + i, slots_.begin() + i + 1);
        slots_[0] = hit;
        if (counters) ++counters->cache_hits;
        return hit.second;
      }
    }
    Clock c = sc.lookup(t);
    if (capacity_ == 0) return c;
    if (counters) ++counters->cache_misses;
    std::size_t n = std::min(size_ + 1, capacity_);
    std::move_backward(slots_.begin(), slots_.begin() + (n - 1), slots_.begin() + n);
    slots_[0] = {t, c};
    size_ = n;
    return c;
  }

 private:
  std::size_t capacity_;
  std::size_t size_ = 0;
  std::array<std::pair<TaskId, Clock>, kMaxCacheCapacity> slots_{};
};

inline Clock cached_lookup(const SplitClock& sc, ClockCache& cache, TaskId t,
                           ClockCounters* counters = nullptr) {
  return cache.lookup(sc, t, counters);
}

}  // namespace fastracer
