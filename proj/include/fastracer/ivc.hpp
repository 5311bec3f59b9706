#pragma once

// Inheritance vector clocks (IVCs).  A task's IVC lists the spawn-time clocks
// of its ancestors along the root-to-task path, so it identifies the task's
// position in the spawn tree without materializing the tree.

#include <algorithm>
#include <array>
#include <cassert>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "fastracer/trace.hpp"
#include "fastracer/types.hpp"

namespace fastracer {

class Ivc {
 public:
  Ivc() = default;  // the root's empty IVC
  Ivc(std::initializer_list<Clock> labels)
      : labels_(labels.size() ? std::make_shared<const std::vector<Clock>>(labels) : nullptr) {}

  std::span<const Clock> labels() const noexcept {
    if (!labels_) return {};
    return {labels_->data(), labels_->size()};
  }
  std::size_t size() const noexcept { return labels_ ? labels_->size() : 0; }
  Clock operator[](std::size_t i) const { return (*labels_)[i]; }
  bool same_handle(const Ivc& o) const noexcept { return labels_ == o.labels_; }

  friend bool operator==(const Ivc& a, const Ivc& b) noexcept {
    auto x = a.labels(), y = b.labels();
    return std::equal(x.begin(), x.end(), y.begin(), y.end());
  }

  friend Ivc derive_child_ivc(const Ivc& parent, Clock parent_clock);

 private:
  explicit Ivc(std::vector<Clock> v) : labels_(std::make_shared<const std::vector<Clock>>(std::move(v))) {}

  std::shared_ptr<const std::vector<Clock>> labels_;
};

// parent ++ [parent_clock], where parent_clock is the spawner's clock before
// the spawn increments it.
inline Ivc derive_child_ivc(const Ivc& parent, Clock parent_clock) {
  std::vector<Clock> v;
  v.reserve(parent.size() + 1);
  auto p = parent.labels();
  v.assign(p.begin(), p.end());
  v.push_back(parent_clock);
  return Ivc(std::move(v));
}

struct IndexPair {
  int first = 0;
  int second = 1;
  friend bool operator==(const IndexPair&, const IndexPair&) = default;
  bool contains(int i) const noexcept { return first == i || second == i; }
};

// Picks the two of three IVCs whose tasks have the highest (closest to the
// root) lowest common ancestor.  The three label sequences are scanned in
// lockstep up to the first position where they disagree, treating "ended" as
// a value of its own:
//   - exactly one ended: that task is an ancestor of the others; keep it and
//     the lower index of the other two;
//   - two ended together (duplicate IVCs): keep the lower of the two plus the
//     third;
//   - all three differ: keep (0, 1);
//   - one differs from the two that agree: keep it plus the lower index of
//     the agreeing pair.
// Identical IVCs yield (0, 1).
inline IndexPair select_pair_highest_lca(const Ivc& a, const Ivc& b, const Ivc& c) {
  const std::array<std::span<const Clock>, 3> v{a.labels(), b.labels(), c.labels()};
  const std::size_t longest = std::max({v[0].size(), v[1].size(), v[2].size()});
  auto at = [&](int k, std::size_t i) -> std::optional<Clock> {
    if (i < v[k].size()) return v[k][i];
    return std::nullopt;
  };
  for (std::size_t i = 0; i <= longest; ++i) {
    std::array<std::optional<Clock>, 3> x{at(0, i), at(1, i), at(2, i)};
    int ended = 0;
    for (const auto& o : x) ended += !o.has_value();
    if (ended == 3) break;
    if (x[0] == x[1] && x[1] == x[2]) continue;
    if (ended == 1) {
      int e = !x[0] ? 0 : (!x[1] ? 1 : 2);
      int other = e == 0 ? 1 : 0;
      return {std::min(e, other), std::max(e, other)};
    }
    if (ended == 2) {
      int live = x[0] ? 0 : (x[1] ? 1 : 2);
      int dup = live == 0 ? 1 : 0;
      return {std::min(live, dup), std::max(live, dup)};
    }
    int odd;
    if (x[0] == x[1])
      odd = 2;
    else if (x[0] == x[2])
      odd = 1;
    else if (x[1] == x[2])
      odd = 0;
    else
      return {0, 1};
    int other = odd == 0 ? 1 : 0;
    return {std::min(odd, other), std::max(odd, other)};
  }
  return {0, 1};
}

class UnknownTask : public std::out_of_range {
 public:
  explicit UnknownTask(TaskId t)
      : std::out_of_range("unknown task " + std::to_string(raw(t))), task_(t) {}
  TaskId task() const noexcept { return task_; }

 private:
  TaskId task_;
};

// Explicit spawn tree.  Only used to check IVC-based decisions in tests and
// counters; the detector never consults it.
class InheritanceTreeOracle {
 public:
  InheritanceTreeOracle() { depth_[kRootTask] = 0; }

  static InheritanceTreeOracle from_trace(const Trace& t) {
    InheritanceTreeOracle tree;
    for (const auto& e : t.events)
      if (e.kind == EventKind::Spawn) tree.add(e.task, e.child());
    return tree;
  }

  void add(TaskId parent, TaskId child) {
    auto d = depth(parent);
    parent_[child] = parent;
    depth_[child] = d + 1;
  }

  bool contains(TaskId t) const { return depth_.count(t) != 0; }

  std::size_t depth(TaskId t) const {
    auto it = depth_.find(t);
    if (it == depth_.end()) throw UnknownTask(t);
    return it->second;
  }

  TaskId parent(TaskId t) const {
    auto it = parent_.find(t);
    if (it == parent_.end()) throw UnknownTask(t);
    return it->second;
  }

  std::size_t max_depth() const {
    std::size_t m = 0;
    for (const auto& [t, d] : depth_) m = std::max(m, d);
    return m;
  }

  std::size_t size() const noexcept { return depth_.size(); }

  // Depth of the lowest common ancestor, by lifting the deeper node and then
  // walking both up in lockstep.
  std::size_t lca_depth(TaskId x, TaskId y) const {
    std::size_t dx = depth(x), dy = depth(y);
    while (dx > dy) {
      x = parent(x);
      --dx;
    }
    while (dy > dx) {
      y = parent(y);
      --dy;
    }
    while (x != y) {
      x = parent(x);
      y = parent(y);
      --dx;
    }
    return dx;
  }

 private:
  std::unordered_map<TaskId, TaskId> parent_;
  std::unordered_map<TaskId, std::size_t> depth_;
};

inline std::size_t oracle_lca_depth(const InheritanceTreeOracle& tree, TaskId x, TaskId y) {
  return tree.lca_depth(x, y);
}

}  // namespace fastracer
