#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "fastracer/types.hpp"

namespace fastracer {

enum class LockSetErrorKind { DoubleAcquire, ReleaseNotHeld };

class LockSetError : public std::logic_error {
 public:
  LockSetError(LockSetErrorKind kind, LockId lock)
      : std::logic_error(std::string(kind == LockSetErrorKind::DoubleAcquire ? "DoubleAcquire"
                                                                             : "ReleaseNotHeld") +
                         " of lock " + std::to_string(raw(lock))),
        kind_(kind) {}
  LockSetErrorKind kind() const noexcept { return kind_; }

 private:
  LockSetErrorKind kind_;
};

// Immutable sorted set of held locks.  Copies share the underlying storage, so
// capturing a task's lockset into variable metadata is a pointer copy and the
// captured snapshot never observes later acquires or releases.
class LockSet {
 public:
  LockSet() = default;
  LockSet(std::initializer_list<LockId> locks) {
    std::vector<LockId> v(locks);
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    if (!v.empty()) locks_ = std::make_shared<const std::vector<LockId>>(std::move(v));
  }

  std::span<const LockId> locks() const noexcept {
    if (!locks_) return {};
    return {locks_->data(), locks_->size()};
  }
  std::size_t size() const noexcept { return locks_ ? locks_->size() : 0; }
  bool empty() const noexcept { return size() == 0; }
  bool contains(LockId l) const noexcept {
    auto s = locks();
    return std::binary_search(s.begin(), s.end(), l);
  }
  bool shares_storage_with(const LockSet& o) const noexcept { return locks_ == o.locks_; }

  friend bool operator==(const LockSet& a, const LockSet& b) noexcept {
    if (a.locks_ == b.locks_) return true;
    auto x = a.locks(), y = b.locks();
    return std::equal(x.begin(), x.end(), y.begin(), y.end());
  }

  friend LockSet with_acquired(const LockSet& s, LockId l);
  friend LockSet with_released(const LockSet& s, LockId l);

 private:
  explicit LockSet(std::vector<LockId> sorted) {
    if (!sorted.empty()) locks_ = std::make_shared<const std::vector<LockId>>(std::move(sorted));
  }

  std::shared_ptr<const std::vector<LockId>> locks_;
};

inline LockSet with_acquired(const LockSet& s, LockId l) {
  auto cur = s.locks();
  auto it = std::lower_bound(cur.begin(), cur.end(), l);
  if (it != cur.end() && *it == l) throw LockSetError(LockSetErrorKind::DoubleAcquire, l);
  std::vector<LockId> v;
  v.reserve(cur.size() + 1);
  v.insert(v.end(), cur.begin(), it);
  v.push_back(l);
  v.insert(v.end(), it, cur.end());
  return LockSet(std::move(v));
}

inline LockSet with_released(const LockSet& s, LockId l) {
  auto cur = s.locks();
  auto it = std::lower_bound(cur.begin(), cur.end(), l);
  if (it == cur.end() || *it != l) throw LockSetError(LockSetErrorKind::ReleaseNotHeld, l);
  std::vector<LockId> v;
  v.reserve(cur.size() - 1);
  v.insert(v.end(), cur.begin(), it);
  v.insert(v.end(), it + 1, cur.end());
  return LockSet(std::move(v));
}

inline bool are_disjoint(const LockSet& a, const LockSet& b) noexcept {
  auto x = a.locks(), y = b.locks();
  auto i = x.begin(), j = y.begin();
  while (i != x.end() && j != y.end()) {
    if (*i == *j) return false;
    if (*i < *j)
      ++i;
    else
      ++j;
  }
  return true;
}

}  // namespace fastracer

template <>
struct std::hash<fastracer::LockSet> {
  std::size_t operator()(const fastracer::LockSet& s) const noexcept {
    std::size_t h = 0xcbf29ce484222325ULL;
    for (auto l : s.locks()) h = (h ^ static_cast<std::size_t>(fastracer::raw(l))) * 0x100000001b3ULL;
    return h;
  }
};
