#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>
#include <type_traits>

namespace fastracer {

// Identifiers are strong enums so a lock id can never be passed where a task
// id is expected.  Task 0 is the implicit root task.
enum class TaskId : std::uint64_t {};
enum class LockId : std::uint64_t {};
enum class VarId : std::uint64_t {};

inline constexpr TaskId kRootTask{0};

template <typename Id>
  requires std::is_enum_v<Id>
constexpr std::uint64_t raw(Id id) noexcept {
  return static_cast<std::uint64_t>(id);
}

using Clock = std::uint64_t;

// c@t: one logical time point of task t.
struct Epoch {
  TaskId task{};
  Clock clock{0};

  friend constexpr auto operator<=>(const Epoch&, const Epoch&) = default;
};

inline std::ostream& operator<<(std::ostream& os, TaskId t) { return os << raw(t); }
inline std::ostream& operator<<(std::ostream& os, LockId l) { return os << raw(l); }
inline std::ostream& operator<<(std::ostream& os, VarId v) { return os << raw(v); }
inline std::ostream& operator<<(std::ostream& os, const Epoch& e) {
  return os << raw(e.task) << '@' << e.clock;
}

}  // namespace fastracer
