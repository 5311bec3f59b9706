#pragma once

// Seeded generation of async-finish traces and the built-in golden traces.
//
// A generated program is a spawn tree.  Every non-root task is either
// "finishing" (each of its spawns happens inside one of its own finish
// blocks, and blocks do not nest) or "escaping" (it has no finish block; its
// children are joined by the finish that will join it).  The root always
// finishes.  Joins of one finish are emitted back to back in spawn order.
// The program is then executed by a seeded random scheduler that honours
// lock mutual exclusion.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "fastracer/trace.hpp"

namespace fastracer {

struct GenParams {
  std::uint64_t seed = 1;
  std::size_t max_depth = 4;   // levels in the spawn tree; 1 = root only
  std::size_t max_fanout = 3;
  std::size_t min_fanout = 0;
  std::size_t max_tasks = 12;  // including the root
  std::size_t n_vars = 4;
  std::size_t n_locks = 2;
  std::size_t n_accesses = 16;
  double lock_prob = 0.3;
  double write_prob = 0.4;
  double escape_prob = 0.3;    // chance a non-root task is escaping
  double hot_fraction = 0.2;   // share of variables designated hot
  double hot_bias = 0.5;       // chance an access targets a hot variable
  std::size_t max_events = 0;  // 0 = unbounded

  void check() const {
    auto prob = [](double p) { return p >= 0.0 && p <= 1.0; };
    if (!prob(lock_prob) || !prob(write_prob) || !prob(escape_prob) || !prob(hot_fraction) ||
        !prob(hot_bias))
      throw std::invalid_argument("GenParams: probabilities must lie in [0, 1]");
    if (max_depth == 0 || max_tasks == 0 || n_vars == 0)
      throw std::invalid_argument("GenParams: max_depth, max_tasks and n_vars must be positive");
    if (min_fanout > max_fanout) throw std::invalid_argument("GenParams: min_fanout > max_fanout");
  }
};

namespace detail {

enum class OpKind : std::uint8_t { Read, Write, Acquire, Release, Spawn, FinishBegin, FinishEnd };

struct Op {
  OpKind kind;
  std::uint64_t arg = 0;  // var, lock or child task
};

struct TaskPlan {
  TaskId id{};
  std::size_t depth = 0;
  bool escaping = false;
  std::vector<TaskId> children;
  std::vector<std::vector<Op>> work;  // access units: one access or one locked region
  std::vector<Op> body;
};

class Generator {
 public:
  explicit Generator(const GenParams& p) : p_(p), rng_(p.seed) { p_.check(); }

  Trace run() {
    build_tree();
    assign_work();
    for (auto& plan : plans_) lay_out(plan);
    return schedule();
  }

 private:
  bool coin(double prob) { return std::bernoulli_distribution(prob)(rng_); }
  std::size_t uniform(std::size_t lo, std::size_t hi) {
    return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_);
  }
  bool budget(std::size_t cost) {
    if (p_.max_events == 0) return true;
    if (used_ + cost > p_.max_events) return false;
    used_ += cost;
    return true;
  }

  void build_tree() {
    plans_.push_back(TaskPlan{kRootTask, 0, false, {}, {}, {}});
    std::deque<std::size_t> frontier{0};
    while (!frontier.empty()) {
      std::size_t idx = frontier.front();
      frontier.pop_front();
      if (plans_[idx].depth + 1 >= p_.max_depth) continue;
      std::size_t want = uniform(p_.min_fanout, p_.max_fanout);
      for (std::size_t k = 0; k < want; ++k) {
        if (plans_.size() >= p_.max_tasks || !budget(2)) break;
        TaskPlan child;
        child.id = TaskId{plans_.size()};
        child.depth = plans_[idx].depth + 1;
        child.escaping = coin(p_.escape_prob);
        plans_[idx].children.push_back(child.id);
        plans_.push_back(std::move(child));
        frontier.push_back(plans_.size() - 1);
      }
    }
  }

  std::uint64_t pick_var() {
    std::size_t hot = std::max<std::size_t>(1, static_cast<std::size_t>(p_.n_vars * p_.hot_fraction));
    if (coin(p_.hot_bias)) return uniform(0, hot - 1);
    return uniform(0, p_.n_vars - 1);
  }

  Op access() {
    return Op{coin(p_.write_prob) ? OpKind::Write : OpKind::Read, pick_var()};
  }

  void assign_work() {
    std::size_t left = p_.n_accesses;
    while (left > 0) {
      auto& plan = plans_[uniform(0, plans_.size() - 1)];
      std::vector<Op> unit;
      if (p_.n_locks > 0 && coin(p_.lock_prob)) {
        std::size_t k = uniform(1, std::min<std::size_t>(2, p_.n_locks));
        std::vector<std::uint64_t> locks;
        while (locks.size() < k) {
          std::uint64_t l = uniform(0, p_.n_locks - 1);
          if (std::find(locks.begin(), locks.end(), l) == locks.end()) locks.push_back(l);
        }
        std::sort(locks.begin(), locks.end());
        std::size_t n = std::min<std::size_t>(left, uniform(1, 3));
        if (!budget(2 * k + 1)) break;
        std::size_t taken = 1;
        while (taken < n && budget(1)) ++taken;
        for (auto l : locks) unit.push_back({OpKind::Acquire, l});
        for (std::size_t i = 0; i < taken; ++i) unit.push_back(access());
        for (auto it = locks.rbegin(); it != locks.rend(); ++it) unit.push_back({OpKind::Release, *it});
        left -= taken;
      } else {
        if (!budget(1)) break;
        unit.push_back(access());
        left -= 1;
      }
      plan.work.push_back(std::move(unit));
    }
  }

  // Interleaves work units with spawns (spawn order preserved) and, for a
  // finishing task, wraps the spawns into consecutive non-nested finish
  // blocks.
  void lay_out(TaskPlan& plan) {
    std::vector<int> seq;  // 0 = work unit, 1 = spawn
    seq.insert(seq.end(), plan.work.size(), 0);
    seq.insert(seq.end(), plan.children.size(), 1);
    std::shuffle(seq.begin(), seq.end(), rng_);
    std::size_t wi = 0, ci = 0;
    bool open = false, spawned_in_block = false;
    for (int item : seq) {
      if (item == 0) {
        for (const auto& op : plan.work[wi]) plan.body.push_back(op);
        ++wi;
      } else {
        if (!plan.escaping && !open) {
          plan.body.push_back({OpKind::FinishBegin});
          open = true;
          spawned_in_block = false;
        }
        plan.body.push_back({OpKind::Spawn, raw(plan.children[ci++])});
        spawned_in_block = true;
      }
      if (open && spawned_in_block && coin(0.4)) {
        plan.body.push_back({OpKind::FinishEnd});
        open = false;
      }
    }
    if (open) plan.body.push_back({OpKind::FinishEnd});
  }

  struct Finish {
    TaskId owner{};
    std::vector<TaskId> registered;
    std::size_t pending = 0;
  };

  struct Runtime {
    std::size_t pc = 0;
    bool done = false;
    std::size_t ief = SIZE_MAX;           // finish that will join this task
    std::vector<std::size_t> open;        // finishes opened by this task
    std::size_t waiting_finish = SIZE_MAX;
  };

  Trace schedule() {
    const std::size_t n = plans_.size();
    std::vector<Runtime> rt(n);
    std::vector<Finish> finishes;
    std::vector<std::size_t> runnable{0};
    std::unordered_map<std::uint64_t, std::size_t> lock_holder;
    std::unordered_map<std::uint64_t, std::vector<std::size_t>> lock_waiters;
    Trace out;

    auto emit = [&](Event e) { out.events.push_back(e); };
    auto make_runnable = [&](std::size_t t) { runnable.push_back(t); };

    while (!runnable.empty()) {
      std::size_t slot = uniform(0, runnable.size() - 1);
      std::size_t t = runnable[slot];
      auto& plan = plans_[t];
      auto& r = rt[t];
      auto remove_self = [&] {
        runnable[slot] = runnable.back();
        runnable.pop_back();
      };
      if (r.pc == plan.body.size()) {
        r.done = true;
        remove_self();
        if (r.ief != SIZE_MAX) {
          auto& f = finishes[r.ief];
          if (--f.pending == 0) {
            auto owner = static_cast<std::size_t>(raw(f.owner));
            if (rt[owner].waiting_finish == r.ief) {
              rt[owner].waiting_finish = SIZE_MAX;
              make_runnable(owner);
            }
          }
        }
        continue;
      }
      const Op& op = plan.body[r.pc];
      switch (op.kind) {
        case OpKind::Read: emit(Event::read(plan.id, VarId{op.arg})); ++r.pc; break;
        case OpKind::Write: emit(Event::write(plan.id, VarId{op.arg})); ++r.pc; break;
        case OpKind::Acquire: {
          auto it = lock_holder.find(op.arg);
          if (it != lock_holder.end()) {
            lock_waiters[op.arg].push_back(t);
            remove_self();
            break;
          }
          lock_holder[op.arg] = t;
          emit(Event::acquire(plan.id, LockId{op.arg}));
          ++r.pc;
          break;
        }
        case OpKind::Release: {
          lock_holder.erase(op.arg);
          emit(Event::release(plan.id, LockId{op.arg}));
          ++r.pc;
          for (auto w : lock_waiters[op.arg]) make_runnable(w);
          lock_waiters[op.arg].clear();
          break;
        }
        case OpKind::Spawn: {
          auto c = static_cast<std::size_t>(op.arg);
          std::size_t f = r.open.empty() ? r.ief : r.open.back();
          if (f == SIZE_MAX) throw std::logic_error("generator: spawn without an enclosing finish");
          finishes[f].registered.push_back(plans_[c].id);
          ++finishes[f].pending;
          rt[c].ief = f;
          emit(Event::spawn(plan.id, plans_[c].id));
          make_runnable(c);
          ++r.pc;
          break;
        }
        case OpKind::FinishBegin:
          finishes.push_back(Finish{plan.id, {}, 0});
          r.open.push_back(finishes.size() - 1);
          ++r.pc;
          break;
        case OpKind::FinishEnd: {
          std::size_t f = r.open.back();
          if (finishes[f].pending > 0) {
            r.waiting_finish = f;
            remove_self();
            break;
          }
          for (TaskId c : finishes[f].registered) emit(Event::join(plan.id, c));
          r.open.pop_back();
          ++r.pc;
          break;
        }
      }
    }
    out.renumber();
    return out;
  }

  GenParams p_;
  std::mt19937_64 rng_;
  std::size_t used_ = 0;
  std::vector<TaskPlan> plans_;
};

}  // namespace detail

inline Trace generate(const GenParams& p) { return detail::Generator(p).run(); }

class UnknownName : public std::invalid_argument {
 public:
  explicit UnknownName(std::string_view name)
      : std::invalid_argument("unknown builtin trace '" + std::string(name) + "'") {}
};

// Built-in figure encodings.  Task Tk of a figure is task id k, except T1, the
// main task, which is the root (id 0).
namespace builtin_ids {
inline constexpr VarId kVar1{100};
inline constexpr VarId kVar2{101};
inline constexpr LockId kLock1{10};
inline constexpr VarId kX{200};
}  // namespace builtin_ids

inline constexpr std::string_view kBuiltinFigVar1Var2 = R"(# T1 (root) spawns T2 and T3; T3 spawns T4 and T5.
# var1 (100) is written by T2, T4, T5 under lock L1 (10).
# var2 (101) is written by T2 and read by T3 without a lock.
spawn 0 2
spawn 0 3
acquire 2 10
write 2 100
release 2 10
write 2 101
spawn 3 4
spawn 3 5
read 3 101
acquire 4 10
write 4 100
release 4 10
acquire 5 10
write 5 100
release 5 10
join 3 4
join 3 5
join 0 2
join 0 3
)";

inline constexpr std::string_view kBuiltinFigReaders = R"(# T1 (root) spawns T3, then runs a finish around T2.
# T2 and T3 read x (200); T1 joins T2 and spawns T4, which reads x.
# T5, spawned next, writes x in parallel with T3 and T4.
spawn 0 3
spawn 0 2
read 2 200
read 3 200
join 0 2
spawn 0 4
read 4 200
spawn 0 5
write 5 200
join 0 4
join 0 5
join 0 3
)";

inline std::vector<std::string_view> builtin_names() { return {"fig_var1_var2", "fig_readers"}; }

inline Trace builtin(std::string_view name) {
  if (name == "fig_var1_var2") return parse_trace(kBuiltinFigVar1Var2);
  if (name == "fig_readers") return parse_trace(kBuiltinFigReaders);
  throw UnknownName(name);
}

}  // namespace fastracer
