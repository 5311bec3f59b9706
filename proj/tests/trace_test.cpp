#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>
#include <set>

#include "fastracer/trace.hpp"
#include "fastracer/workload.hpp"

using namespace fastracer;

namespace {

std::vector<ValidationReason> reasons(const std::vector<ValidationError>& errs) {
  std::vector<ValidationReason> out;
  for (const auto& e : errs) out.push_back(e.reason);
  return out;
}

Trace small_random(std::uint64_t seed) {
  GenParams p;
  p.seed = seed;
  p.max_tasks = 6;
  p.max_depth = 3;
  p.max_fanout = 3;
  p.n_accesses = 8;
  p.n_vars = 3;
  p.max_events = 24;
  return generate(p);
}

// Independent restatement of the constraints a schedule must keep.
bool respects_constraints(const Trace& original, const Trace& candidate) {
  std::map<TaskId, std::vector<Event>> a, b;
  auto strip = [](Event e) {
    e.line = 0;
    return e;
  };
  for (const auto& e : original.events) a[e.task].push_back(strip(e));
  for (const auto& e : candidate.events) b[e.task].push_back(strip(e));
  if (a != b) return false;
  std::set<TaskId> started{kRootTask};
  std::map<TaskId, TaskId> parent;
  for (const auto& e : original.events)
    if (e.kind == EventKind::Spawn) parent[e.child()] = e.task;
  std::map<TaskId, std::size_t> last;
  for (std::size_t i = 0; i < candidate.size(); ++i) last[candidate.events[i].task] = i;
  for (std::size_t i = 0; i < candidate.size(); ++i) {
    const auto& e = candidate.events[i];
    if (!started.count(e.task)) return false;
    if (e.kind == EventKind::Spawn) started.insert(e.child());
    if (e.kind == EventKind::Join) {
      for (const auto& [t, pos] : last) {
        TaskId x = t;
        bool in_subtree = (x == e.child());
        while (!in_subtree && parent.count(x)) {
          x = parent[x];
          in_subtree = (x == e.child());
        }
        if (in_subtree && pos > i) return false;
      }
    }
  }
  return true;
}

}  // namespace

TEST(ParseTrace, MinimalWellFormedTrace) {
  Trace t = parse_trace("spawn 0 1\nread 1 5\njoin 0 1");
  ASSERT_EQ(t.size(), 3u);
  EXPECT_EQ(t.events[0], Event::spawn(TaskId{0}, TaskId{1}, 1));
  EXPECT_EQ(t.events[1], Event::read(TaskId{1}, VarId{5}, 2));
  EXPECT_EQ(t.events[2], Event::join(TaskId{0}, TaskId{1}, 3));
}

TEST(ParseTrace, SkipsCommentsAndBlankLines) {
  Trace t = parse_trace("# comment\n\nwrite 0 7");
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t.events[0], Event::write(kRootTask, VarId{7}, 3));
  Trace u = parse_trace("read 0 1   # trailing comment\n\t\n");
  ASSERT_EQ(u.size(), 1u);
}

TEST(ParseTrace, UnknownKeywordReportsLine) {
  try {
    parse_trace("spwan 0 1");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 1u);
  }
}

TEST(ParseTrace, RejectsMalformedTokens) {
  auto line_of = [](std::string_view text) -> std::size_t {
    try {
      parse_trace(text);
    } catch (const ParseError& e) {
      return e.line();
    }
    return 0;
  };
  EXPECT_EQ(line_of("read 0 1\nread 0 -1\n"), 2u);
  EXPECT_EQ(line_of("read 0\n"), 1u);
  EXPECT_EQ(line_of("read 0 1 2\n"), 1u);
  EXPECT_EQ(line_of("read x 1\n"), 1u);
  EXPECT_EQ(line_of("\n\nspawn 3 3\n"), 3u);
  EXPECT_EQ(line_of("read 0 99999999999999999999999\n"), 1u);
}

TEST(WriteTrace, SingleSpacesAndNewlines) {
  Trace t = parse_trace("  spawn   0\t1  \nacquire 1 10\nrelease 1 10\njoin 0 1");
  EXPECT_EQ(write_trace(t), "spawn 0 1\nacquire 1 10\nrelease 1 10\njoin 0 1\n");
}

TEST(WriteTrace, RoundTripsGeneratedTraces) {
  for (std::uint64_t s = 1; s <= 50; ++s) {
    Trace t = small_random(s);
    EXPECT_EQ(parse_trace(write_trace(t)), t) << "seed " << s;
  }
}

TEST(ValidateTrace, UnknownTask) {
  auto errs = validate_trace(parse_trace("spawn 0 1\nread 2 5"));
  ASSERT_EQ(errs.size(), 1u);
  EXPECT_EQ(errs[0].reason, ValidationReason::UnknownTask);
  EXPECT_EQ(errs[0].position, 2u);
}

TEST(ValidateTrace, GrandparentJoinIsTerminallyStrict) {
  EXPECT_TRUE(validate_trace(parse_trace("spawn 0 1\nspawn 1 2\njoin 0 2\njoin 0 1"), true).empty());
}

TEST(ValidateTrace, SiblingsCannotJoinEachOther) {
  auto errs = validate_trace(parse_trace("spawn 0 1\nspawn 0 2\njoin 1 2"));
  ASSERT_EQ(errs.size(), 1u);
  EXPECT_EQ(errs[0].reason, ValidationReason::NonAncestorJoin);
  EXPECT_EQ(errs[0].position, 3u);
}

TEST(ValidateTrace, EachViolationKind) {
  EXPECT_EQ(reasons(validate_trace(parse_trace("spawn 0 1\nspawn 0 1"))),
            std::vector{ValidationReason::ReusedTaskId});
  EXPECT_EQ(reasons(validate_trace(parse_trace("spawn 1 0"))),
            (std::vector{ValidationReason::UnknownTask, ValidationReason::ReusedTaskId}));
  EXPECT_EQ(reasons(validate_trace(parse_trace("spawn 0 1\njoin 0 1\nread 1 3"))),
            (std::vector{ValidationReason::JoinBeforeDescendantDone,
                         ValidationReason::EventAfterJoin}));
  EXPECT_EQ(reasons(validate_trace(parse_trace("spawn 0 1\nspawn 1 2\njoin 0 1\nread 2 4\njoin 0 2"))),
            std::vector{ValidationReason::JoinBeforeDescendantDone});
  EXPECT_EQ(reasons(validate_trace(parse_trace("acquire 0 1\nacquire 0 1"))),
            std::vector{ValidationReason::DoubleAcquire});
  EXPECT_EQ(reasons(validate_trace(parse_trace("release 0 1"))),
            std::vector{ValidationReason::ReleaseNotHeld});
  EXPECT_EQ(reasons(validate_trace(parse_trace("spawn 0 1\njoin 0 1\njoin 0 1"))),
            std::vector{ValidationReason::EventAfterJoin});
  EXPECT_EQ(reasons(validate_trace(parse_trace("spawn 0 1\njoin 1 0"))),
            std::vector{ValidationReason::NonAncestorJoin});
}

TEST(ValidateTrace, InheritedLockCanBeReleasedByChild) {
  EXPECT_TRUE(validate_trace(parse_trace("acquire 0 5\nspawn 0 1\nrelease 1 5\nrelease 0 5\njoin 0 1")).empty());
}

TEST(ValidateTrace, StrictModeRequiresAllJoined) {
  Trace t = parse_trace("spawn 0 1\nread 1 5");
  EXPECT_TRUE(validate_trace(t, false).empty());
  auto errs = validate_trace(t, true);
  ASSERT_EQ(errs.size(), 1u);
  EXPECT_EQ(errs[0].reason, ValidationReason::UnjoinedTaskAtEnd);
  EXPECT_EQ(errs[0].position, 3u);
  EXPECT_EQ(errs[0].task, TaskId{1});
}

TEST(ValidateTrace, InterleavingIsValidExactlyWhenCausal) {
  // Random interleavings that keep each task's own order: the validator must
  // accept exactly those where every task starts after its spawn and every
  // join follows the joined subtree.
  std::mt19937_64 rng(42);
  int accepted = 0, rejected = 0;
  for (std::uint64_t s = 1; s <= 40; ++s) {
    Trace t = small_random(s);
    std::map<TaskId, std::vector<Event>> per_task;
    for (const auto& e : t.events) per_task[e.task].push_back(e);
    for (int k = 0; k < 25; ++k) {
      std::vector<TaskId> order;
      for (const auto& [task, evs] : per_task) order.insert(order.end(), evs.size(), task);
      std::shuffle(order.begin(), order.end(), rng);
      std::map<TaskId, std::size_t> next;
      Trace p;
      for (TaskId task : order) p.events.push_back(per_task[task][next[task]++]);
      p.renumber();
      bool valid = validate_trace(p, true).empty();
      EXPECT_EQ(valid, respects_constraints(t, p)) << write_trace(p);
      (valid ? accepted : rejected) += 1;
    }
  }
  EXPECT_GT(rejected, 0);
  EXPECT_GT(accepted + rejected, 0);
}

TEST(Relinearize, SingleTaskTraceUnchanged) {
  Trace t = parse_trace("read 0 1\nwrite 0 2\nacquire 0 3\nwrite 0 1\nrelease 0 3\n");
  for (std::uint64_t s = 0; s < 20; ++s) EXPECT_EQ(relinearize(t, s), t);
}

TEST(Relinearize, OutputIsAmongBruteForceLinearizations) {
  Trace t = parse_trace("spawn 0 1\nread 0 5\nread 1 5\njoin 0 1");
  // Brute force: every permutation that validates and keeps per-task order.
  std::set<std::string> all;
  std::vector<int> idx{0, 1, 2, 3};
  do {
    Trace p;
    for (int i : idx) p.events.push_back(t.events[i]);
    p.renumber();
    if (validate_trace(p, true).empty() && respects_constraints(t, p)) all.insert(write_trace(p));
  } while (std::next_permutation(idx.begin(), idx.end()));
  ASSERT_EQ(all.size(), 2u);

  std::set<std::string> seen;
  for (std::uint64_t s = 0; s < 64; ++s) {
    Trace r = relinearize(t, s);
    EXPECT_EQ(r.events.front().kind, EventKind::Spawn);
    EXPECT_EQ(r.events.back().kind, EventKind::Join);
    seen.insert(write_trace(r));
  }
  for (const auto& s : seen) EXPECT_TRUE(all.count(s)) << s;
  EXPECT_EQ(seen, all);
}

TEST(Relinearize, ValidForManySeedsAndPreservesEvents) {
  for (std::uint64_t prog = 1; prog <= 10; ++prog) {
    Trace t = small_random(prog);
    auto key = [](const Trace& x) {
      std::multiset<std::string> m;
      for (const auto& e : x.events) m.insert(format_event(e));
      return m;
    };
    for (std::uint64_t s = 0; s < 100; ++s) {
      Trace r = relinearize(t, s);
      ASSERT_TRUE(validate_trace(r, true).empty()) << "prog " << prog << " seed " << s;
      EXPECT_EQ(key(r), key(t));
      EXPECT_TRUE(respects_constraints(t, r));
    }
  }
}

TEST(Relinearize, DeterministicForFixedSeed) {
  Trace t = small_random(7);
  EXPECT_EQ(relinearize(t, 99), relinearize(t, 99));
}

TEST(Relinearize, RejectsInvalidInput) {
  EXPECT_THROW(relinearize(parse_trace("spawn 0 1\nspawn 0 2\njoin 1 2"), 1), InvalidTrace);
}

TEST(Relinearize, ToleratesInheritedLocks) {
  Trace t = parse_trace("acquire 0 5\nspawn 0 1\nwrite 1 3\nrelease 0 5\nacquire 0 5\nrelease 0 5\njoin 0 1\n");
  for (std::uint64_t s = 0; s < 20; ++s) EXPECT_TRUE(validate_trace(relinearize(t, s), true).empty());
}
