#include <gtest/gtest.h>

#include <random>
#include <set>

#include "fastracer/ivc.hpp"
#include "fastracer/workload.hpp"

using namespace fastracer;

namespace {

GenParams random_params(std::mt19937_64& r, std::uint64_t seed) {
  GenParams g;
  g.seed = seed;
  g.max_depth = 1 + r() % 6;
  g.max_fanout = r() % 5;
  g.min_fanout = r() % (g.max_fanout + 1);
  g.max_tasks = 1 + r() % 40;
  g.n_vars = 1 + r() % 6;
  g.n_locks = r() % 4;
  g.n_accesses = r() % 60;
  g.lock_prob = (r() % 100) / 100.0;
  g.write_prob = (r() % 100) / 100.0;
  g.escape_prob = (r() % 100) / 100.0;
  g.max_events = (r() % 3) ? 0 : 10 + r() % 60;
  return g;
}

}  // namespace

TEST(Generate, RandomParametersProduceStrictlyValidTraces) {
  std::mt19937_64 r(21);
  for (std::uint64_t s = 1; s <= 1000; ++s) {
    GenParams g = random_params(r, s);
    Trace t = generate(g);
    ASSERT_TRUE(validate_trace(t, true).empty()) << "seed " << s << '\n' << write_trace(t);
    auto tree = InheritanceTreeOracle::from_trace(t);
    EXPECT_LE(tree.size(), g.max_tasks);
    EXPECT_LE(tree.max_depth() + 1, g.max_depth);
    if (g.max_events) {
      EXPECT_LE(t.size(), g.max_events);
    }
  }
}

TEST(Generate, SingleTaskProgram) {
  GenParams g;
  g.max_tasks = 1;
  g.n_locks = 0;
  g.n_accesses = 5;
  Trace t = generate(g);
  EXPECT_EQ(t.size(), 5u);
  for (const auto& e : t.events) EXPECT_EQ(e.task, kRootTask);
}

TEST(Generate, DeterministicPerSeed) {
  GenParams g;
  g.seed = 77;
  EXPECT_EQ(generate(g), generate(g));
  GenParams h = g;
  h.seed = 78;
  EXPECT_NE(write_trace(generate(g)), write_trace(generate(h)));
}

TEST(Generate, FixedFanoutChain) {
  GenParams g;
  g.min_fanout = 1;
  g.max_fanout = 1;
  g.max_depth = 50;
  g.max_tasks = 40;
  auto tree = InheritanceTreeOracle::from_trace(generate(g));
  EXPECT_EQ(tree.size(), 40u);
  EXPECT_EQ(tree.max_depth(), 39u);
}

TEST(Generate, RejectsBadParameters) {
  GenParams g;
  g.lock_prob = 1.5;
  EXPECT_THROW(generate(g), std::invalid_argument);
  GenParams h;
  h.min_fanout = 4;
  h.max_fanout = 2;
  EXPECT_THROW(generate(h), std::invalid_argument);
}

TEST(Builtins, ValidateStrictly) {
  for (auto name : builtin_names()) EXPECT_TRUE(validate_trace(builtin(name), true).empty()) << name;
}

TEST(Builtins, UnknownName) { EXPECT_THROW(builtin("nope"), UnknownName); }

TEST(Builtins, FigureShapes) {
  auto tree = InheritanceTreeOracle::from_trace(builtin("fig_var1_var2"));
  EXPECT_EQ(tree.parent(TaskId{4}), TaskId{3});
  EXPECT_EQ(tree.parent(TaskId{5}), TaskId{3});
  EXPECT_EQ(tree.parent(TaskId{2}), kRootTask);
}
