#include <doctest.h>

#include <random>

#include "support/fixtures.hpp"
#include "support/reference.hpp"
#include "symplanner/oracle.hpp"
#include "symplanner/simulator.hpp"

using namespace symplanner;
using fixtures::goal;
namespace bw = symplanner::blocksworld;

TEST_CASE("known optimal lengths") {
  auto s = fixtures::sussman();
  auto plan = oracle::solve_optimal(s);
  REQUIRE(plan);
  CHECK(plan->size() == 6);
  CHECK(validate(s, *plan).success());
  CHECK(oracle::distance(s.init(), s.goal(), s) == 6);
  CHECK(oracle::solve_optimal(fixtures::example2())->size() == 2);
  CHECK(oracle::solve_optimal(fixtures::example1())->size() == 4);

  auto at_goal = bw::make_problem(bw::Vocabulary({"a", "b"}), bw::table_state({"a", "b"}), goal({"ontable(a)"}));
  CHECK(oracle::solve_optimal(at_goal)->empty());
}

TEST_CASE("unreachable goals") {
  auto p = bw::make_problem(bw::Vocabulary({"a", "b"}), bw::table_state({"a", "b"}), goal({"on(a,b)", "on(b,a)"}));
  CHECK_FALSE(oracle::solve_optimal(p).has_value());
  CHECK_FALSE(oracle::distance(p.init(), p.goal(), p).has_value());
  oracle::DistanceIndex idx(p);
  CHECK_FALSE(idx.distance(p.init()).has_value());
  CHECK_FALSE(idx.next_optimal_action(p.init()).has_value());
}

TEST_CASE("reachable state counts") {
  std::size_t expected[] = {5, 22, 125, 866};
  for (std::size_t n = 2; n <= 5; ++n) {
    auto vocab = bw::Vocabulary::colors(n);
    auto p = bw::make_problem(vocab, bw::table_state(vocab.blocks()), Goal{});
    CHECK(oracle::enumerate_reachable(p) == expected[n - 2]);
    if (n <= 4) CHECK(ref::reachable(vocab.blocks()).size() == expected[n - 2]);
    oracle::DistanceIndex idx(p);
    CHECK(idx.size() == expected[n - 2]);
  }
}

TEST_CASE("distance index matches the reference and is Bellman consistent") {
  std::vector<std::string> blocks{"a", "b", "c", "d"};
  auto states = ref::reachable(blocks);
  std::mt19937_64 rng(17);
  auto acts = ref::actions(blocks);
  for (int trial = 0; trial < 12; ++trial) {
    auto gs = states[rng() % states.size()];
    ref::Set g;
    for (const auto& a : gs) {
      if (a != ref::kHandEmpty && (rng() % 2)) g.insert(a);
    }
    auto init = states[rng() % states.size()];
    auto p = bw::make_problem(bw::Vocabulary(blocks), ref::to_state(init), Goal{ref::to_state(g).atoms});
    oracle::DistanceIndex idx(p);
    auto dist = ref::distances_to(g, blocks);
    for (const auto& rs : states) {
      auto s = ref::to_state(rs);
      auto d = idx.distance(s);
      auto it = dist.find(rs);
      REQUIRE(d.has_value() == (it != dist.end()));
      if (!d) continue;
      CHECK(*d == it->second);
      if (*d == 0) {
        CHECK_FALSE(idx.next_optimal_action(s).has_value());
        continue;
      }
      int best = 1 << 20;
      for (const auto& ra : acts) {
        if (ref::applicable(rs, ra) && dist.count(ref::apply(rs, ra))) {
          best = std::min(best, 1 + dist[ref::apply(rs, ra)]);
        }
      }
      CHECK(*d == best);
      auto next = idx.next_optimal_action(s);
      REQUIRE(next);
      CHECK(idx.distance(apply(s, *next)) == *d - 1);
    }
    auto plan = oracle::solve_optimal(p);
    REQUIRE(plan);
    CHECK(static_cast<int>(plan->size()) == dist.at(init));
    CHECK(ref::iddfs(init, g, blocks, 12) == dist.at(init));
  }
}

TEST_CASE("distance index handles states off the reachable set") {
  auto p = fixtures::sussman();
  oracle::DistanceIndex idx(p);
  auto weird = fixtures::state({"handempty", "ontable(a)", "ontable(b)", "ontable(c)"});
  CHECK_FALSE(idx.distance(weird).has_value());
  CHECK(idx.distance(p.init()) == 6);
}

TEST_CASE("solver is deterministic and size-capped") {
  auto p = fixtures::sussman();
  auto a = oracle::solve_optimal(p);
  auto b = oracle::solve_optimal(p);
  CHECK(*a == *b);
  auto vocab = bw::Vocabulary::colors(7);
  auto big = bw::make_problem(vocab, bw::table_state(vocab.blocks()), Goal{});
  CHECK_THROWS_AS(oracle::solve_optimal(big), ConfigError);
}
