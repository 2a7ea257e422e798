#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

#include "support/examples.hpp"
#include "support/fixtures.hpp"
#include "support/reference.hpp"
#include "symplanner/agents.hpp"
#include "symplanner/oracle.hpp"

using namespace symplanner;
using namespace symplanner::agents;
namespace bw = symplanner::blocksworld;

namespace {

/// Candidate reached by stepping canonical actions from the problem's init.
CandidateTrajectory walk(const Problem& p, const std::vector<std::string>& acts) {
  auto c = CandidateTrajectory::root(p);
  for (const auto& text : acts) {
    auto r = step_text(p, c.state, text);
    REQUIRE(r.ok());
    c.state = r.state();
    c.true_state = r.state();
    c.plan.actions.push_back(std::get<GroundAction>(resolve_action(p, text)));
    c.action_texts.push_back(text);
    std::string s = bw::render_state(c.state);
    s[0] = static_cast<char>(std::toupper(static_cast<unsigned char>(s[0])));
    c.state_texts.push_back(s);
  }
  return c;
}

Failure fail(const Problem& p, const State& s, const std::string& text) {
  auto r = step_text(p, s, text);
  REQUIRE_FALSE(r.ok());
  return {text, r.error()};
}

/// Lines of `text` between the first line starting with `from` and the next
/// line equal to `until`.
std::string block(std::string_view text, std::string_view from, std::string_view until) {
  auto start = text.find(from);
  REQUIRE(start != std::string_view::npos);
  auto end = text.find(until, start);
  REQUIRE(end != std::string_view::npos);
  return std::string(text.substr(start, end - start));
}

}  // namespace

TEST_CASE("random and greedy policies propose applicable actions") {
  auto p = fixtures::sussman();
  auto c = CandidateTrajectory::root(p);
  ProposalContext ctx{p, c, {}};
  Rng rng(1);
  RandomValidPolicy random;
  GoalCountGreedyPolicy greedy;
  for (Policy* pol : std::vector<Policy*>{&random, &greedy}) {
    auto props = pol->propose(ctx, 5, rng);
    CHECK(props.size() == 5);
    for (const auto& pr : props) CHECK(step_text(p, c.state, pr.action).ok());
  }
  auto e2 = fixtures::example2();
  auto root2 = CandidateTrajectory::root(e2);
  auto holding = walk(e2, {"Pick up the yellow block"});
  ProposalContext gctx{e2, holding, {}};
  for (const auto& pr : greedy.propose(gctx, 4, rng)) CHECK(pr.action == "Stack the yellow block on top of the orange block");
  CHECK(root2.plan.empty());
}

TEST_CASE("oracle policy follows optimal actions and the noisy variant samples the library") {
  auto p = fixtures::sussman();
  OracleNoisyPolicy exact(p, 0.0);
  CHECK(exact.name() == "oracle-noisy:0");
  oracle::DistanceIndex idx(p);
  auto c = CandidateTrajectory::root(p);
  Rng rng(2);
  for (int step = 0; step < 6; ++step) {
    ProposalContext ctx{p, c, {}};
    auto props = exact.propose(ctx, 3, rng);
    REQUIRE(props.size() == 3);
    CHECK(props[0].action == props[2].action);
    c = walk(p, [&] {
      auto acts = c.action_texts;
      acts.push_back(props[0].action);
      return acts;
    }());
    CHECK(idx.distance(c.state) == 5 - step);
  }
  CHECK(entails(c.state, p.goal()));

  OracleNoisyPolicy noisy(p, 1.0);
  auto root = CandidateTrajectory::root(p);
  ProposalContext ctx{p, root, {}};
  std::set<std::string> seen;
  bool saw_invalid = false;
  for (const auto& pr : noisy.propose(ctx, 400, rng)) {
    seen.insert(pr.action);
    saw_invalid = saw_invalid || !step_text(p, root.state, pr.action).ok();
  }
  CHECK(seen.size() == p.actions().size());
  CHECK(saw_invalid);
  CHECK_THROWS_AS(OracleNoisyPolicy(p, 1.5), ConfigError);
}

TEST_CASE("repair never repeats a failed action") {
  auto p = fixtures::example2();
  Rng rng(4);
  RandomValidPolicy random;
  GoalCountGreedyPolicy greedy;
  OracleNoisyPolicy exact(p, 0.0), noisy(p, 0.6);
  for (Policy* pol : std::vector<Policy*>{&random, &greedy, &exact, &noisy}) {
    for (const auto& rs : ref::reachable(p.objects())) {
      auto c = CandidateTrajectory::root(p);
      c.state = ref::to_state(rs);
      ProposalContext ctx{p, c, {}};
      for (int round = 0; round < 3; ++round) {
        auto pr = pol->repair(ctx, rng);
        for (const auto& f : ctx.failure_history) CHECK(pr.action != f.action);
        auto r = step_text(p, c.state, pr.action);
        ctx.failure_history.push_back({pr.action, r.ok() ? TypedError{} : r.error()});
      }
    }
  }
}

TEST_CASE("replay policy cycles through its script") {
  auto p = fixtures::example1();
  auto c = CandidateTrajectory::root(p);
  ProposalContext ctx{p, c, {}};
  Rng rng(0);
  ReplayPolicy replay({"a", "b"});
  auto props = replay.propose(ctx, 3, rng);
  CHECK(props[0].action == "a");
  CHECK(props[1].action == "b");
  CHECK(props[2].action == "a");
  CHECK(replay.repair(ctx, rng).action == "b");
  CHECK_THROWS_AS(ReplayPolicy({}), ConfigError);
}

TEST_CASE("IC worked examples: outputs are legal, and the exact oracle repairs optimally") {
  auto ex = examples::iterative_correction();
  REQUIRE(ex.size() == 4);
  bw::Vocabulary vocab({"blue", "orange", "red", "yellow"});
  for (std::size_t i = 0; i < ex.size(); ++i) {
    CAPTURE(i);
    auto p = bw::make_problem(vocab, bw::parse_state(ex[i].init, vocab), bw::parse_goal(ex[i].goal, vocab));
    std::vector<std::string> acts;
    for (std::size_t k = 0; k + 1 < ex[i].steps.size(); ++k) acts.push_back(ex[i].steps[k].action);
    auto c = walk(p, acts);
    ProposalContext ctx{p, c, {}};
    for (const auto& inv : ex[i].invalid) ctx.failure_history.push_back({inv, TypedError{}});
    REQUIRE(ex[i].outputs.size() == 1);
    const auto& expected = ex[i].outputs[0];
    CHECK(step_text(p, c.state, expected).ok());
    for (const auto& inv : ex[i].invalid) CHECK(inv != expected);

    OracleNoisyPolicy exact(p, 0.0);
    oracle::DistanceIndex idx(p);
    Rng rng(9);
    auto pr = exact.repair(ctx, rng);
    auto r = step_text(p, c.state, pr.action);
    REQUIRE(r.ok());
    CHECK(idx.distance(r.state()) == *idx.distance(c.state) - 1);
    if (i == 0) CHECK(pr.action == expected);
  }
}

TEST_CASE("discriminators: oracle distance") {
  auto p = fixtures::example1();
  OracleDistanceDiscriminator d(p);
  auto a = walk(p, {"Unstack the orange block from the blue block"});
  auto b = walk(p, {"Pick up the red block"});
  CHECK(d.distance(a.state) == 3);
  CHECK(d.distance(b.state) == 5);
  CHECK(d.prefer(a, b, p) == 1.0);
  CHECK(d.prefer(b, a, p) == 0.0);
  CHECK(d.prefer(a, a, p) == 0.5);
  CHECK(d.rate(a, p) == 7);
  auto goal = walk(p, {"Unstack the orange block from the blue block", "Put down the orange block",
                       "Pick up the blue block", "Stack the blue block on top of the orange block"});
  CHECK(d.rate(goal, p) == 10);
}

TEST_CASE("discriminators: goal count and random") {
  auto p = fixtures::example2();
  GoalCountDiscriminator gc;
  auto root = CandidateTrajectory::root(p);
  auto done = walk(p, {"Pick up the yellow block", "Stack the yellow block on top of the orange block"});
  CHECK(gc.prefer(done, root, p) == 1.0);
  CHECK(gc.rate(root, p) == 1 + static_cast<int>(std::lround(4.5)));
  CHECK(gc.rate(done, p) == 10);

  RandomDiscriminator r1(1), r2(1);
  std::vector<CandidateTrajectory> cands;
  for (const auto& a : applicable_actions(p.init(), p)) cands.push_back(walk(p, {bw::render_action(a)}));
  cands.push_back(root);
  for (const auto& a : cands) {
    int rate = r1.rate(a, p);
    CHECK(rate >= 1);
    CHECK(rate <= 10);
    CHECK(rate == r2.rate(a, p));
    for (const auto& b : cands) {
      double l = r1.prefer(a, b, p);
      CHECK(l + r1.prefer(b, a, p) == 1.0);
      CHECK(l == r2.prefer(a, b, p));
      if (&a == &b) CHECK(l == 0.5);
    }
  }
}

TEST_CASE("antisymmetry of every built-in discriminator on random pairs") {
  auto p = fixtures::sussman();
  OracleDistanceDiscriminator od(p);
  GoalCountDiscriminator gc;
  RandomDiscriminator rd(42);
  Rng rng(8);
  std::vector<CandidateTrajectory> cands;
  for (int i = 0; i < 20; ++i) {
    auto c = CandidateTrajectory::root(p);
    std::vector<std::string> acts;
    for (int k = 0; k < 4; ++k) {
      auto app = applicable_actions(c.state, p);
      acts.push_back(bw::render_action(app[rng() % app.size()]));
      c = walk(p, acts);
    }
    cands.push_back(c);
  }
  for (Discriminator* d : std::vector<Discriminator*>{&od, &gc, &rd}) {
    for (const auto& a : cands) {
      for (const auto& b : cands) {
        double l = d->prefer(a, b, p);
        CHECK(l >= 0.0);
        CHECK(l <= 1.0);
        CHECK(l + d->prefer(b, a, p) == doctest::Approx(1.0));
      }
    }
  }
}

TEST_CASE("IC prompt reproduces the worked example layout") {
  auto p = fixtures::example1();
  auto c = walk(p, {"Unstack the orange block from the blue block"});
  ProposalContext ctx{p, c, {fail(p, c.state, "Pick up the red block")}};
  auto text = prompt::iterative_correction(ctx);
  const auto& t = prompts::get(prompts::Kind::IterativeCorrection);
  CHECK(text.rfind(std::string(t.instructions()), 0) == 0);
  auto query = text.substr(t.instructions().size());
  auto shown = block(t.instructions(), "\"Action 1\": \"Unstack", "\n\n### Example Output 1");
  CHECK(query.find(shown + "\n") != std::string::npos);
  CHECK(query.find("\"Errors\": {\"Action 2\": \"HandNotEmpty: the hand is not empty\"}\n") != std::string::npos);
  CHECK(query.find("The blue block is on top of the orange block") != std::string::npos);

  ProposalContext fresh{p, c, {}};
  auto empty = prompt::iterative_correction(fresh);
  CHECK(empty.find("\"Previous invalid actions\": {}\n\n") != std::string::npos);
  CHECK(empty.find("\"Errors\"") == std::string::npos);
}

TEST_CASE("CR prompt reproduces the worked example option and future blocks") {
  auto p = fixtures::example1();
  auto a = walk(p, {"Unstack the orange block from the blue block"});
  auto b = walk(p, {"Pick up the red block"});
  b.action_texts[0] = "Pickup the red block";
  b.state_texts[0] =
      "The orange block is clear, the hand is holding the red block, the orange block is on the blue block, the blue "
      "block is on the table";
  auto text = prompt::contrastive_ranking(a, b, p);
  const auto& t = prompts::get(prompts::Kind::ContrastiveRanking);
  auto shown = block(t.instructions(), "\"Search steps\": {", "\n\n### Example Output 1");
  auto query = text.substr(t.instructions().size());
  CHECK(query.find(shown) != std::string::npos);

  auto shared = walk(fixtures::example1(), {"Unstack the orange block from the blue block", "Put down the orange block"});
  auto other = walk(fixtures::example1(), {"Unstack the orange block from the blue block",
                                            "Stack the orange block on top of the red block"});
  auto both = prompt::contrastive_ranking(shared, other, p).substr(t.instructions().size());
  CHECK(both.find("\"Action 1\": \"Unstack the orange block from the blue block\",\n\"State 1\": ") != std::string::npos);
  CHECK(both.find("    \"Option 1\": {\"Action 2\": \"Put down the orange block\"},\n") != std::string::npos);
  CHECK(both.find("    \"Option 2\": {\"Action 2\": \"Stack the orange block on top of the red block\"}\n") !=
        std::string::npos);
}

TEST_CASE("rating and generation prompts") {
  auto p = fixtures::example1();
  auto c = walk(p, {"Unstack the orange block from the blue block"});
  auto rating = prompt::plan_rating(c, p);
  CHECK(rating.find("\"Action 1\": \"Unstack the orange block from the blue block\"\n\"State 1\": \"The blue block is "
                    "clear, the red block is clear, the hand is holding the orange block, the blue block is on the "
                    "table, the red block is on the table\"\n") != std::string::npos);
  ProposalContext ctx{p, c, {}};
  auto gen = prompt::generation(ctx);
  CHECK(gen.find("{{") == std::string::npos);
  CHECK(prompt::action_parsing("Pick up 'x'").find("Pick up 'x'") != std::string::npos);
  auto quoted = c;
  quoted.action_texts[0] = "say \"hi\"";
  CHECK(prompt::trajectory_lines(quoted, 0, ",").rfind("\"Action 1\": \"say 'hi'\",\n", 0) == 0);
}

TEST_CASE("reply parsers") {
  auto pr = parse_proposal_reply("\"Action 2\": \"Put down the orange block\"\n\"State 2\": \"x\"", 2);
  CHECK(pr.action == "Put down the orange block");
  CHECK(pr.predicted_state == std::optional<std::string>("x"));
  CHECK(parse_proposal_reply("\"Action 1\": \"a\"\n\"Action 3\": \"c\"", 3).action == "c");
  CHECK(parse_proposal_reply("\"Action 1\": \"a\"", 5).action == "a");
  CHECK_FALSE(parse_proposal_reply("\"Action 1\": \"a\"", 5).predicted_state);
  CHECK(parse_proposal_reply("\n  Pick up the red block  \n", 1).action == "Pick up the red block");
  CHECK(parse_proposal_reply("", 1).action == "");

  CHECK(parse_preference_reply("\"Comparison\": \"Option 1 is ok. Option 2 not.\",\n\"Conclusion\": \"Option 2\"") == 2);
  CHECK(parse_preference_reply("I think option 1 then Option 3") == 3);
  CHECK_FALSE(parse_preference_reply("no idea"));
  CHECK_FALSE(parse_preference_reply("Option 1. Conclusion: unsure"));

  CHECK(parse_rating_reply("### Rating\n8") == 8);
  CHECK(parse_rating_reply("### Rating:\n3") == 3);
  CHECK(parse_rating_reply("Rating: 42") == 10);
  CHECK(parse_rating_reply("Rating: 0") == 1);
  CHECK_FALSE(parse_rating_reply("Rating: high"));
}

TEST_CASE("rating goldens from the embedded plan-rating examples") {
  const auto& t = prompts::get(prompts::Kind::PlanRating);
  auto ins = std::string(t.instructions());
  auto first = ins.find("### Rating");
  REQUIRE(first != std::string::npos);
  auto second = ins.find("### Rating", first + 1);
  REQUIRE(second != std::string::npos);
  CHECK(parse_rating_reply(ins.substr(first, 16)) == 8);
  CHECK(parse_rating_reply(ins.substr(second, 16)) == 3);
}

TEST_CASE("factories") {
  auto p = fixtures::sussman();
  CHECK(make_policy("random", p)->name() == "random");
  CHECK(make_policy("greedy", p)->name() == "greedy");
  CHECK(make_policy("oracle", p)->name() == "oracle-noisy:0");
  CHECK(make_policy("oracle-noisy:0.25", p)->name() == "oracle-noisy:0.25");
  CHECK(make_discriminator("oracle", p, 1)->name() == "oracle");
  CHECK(make_discriminator("goalcount", p, 1)->name() == "goalcount");
  CHECK(make_discriminator("random", p, 1)->name() == "random");
  CHECK_THROWS_AS(make_policy("nope", p), ConfigError);
  CHECK_THROWS_AS(make_policy("oracle-noisy:abc", p), ConfigError);
  CHECK_THROWS_AS(make_policy("remote", p), ConfigError);
  CHECK_THROWS_AS(make_discriminator("remote", p, 1), ConfigError);
  CHECK_THROWS_AS(make_discriminator("nope", p, 1), ConfigError);
  CHECK_THROWS_AS(check_policy_spec("replay:/does/not/exist"), ConfigError);
  CHECK_NOTHROW(check_discriminator_spec("goalcount"));

  auto path = std::filesystem::temp_directory_path() / "symplanner_replay.txt";
  std::ofstream(path) << "pick up the b block\n";
  CHECK_NOTHROW(check_policy_spec("replay:" + path.string()));
  auto replay = make_policy("replay:" + path.string(), p);
  auto c = CandidateTrajectory::root(p);
  Rng rng(0);
  CHECK(replay->propose({p, c, {}}, 1, rng)[0].action == "pick up the b block");
  std::filesystem::remove(path);
}
