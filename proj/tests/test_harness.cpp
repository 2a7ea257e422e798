#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "support/fixtures.hpp"
#include "support/reference.hpp"
#include "symplanner/harness.hpp"
#include "symplanner/hash.hpp"
#include "symplanner/oracle.hpp"

using namespace symplanner;
using namespace symplanner::harness;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("symplanner_harness_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<InstanceSpec> small_suite(std::size_t per_bucket = 3) {
  GeneratorConfig g;
  g.block_counts = {3, 4};
  g.buckets = {2, 4, 6};
  g.per_bucket = per_bucket;
  g.seed = 5;
  return generate_instances(g);
}

RunRecord rec(int bucket, bool ok) {
  RunRecord r;
  r.id = "x" + std::to_string(bucket) + (ok ? "s" : "f");
  r.bucket = bucket;
  r.success = ok;
  return r;
}

}  // namespace

TEST_CASE("hash helpers") {
  CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
  CHECK(instance_seed(1, "L02-000") == derive_seed(1, "L02-000"));
  CHECK(instance_seed(1, "L02-000") != instance_seed(2, "L02-000"));
}

TEST_CASE("generated instances have the advertised optimal length") {
  auto inst = small_suite();
  REQUIRE(inst.size() == 9);
  std::map<int, std::size_t> per;
  std::set<std::string> ids, pairs;
  for (const auto& i : inst) {
    per[i.bucket]++;
    ids.insert(i.id);
    pairs.insert(i.problem.init().key() + "|" + i.problem.goal().atoms.str());
    CHECK(i.optimal_length == i.bucket);
    CHECK((i.n_blocks == 3 || i.n_blocks == 4));
    CHECK(i.problem.objects().size() == i.n_blocks);
    CHECK_FALSE(i.problem.goal().atoms.empty());
    auto init = ref::to_set(i.problem.init().atoms);
    auto goal = ref::to_set(i.problem.goal().atoms);
    CHECK(ref::iddfs(init, goal, i.problem.objects(), 8) == i.optimal_length);
  }
  CHECK(per == std::map<int, std::size_t>{{2, 3}, {4, 3}, {6, 3}});
  CHECK(ids.size() == inst.size());
  CHECK(pairs.size() == inst.size());
  CHECK(verify_instances(inst).empty());
  for (std::size_t k = 1; k < inst.size(); ++k) CHECK(inst[k - 1].bucket <= inst[k].bucket);
}

TEST_CASE("generation is a function of its config") {
  auto a = small_suite();
  auto b = small_suite();
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].to_json() == b[i].to_json());
}

TEST_CASE("impossible buckets are reported") {
  GeneratorConfig g;
  g.block_counts = {2};
  g.buckets = {12};
  g.per_bucket = 1;
  g.sample_cap = 500;
  CHECK_THROWS_AS(generate_instances(g), GenerationExhausted);
  g.block_counts = {9};
  CHECK_THROWS_AS(generate_instances(g), ConfigError);
}

TEST_CASE("instance files round trip") {
  auto dir = scratch("inst");
  auto inst = small_suite(2);
  write_instances(dir / "i.jsonl", inst);
  auto back = read_instances(dir / "i.jsonl");
  REQUIRE(back.size() == inst.size());
  for (std::size_t i = 0; i < inst.size(); ++i) {
    CHECK(back[i].to_json() == inst[i].to_json());
    CHECK(back[i].problem.init() == inst[i].problem.init());
  }
  fs::remove_all(dir);
}

TEST_CASE("run_instance records success and failure without throwing") {
  auto inst = small_suite(1);
  SuiteConfig cfg;
  cfg.master_seed = 3;
  for (const auto& i : inst) {
    auto r = run_instance(i, cfg);
    CHECK(r.success);
    CHECK(r.verdict == "ValidAndGoal");
    CHECK(r.plan_length == static_cast<std::size_t>(i.optimal_length));
    CHECK(r.plan.size() == r.plan_length);
    CHECK(r.policy == "oracle");
    CHECK_FALSE(r.error);
    CHECK(RunRecord::from_json(r.to_json()).to_json() == r.to_json());
  }
  cfg.search.steps = 1;
  auto r = run_instance(inst.back(), cfg);
  CHECK_FALSE(r.success);
  CHECK(r.verdict == "NoPlan");

  cfg.search = {};
  cfg.policy = "remote";
  auto broken = run_instance(inst.front(), cfg);
  CHECK_FALSE(broken.success);
  CHECK(broken.verdict == "Error");
  CHECK(broken.error);
}

TEST_CASE("suite output, resume and determinism") {
  auto dir = scratch("suite");
  auto inst = small_suite(2);
  SuiteConfig cfg;
  cfg.policy = "oracle-noisy:0.5";
  cfg.discriminator = "goalcount";
  cfg.master_seed = 11;

  auto first = run_suite({inst.begin(), inst.begin() + 3}, cfg, dir / "runs.jsonl");
  CHECK(first.size() == 3);
  auto rest = run_suite(inst, cfg, dir / "runs.jsonl");
  CHECK(rest.size() == inst.size() - 3);
  CHECK(run_suite(inst, cfg, dir / "runs.jsonl").empty());
  auto all = read_records(dir / "runs.jsonl");
  REQUIRE(all.size() == inst.size());
  for (std::size_t i = 0; i < inst.size(); ++i) CHECK(all[i].id == inst[i].id);

  cfg.threads = 3;
  auto parallel = run_suite(inst, cfg, dir / "threaded.jsonl");
  cfg.threads = 1;
  auto serial = run_suite(inst, cfg);
  REQUIRE(parallel.size() == serial.size());
  for (std::size_t i = 0; i < serial.size(); ++i) {
    CHECK(deterministic_line(parallel[i]) == deterministic_line(serial[i]));
    CHECK(deterministic_line(all[i]) == deterministic_line(serial[i]));
  }
  CHECK(deterministic_line(serial[0]).find("wall_time_ms") == std::string::npos);
  fs::remove_all(dir);
}

TEST_CASE("traces are written per run") {
  auto dir = scratch("trace");
  auto inst = small_suite(1);
  SuiteConfig cfg;
  cfg.trace_dir = dir / "traces";
  auto recs = run_suite(inst, cfg);
  for (const auto& r : recs) {
    REQUIRE(r.trace);
    std::ifstream in(*r.trace);
    std::string line;
    std::size_t lines = 0;
    std::string last;
    while (std::getline(in, line)) {
      ++lines;
      last = line;
    }
    CHECK(lines > 2);
    CHECK(nlohmann::json::parse(last)["type"] == "outcome");
  }
  fs::remove_all(dir);
}

TEST_CASE("report arithmetic") {
  std::vector<RunRecord> recs;
  for (int i = 0; i < 4; ++i) recs.push_back(rec(2, true));
  for (int i = 0; i < 4; ++i) recs.push_back(rec(4, i % 2 == 0));
  for (int i = 0; i < 4; ++i) recs.push_back(rec(6, false));
  auto t = report(recs);
  REQUIRE(t.buckets.size() == 3);
  CHECK(t.buckets[0].rate == doctest::Approx(100.0));
  CHECK(t.buckets[1].rate == doctest::Approx(50.0));
  CHECK(t.buckets[2].rate == doctest::Approx(0.0));
  CHECK(t.total == doctest::Approx(50.0));
  CHECK(t.count == 12);
  CHECK(t.successes == 6);
  CHECK_FALSE(t.total_ci);
  CHECK(t.to_json()["total"] == 50.0);
  CHECK(t.to_text().find("50.0") != std::string::npos);
  CHECK_THROWS_AS(report({}), ConfigError);

  recs.push_back(rec(8, true));
  CHECK(report(recs).total == doctest::Approx(100.0 * 7 / 13));
}

TEST_CASE("bootstrap intervals bracket the point estimate and are seeded") {
  std::vector<RunRecord> recs;
  for (int i = 0; i < 40; ++i) recs.push_back(rec(2 + 2 * (i % 2), i % 3 != 0));
  ReportOptions o;
  o.bootstrap = true;
  o.seed = 4;
  auto a = report(recs, o);
  auto b = report(recs, o);
  REQUIRE(a.total_ci);
  CHECK(a.total_ci->lo <= a.total);
  CHECK(a.total_ci->hi >= a.total);
  CHECK(a.total_ci->lo < a.total_ci->hi);
  CHECK(a.to_json() == b.to_json());
  for (const auto& row : a.buckets) {
    REQUIRE(row.ci);
    CHECK(row.ci->lo <= row.rate);
    CHECK(row.ci->hi >= row.rate);
  }
  std::vector<RunRecord> all_ok(10, rec(2, true));
  auto c = report(all_ok, o);
  CHECK(c.total_ci->lo == doctest::Approx(100.0));
}

TEST_CASE("comparison table lists every bucket") {
  auto a = report({rec(2, true), rec(4, false)});
  auto b = report({rec(4, true), rec(6, true)});
  b.label = "Other";
  auto text = render_comparison({a, b});
  CHECK(text.find("Other") != std::string::npos);
  CHECK(text.find("6") != std::string::npos);
}

TEST_CASE("ablation matrix shape") {
  auto dir = scratch("ablate");
  auto inst = small_suite(2);
  AblationConfig cfg;
  cfg.base.policy = "oracle-noisy:0.3";
  cfg.base.discriminator = "goalcount";
  cfg.base.master_seed = 2;
  auto res = ablation_matrix(inst, cfg, dir);
  REQUIRE(res.tables.size() == 4);
  REQUIRE(res.records.size() == 4);
  for (const auto& r : res.records) CHECK(r.size() == inst.size());
  CHECK(res.tables[0].label == "Full");
  CHECK(res.records[1][0].config["symbolic"] == false);
  CHECK(res.records[2][0].config["ic"] == false);
  CHECK(res.records[3][0].config["cr"] == false);
  CHECK(res.records[3][0].discriminator == "random");
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(dir)) files += e.path().extension() == ".jsonl";
  CHECK(files == 4);
  fs::remove_all(dir);
}

TEST_CASE("edge cases of generation and reporting") {
  GeneratorConfig g;
  g.block_counts = {4};
  g.buckets = {2, 4};
  g.per_bucket = 0;
  CHECK(generate_instances(g).empty());

  g.block_counts = {3};
  g.buckets = {12};
  g.per_bucket = 1;
  CHECK_THROWS_AS(generate_instances(g), GenerationExhausted);

  std::vector<RunRecord> failures(8, rec(4, false));
  ReportOptions o;
  o.bootstrap = true;
  auto t = report(failures, o);
  REQUIRE(t.buckets.size() == 1);
  REQUIRE(t.buckets[0].ci);
  CHECK(t.buckets[0].ci->lo == 0.0);
  CHECK(t.buckets[0].ci->hi == 0.0);
}

TEST_CASE("a policy that never proposes a legal action solves nothing") {
  auto dir = scratch("replay");
  {
    std::ofstream script(dir / "script.txt");
    script << "Pick up the green block\nStack the red block on top of the red block\n";
  }
  SuiteConfig cfg;
  cfg.policy = "replay:" + (dir / "script.txt").string();
  auto recs = run_suite(small_suite(1), cfg);
  REQUIRE(recs.size() == 3);
  for (const auto& r : recs) {
    CHECK_FALSE(r.success);
    CHECK(r.verdict == "NoPlan");
  }
  fs::remove_all(dir);
}

TEST_CASE("without corrections an always-valid policy matches the full planner") {
  auto inst = small_suite(2);
  AblationConfig cfg;
  cfg.base.policy = "oracle";
  cfg.base.master_seed = 9;
  auto res = ablation_matrix(inst, cfg);
  CHECK(res.tables[2].total == res.tables[0].total);
  for (std::size_t i = 0; i < inst.size(); ++i) {
    CHECK(res.records[2][i].success == res.records[0][i].success);
    CHECK(res.records[2][i].plan == res.records[0][i].plan);
  }
}
