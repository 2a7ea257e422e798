#include <fstream>
#include <iostream>
#include <memory>
#include <sstream>

#include <CLI11.hpp>

#include "symplanner/agents.hpp"
#include "symplanner/blocksworld.hpp"
#include "symplanner/harness.hpp"
#include "symplanner/hash.hpp"
#include "symplanner/oracle.hpp"
#include "symplanner/problem_io.hpp"
#include "symplanner/remote.hpp"
#include "symplanner/search.hpp"
#include "symplanner/simulator.hpp"

namespace sp = symplanner;
namespace bw = symplanner::blocksworld;

namespace {

struct SearchFlags {
  sp::search::SearchConfig cfg;
  bool no_ic = false;
  bool no_cr = false;
  bool no_symbolic = false;
  std::size_t budget = 0;

  void add(CLI::App* cmd) {
    cmd->add_option("--steps", cfg.steps, "Step limit T")->capture_default_str();
    cmd->add_option("--beam", cfg.beam, "Beam width b")->capture_default_str();
    cmd->add_option("--n", cfg.proposals, "Proposals per candidate N")->capture_default_str();
    cmd->add_option("--ic-retries", cfg.ic_retries, "Correction retries R")->capture_default_str();
    cmd->add_option("--cr-k", cfg.cr_opponents, "Opponents per candidate k")->capture_default_str();
    cmd->add_option("--belief-noise", cfg.belief_noise, "Belief corruption rate without symbolic states")
        ->capture_default_str();
    cmd->add_option("--budget", budget, "Cap on policy calls per search (0 = none)");
    cmd->add_flag("--no-ic", no_ic, "Drop invalid proposals instead of correcting them");
    cmd->add_flag("--no-cr", no_cr, "Rank by independent ratings instead of pairwise comparison");
    cmd->add_flag("--no-symbolic", no_symbolic, "Track model-predicted states instead of simulated ones");
  }

  sp::search::SearchConfig resolve() const {
    auto c = cfg;
    c.ic = !no_ic;
    c.cr = !no_cr;
    c.symbolic = !no_symbolic;
    if (budget > 0) c.policy_budget = budget;
    c.validate();
    return c;
  }
};

struct EndpointFlags {
  sp::remote::EndpointConfig cfg = sp::remote::EndpointConfig::from_env();
  long timeout_ms = 60000;
  bool llm_parse = false;

  void add(CLI::App* cmd) {
    cmd->add_option("--base-url", cfg.base_url, "OpenAI-compatible endpoint for remote agents")
        ->capture_default_str();
    cmd->add_option("--model", cfg.model, "Model name for remote agents")->capture_default_str();
    cmd->add_option("--api-key-env", cfg.api_key_env, "Environment variable holding the API key")
        ->capture_default_str();
    cmd->add_option("--temperature", cfg.temperature)->capture_default_str();
    cmd->add_option("--max-tokens", cfg.max_tokens)->capture_default_str();
    cmd->add_option("--timeout-ms", timeout_ms)->capture_default_str();
    cmd->add_option("--retries", cfg.retries, "Transport retries per request")->capture_default_str();
    cmd->add_option("--max-in-flight", cfg.max_in_flight)->capture_default_str();
    cmd->add_flag("--llm-parse", llm_parse, "Ask the model to parse proposals the rule parser rejects");
  }

  sp::agents::AgentOptions resolve(bool need_client) {
    sp::agents::AgentOptions opts;
    opts.remote.llm_parse_fallback = llm_parse;
    if (need_client) {
      cfg.timeout = std::chrono::milliseconds(timeout_ms);
      opts.client = std::make_shared<sp::remote::ChatClient>(cfg);
    }
    return opts;
  }
};

std::vector<int> parse_int_list(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.empty()) continue;
    try {
      out.push_back(std::stoi(item));
    } catch (const std::exception&) {
      throw sp::ConfigError("not an integer list: " + text);
    }
  }
  return out;
}

void print_plan(const sp::Plan& plan) {
  for (const auto& a : plan.actions) std::cout << bw::render_action(a) << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Beam-search planner with simulator-checked proposals, error-driven correction and pairwise ranking"};
  app.require_subcommand(1);

  // validate
  auto* validate_cmd = app.add_subcommand("validate", "Check a plan file (one action per line) against a problem");
  std::string problem_path, plan_path;
  validate_cmd->add_option("--problem", problem_path)->required()->check(CLI::ExistingFile);
  validate_cmd->add_option("--plan", plan_path)->required()->check(CLI::ExistingFile);

  // plan
  auto* plan_cmd = app.add_subcommand("plan", "Run the search on one problem");
  std::string policy = "oracle-noisy:0.2", disc = "oracle", trace_path;
  std::uint64_t seed = 0;
  SearchFlags plan_flags;
  EndpointFlags plan_endpoint;
  plan_cmd->add_option("--problem", problem_path)->required()->check(CLI::ExistingFile);
  plan_cmd->add_option("--policy", policy, "random|greedy|oracle|oracle-noisy:EPS|replay:FILE|remote")
      ->capture_default_str();
  plan_cmd->add_option("--disc", disc, "oracle|goalcount|random|remote")->capture_default_str();
  plan_cmd->add_option("--seed", seed)->capture_default_str();
  plan_cmd->add_option("--trace", trace_path, "Write the event trace as JSON lines");
  plan_flags.add(plan_cmd);
  plan_endpoint.add(plan_cmd);

  // oracle
  auto* oracle_cmd = app.add_subcommand("oracle", "Print an optimal plan");
  oracle_cmd->add_option("--problem", problem_path)->required()->check(CLI::ExistingFile);

  // gen
  auto* gen_cmd = app.add_subcommand("gen", "Generate instances bucketed by optimal plan length");
  std::string blocks_text = "4", buckets_text = "2,4,6,8,10,12", out_path;
  sp::harness::GeneratorConfig gen_cfg;
  gen_cmd->add_option("--blocks", blocks_text, "Block count or comma list, e.g. 4,5,6")->capture_default_str();
  gen_cmd->add_option("--buckets", buckets_text)->capture_default_str();
  gen_cmd->add_option("--per-bucket", gen_cfg.per_bucket)->capture_default_str();
  gen_cmd->add_option("--seed", gen_cfg.seed)->capture_default_str();
  gen_cmd->add_option("--sample-cap", gen_cfg.sample_cap)->capture_default_str();
  gen_cmd->add_option("--out", out_path)->required();

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "Run the search over an instance file");
  std::string instances_path, rating_disc = "random", out_dir, trace_dir, format = "text";
  std::size_t threads = 1;
  bool ablations = false, bootstrap = false;
  SearchFlags bench_flags;
  EndpointFlags bench_endpoint;
  bench_cmd->add_option("--instances", instances_path)->required()->check(CLI::ExistingFile);
  bench_cmd->add_option("--policy", policy)->capture_default_str();
  bench_cmd->add_option("--disc", disc)->capture_default_str();
  bench_cmd->add_option("--seed", seed, "Master seed")->capture_default_str();
  bench_cmd->add_option("--threads", threads)->capture_default_str();
  bench_cmd->add_option("--out", out_path, "Run records (JSON lines); existing ids are skipped");
  bench_cmd->add_flag("--ablations", ablations, "Run full, w/o symbolic, w/o IC and w/o CR");
  bench_cmd->add_option("--rating-disc", rating_disc, "Discriminator rating the w/o CR row")->capture_default_str();
  bench_cmd->add_option("--out-dir", out_dir, "Directory for the ablation run files");
  bench_cmd->add_option("--trace-dir", trace_dir, "Write one trace file per run");
  bench_cmd->add_flag("--bootstrap", bootstrap, "Add 95% bootstrap intervals");
  bench_cmd->add_option("--format", format)->check(CLI::IsMember({"text", "json"}))->capture_default_str();
  bench_flags.add(bench_cmd);
  bench_endpoint.add(bench_cmd);

  // report
  auto* report_cmd = app.add_subcommand("report", "Summarize run records");
  std::string in_path;
  report_cmd->add_option("--in", in_path)->required()->check(CLI::ExistingFile);
  report_cmd->add_option("--format", format)->check(CLI::IsMember({"text", "json"}))->capture_default_str();
  report_cmd->add_flag("--bootstrap", bootstrap, "Add 95% bootstrap intervals");
  report_cmd->add_option("--seed", seed, "Bootstrap seed")->capture_default_str();

  // import
  auto* import_cmd = app.add_subcommand("import", "Convert a PDDL blocksworld problem to problem JSON");
  std::string pddl_path;
  import_cmd->add_option("--pddl", pddl_path)->required()->check(CLI::ExistingFile);
  import_cmd->add_option("--out", out_path);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*validate_cmd) {
      auto problem = sp::load_problem(problem_path);
      auto verdict = sp::validate_text(problem, sp::read_lines(plan_path));
      std::cout << verdict.to_json().dump(2) << '\n';
      return verdict.success() ? 0 : 1;
    }

    if (*plan_cmd) {
      auto problem = sp::load_problem(problem_path);
      auto cfg = plan_flags.resolve();
      cfg.seed = seed;
      auto opts = plan_endpoint.resolve(policy == "remote" || disc == "remote");
      auto pol = sp::agents::make_policy(policy, problem, opts);
      auto dis = sp::agents::make_discriminator(disc, problem, sp::splitmix64(seed), opts);
      auto outcome = sp::search::run(problem, *pol, *dis, cfg, !trace_path.empty());
      if (!trace_path.empty()) {
        std::ofstream out(trace_path, std::ios::trunc);
        outcome.trace.write_jsonl(out);
      }
      if (outcome.best) print_plan(*outcome.best);
      nlohmann::json summary = {{"success", outcome.best.has_value()},
                                {"plan_length", outcome.best ? outcome.best->size() : 0},
                                {"done", outcome.done_count},
                                {"steps_used", outcome.steps_used},
                                {"policy_calls", outcome.policy_calls},
                                {"discriminator_calls", outcome.discriminator_calls}};
      std::cerr << summary.dump() << '\n';
      return outcome.best ? 0 : 1;
    }

    if (*oracle_cmd) {
      auto problem = sp::load_problem(problem_path);
      auto plan = sp::oracle::solve_optimal(problem);
      if (!plan) {
        std::cout << "unreachable\n";
        return 1;
      }
      std::cout << "optimal length: " << plan->size() << '\n';
      print_plan(*plan);
      return 0;
    }

    if (*gen_cmd) {
      gen_cfg.block_counts.clear();
      for (auto n : parse_int_list(blocks_text)) gen_cfg.block_counts.push_back(static_cast<std::size_t>(n));
      gen_cfg.buckets = parse_int_list(buckets_text);
      auto instances = sp::harness::generate_instances(gen_cfg);
      sp::harness::write_instances(out_path, instances);
      std::cout << "wrote " << instances.size() << " instances to " << out_path << '\n';
      return 0;
    }

    if (*bench_cmd) {
      auto instances = sp::harness::read_instances(instances_path);
      sp::harness::SuiteConfig suite;
      suite.policy = policy;
      suite.discriminator = disc;
      suite.search = bench_flags.resolve();
      suite.master_seed = seed;
      suite.threads = threads;
      suite.agents =
          bench_endpoint.resolve(policy == "remote" || disc == "remote" || (ablations && rating_disc == "remote"));
      suite.trace_dir = trace_dir;
      sp::harness::ReportOptions ropts;
      ropts.bootstrap = bootstrap;
      ropts.seed = seed;
      if (ablations) {
        sp::harness::AblationConfig acfg{suite, rating_disc, ropts};
        std::optional<std::filesystem::path> dir;
        if (!out_dir.empty()) dir = out_dir;
        auto result = sp::harness::ablation_matrix(instances, acfg, dir);
        if (format == "json") {
          auto arr = nlohmann::json::array();
          for (const auto& t : result.tables) arr.push_back(t.to_json());
          std::cout << arr.dump(2) << '\n';
        } else {
          std::cout << sp::harness::render_comparison(result.tables);
        }
        return 0;
      }
      std::optional<std::filesystem::path> out;
      if (!out_path.empty()) out = out_path;
      auto fresh = sp::harness::run_suite(instances, suite, out);
      auto records = out ? sp::harness::read_records(*out) : fresh;
      std::cerr << "executed " << fresh.size() << " runs\n";
      auto table = sp::harness::report(records, ropts);
      std::cout << (format == "json" ? table.to_json().dump(2) + "\n" : table.to_text());
      return 0;
    }

    if (*report_cmd) {
      sp::harness::ReportOptions ropts;
      ropts.bootstrap = bootstrap;
      ropts.seed = seed;
      auto table = sp::harness::report(sp::harness::read_records(in_path), ropts);
      std::cout << (format == "json" ? table.to_json().dump(2) + "\n" : table.to_text());
      return 0;
    }

    if (*import_cmd) {
      auto problem = sp::import_pddl_problem(sp::read_file(pddl_path));
      auto text = sp::problem_to_json(problem).dump(2) + "\n";
      if (out_path.empty()) {
        std::cout << text;
      } else {
        std::ofstream(out_path, std::ios::trunc) << text;
      }
      return 0;
    }
  } catch (const sp::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 3;
  }
  return 0;
}
