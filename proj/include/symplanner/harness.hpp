#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "symplanner/agents.hpp"
#include "symplanner/core.hpp"
#include "symplanner/search.hpp"

namespace symplanner::harness {

struct InstanceSpec {
  std::string id;
  std::size_t n_blocks = 0;
  Problem problem;
  int optimal_length = 0;
  int bucket = 0;
  std::uint64_t seed = 0;

  nlohmann::json to_json() const;
  static InstanceSpec from_json(const nlohmann::json& j);
};

struct GeneratorConfig {
  /// Block counts to sample from (uniformly per draw); each in 2..6.
  std::vector<std::size_t> block_counts{4};
  /// Optimal plan lengths to collect; each in 1..16.
  std::vector<int> buckets{2, 4, 6, 8, 10, 12};
  std::size_t per_bucket = 20;
  std::uint64_t seed = 1;
  /// Draws allowed before giving up on an unfilled bucket.
  std::size_t sample_cap = 200000;
};

/// Raised when a bucket cannot be filled within the sample cap.
class GenerationExhausted : public std::runtime_error {
 public:
  GenerationExhausted(int bucket, std::size_t found, std::size_t wanted);
  int bucket() const { return bucket_; }

 private:
  int bucket_;
};

/// Rejection sampling: init is a uniformly drawn configuration, the goal a
/// random non-empty subset of the on/ontable atoms of a second one, kept
/// when its oracle optimum matches an unfilled bucket. Output is ordered by
/// bucket, then draw order, and depends only on the config.
std::vector<InstanceSpec> generate_instances(const GeneratorConfig& cfg);

/// Re-solves every instance; returns the ids whose optimum changed.
std::vector<std::string> verify_instances(const std::vector<InstanceSpec>& instances);

void write_instances(const std::filesystem::path& path, const std::vector<InstanceSpec>& instances);
std::vector<InstanceSpec> read_instances(const std::filesystem::path& path);

struct RunRecord {
  std::string id;
  int bucket = 0;
  std::size_t n_blocks = 0;
  int optimal_length = 0;
  std::string policy;
  std::string discriminator;
  nlohmann::json config;
  bool success = false;
  std::string verdict;
  std::vector<std::string> plan;
  std::size_t plan_length = 0;
  std::size_t steps_used = 0;
  std::size_t done_count = 0;
  std::size_t policy_calls = 0;
  std::size_t discriminator_calls = 0;
  std::size_t discriminator_failures = 0;
  double wall_time_ms = 0;
  /// Failure cause for runs that threw (transport, configuration).
  std::optional<std::string> error;
  /// Trace file of this run, if traces were written.
  std::optional<std::string> trace;

  nlohmann::json to_json() const;
  static RunRecord from_json(const nlohmann::json& j);
};

struct SuiteConfig {
  std::string policy = "oracle";
  std::string discriminator = "oracle";
  search::SearchConfig search;
  std::uint64_t master_seed = 0;
  std::size_t threads = 1;
  agents::AgentOptions agents;
  /// Directory for per-run trace files; none when empty.
  std::filesystem::path trace_dir;
};

/// Per-instance seed: splitmix64(master ^ fnv1a(id)).
std::uint64_t instance_seed(std::uint64_t master, const std::string& id);

/// One search on one instance, never throwing for run-time failures.
RunRecord run_instance(const InstanceSpec& inst, const SuiteConfig& cfg);

/// Runs every instance, in parallel when cfg.threads > 1. When `out` is
/// given, records are appended to it in instance order and flushed one by
/// one; instances whose id already appears there are skipped. Returns the
/// records of the newly executed runs.
std::vector<RunRecord> run_suite(const std::vector<InstanceSpec>& instances, const SuiteConfig& cfg,
                                 const std::optional<std::filesystem::path>& out = std::nullopt);

std::vector<RunRecord> read_records(const std::filesystem::path& path);

/// Serialized record without wall-clock fields.
std::string deterministic_line(const RunRecord& r);

struct Interval {
  double lo = 0;
  double hi = 0;
};

struct BucketRow {
  int bucket = 0;
  std::size_t count = 0;
  std::size_t successes = 0;
  double rate = 0;  // percent
  std::optional<Interval> ci;
};

struct ReportTable {
  std::string label;
  std::vector<BucketRow> buckets;
  std::size_t count = 0;
  std::size_t successes = 0;
  double total = 0;  // percent over all records
  std::optional<Interval> total_ci;

  nlohmann::json to_json() const;
  std::string to_text() const;
};

struct ReportOptions {
  bool bootstrap = false;
  std::size_t resamples = 2000;
  std::uint64_t seed = 0;
  std::string label = "SymPlanner";
};

/// Throws ConfigError for empty input.
ReportTable report(const std::vector<RunRecord>& records, const ReportOptions& opts = {});

/// Rows side by side over the union of buckets.
std::string render_comparison(const std::vector<ReportTable>& tables);

struct AblationConfig {
  SuiteConfig base;
  /// Discriminator used for rating in the row without contrastive ranking.
  std::string rating_discriminator = "random";
  ReportOptions report;
};

struct AblationResult {
  /// Full, w/o symbolic, w/o IC, w/o CR.
  std::vector<ReportTable> tables;
  std::vector<std::vector<RunRecord>> records;
};

AblationResult ablation_matrix(const std::vector<InstanceSpec>& instances, const AblationConfig& cfg,
                               const std::optional<std::filesystem::path>& out_dir = std::nullopt);

}  // namespace symplanner::harness
