#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "symplanner/core.hpp"

namespace symplanner {

/// {"objects": [...], "init": [...], "goal": [...], "domain": "blocksworld"}
nlohmann::json problem_to_json(const Problem& p);

/// Grounds the blocksworld library over "objects". Throws ConfigError for
/// unsupported domains or malformed content.
Problem problem_from_json(const nlohmann::json& j);

Problem load_problem(const std::filesystem::path& path);

/// Reads a PlanBench-style PDDL problem file (:objects, :init, :goal with a
/// conjunction of ground literals) into a blocksworld Problem.
Problem import_pddl_problem(std::string_view pddl);

/// Non-empty, non-comment lines of a text file, trimmed.
std::vector<std::string> read_lines(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);

}  // namespace symplanner
