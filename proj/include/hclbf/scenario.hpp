#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>

#include "hclbf/sim.hpp"

namespace hclbf::io {

/// Structurally invalid scenario file: wrong types, unknown keys, bad values.
class ScenarioError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A file named by a scenario (or the scenario itself) does not exist.
class FileNotFound : public std::runtime_error {
 public:
  explicit FileNotFound(const std::filesystem::path& p) : std::runtime_error("file not found: " + p.string()) {}
};

/// Parses a scenario document. Relative `formula_file`, `policy.qtable` and
/// `policy.replay` paths resolve against `base_dir`. Formula errors surface as
/// stl::SyntaxError / stl::FragmentViolation.
sim::Scenario scenario_from_json(const std::string& text, const std::filesystem::path& base_dir = {});
sim::Scenario load_scenario(const std::filesystem::path& path);

/// Serializes with the q-table and replay forces inlined.
std::string scenario_to_json(const sim::Scenario& sc);

/// Reference text for the scenario schema (printed by `--help`).
const char* scenario_schema_reference();

}  // namespace hclbf::io
