#pragma once

#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "selmut/analysis.hpp"
#include "selmut/config.hpp"

namespace selmut {

enum class Command { validate, simulate, hj, sweep, report };

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int config = 1;
inline constexpr int validation = 2;
inline constexpr int blow_up = 3;
inline constexpr int check_failure = 4;
}  // namespace exit_code

struct ScenarioOptions {
  Command command = Command::simulate;
  std::optional<std::string> out_dir;            ///< overrides output.dir
  unsigned jobs = 1;                             ///< sweep worker threads
  std::optional<std::string> write_calibration;  ///< sweep: write pilot constants here
};

/// Limit-run initial datum: the eps-model's envelope datum minus its maximum.
Field limit_initial_datum(const RunConfig& config, const ModelSpec& model, const std::optional<NutrientRange>& range);

/// Hamiltonian matching the configured variant (eikonal for the Laplacian
/// model, kernel otherwise).
Hamiltonian make_hamiltonian(const RunConfig& config, const ModelSpec& model, const NutrientRange& range);

/// Constrained limit run with the configured step (default h / 10).
RunResult run_limit(const RunConfig& config, const ModelSpec& model, const NutrientRange& range);

/// Monitors of one eps-solver run: nutrient bounds, envelope, support, BV and,
/// for the kernel model, lower bound, slope growth and time-derivative bound.
std::vector<Check> member_checks(const RunConfig& config, const ModelSpec& model, const NutrientRange& range,
                                 const SweepMember& member, const Calibration* calibration);

/// Pilot constants extracted from one member (keys prefixed "<model>.<variant>.").
void calibrate_from_member(const RunConfig& config, const NutrientRange& range, const SweepMember& member,
                           Calibration& calibration);

/// Executes a parsed configuration; returns the process exit status.
int run_scenario(const RunConfig& config, const ScenarioOptions& options, std::ostream& log);

/// Reads a config file, applies overrides, runs it. ConfigError maps to exit 1.
int run_config_file(const std::string& path, const std::vector<std::string>& overrides,
                    const ScenarioOptions& options, std::ostream& log);

/// Prints DIR/report.txt; exit 0 iff its status line reads PASS.
int report_status(const std::string& out_dir, std::ostream& log);

}  // namespace selmut
