// Command-line front end: validate, simulate, hj, sweep and report subcommands
// over a flat key = value configuration file.

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "selmut/scenario.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Selection-mutation population dynamics in the Hopf-Cole variable"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::vector<std::string> overrides;
  unsigned jobs = 1;
  std::string calibration_out;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "Configuration file (key = value per line)")->required();
    sub->add_option("--out", out_dir, "Output directory (overrides output.dir)");
    sub->add_option("--override", overrides, "key=value applied after the file; repeatable");
  };

  struct Entry {
    CLI::App* app;
    selmut::Command command;
  };
  std::vector<Entry> subs;
  subs.push_back({app.add_subcommand("validate", "Check model assumptions and derive the nutrient range"),
                  selmut::Command::validate});
  subs.push_back({app.add_subcommand("simulate", "Run one eps-model simulation with its monitors"),
                  selmut::Command::simulate});
  subs.push_back({app.add_subcommand("hj", "Run the constrained limit equation"), selmut::Command::hj});
  subs.push_back({app.add_subcommand("sweep", "Run an eps sweep against the limit equation"), selmut::Command::sweep});
  for (auto& s : subs) add_common(s.app);
  subs[3].app->add_option("--jobs", jobs, "Worker threads for sweep members")->check(CLI::PositiveNumber);
  subs[3].app->add_option("--write-calibration", calibration_out, "Write pilot constants to this file");

  auto* report = app.add_subcommand("report", "Print OUT/report.txt and exit with its status");
  report->add_option("--config", config_path, "Configuration file (supplies output.dir)")->required();
  report->add_option("--out", out_dir, "Output directory (overrides output.dir)");
  report->add_option("--override", overrides, "key=value applied after the file; repeatable");
  subs.push_back({report, selmut::Command::report});

  CLI11_PARSE(app, argc, argv);

  selmut::ScenarioOptions options;
  for (const auto& s : subs)
    if (s.app->parsed()) options.command = s.command;
  if (!out_dir.empty()) options.out_dir = out_dir;
  options.jobs = jobs;
  if (!calibration_out.empty()) options.write_calibration = calibration_out;
  return selmut::run_config_file(config_path, overrides, options, std::cerr);
}
