#include "flowbench/experiment.hpp"
#include "flowbench/report.hpp"
#include "flowbench/synth.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include <filesystem>
#include <iostream>

namespace fs = std::filesystem;

int main(int argc, char** argv) {
  CLI::App app{"flowbench: feature extraction and classifier benchmark for flow-based intrusion detection"};
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  auto* run_cmd = app.add_subcommand("run", "Run the extractor x dimension x model sweep described by a config");
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> subsample;
  bool fit_global = false;
  std::optional<int> jobs;
  std::optional<std::string> out_dir;
  run_cmd->add_option("--config", config_path, "Experiment config (YAML)")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--seed", seed, "Override the config seed");
  run_cmd->add_option("--subsample", subsample, "Stratified row cap")->check(CLI::PositiveNumber);
  run_cmd->add_flag("--fit-global", fit_global, "Fit scaler and extractor on all rows instead of each fold");
  run_cmd->add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);
  run_cmd->add_option("--out", out_dir, "Output directory");

  auto* synth_cmd = app.add_subcommand("synth", "Write a synthetic flow CSV and its schema");
  std::optional<std::string> spec_path;
  std::string synth_out;
  std::uint64_t synth_seed = 0;
  synth_cmd->add_option("--spec", spec_path, "Generator spec (YAML); defaults apply when omitted")
      ->check(CLI::ExistingFile);
  synth_cmd->add_option("--out", synth_out, "Output CSV")->required();
  synth_cmd->add_option("--seed", synth_seed, "Generator seed");

  auto* report_cmd = app.add_subcommand("report", "Summarise one or more run directories");
  std::vector<std::string> report_in;
  std::optional<std::string> report_out;
  report_cmd->add_option("--in", report_in, "Run directory (repeatable)")->required()->check(CLI::ExistingDirectory);
  report_cmd->add_option("--out", report_out, "Where to write the summary (default: first --in)");

  CLI11_PARSE(app, argc, argv);
  spdlog::set_level(verbose ? spdlog::level::debug : spdlog::level::info);

  try {
    if (*run_cmd) {
      auto config = flowbench::load_config(config_path);
      if (seed) config.seed = *seed;
      if (subsample) config.subsample = *subsample;
      if (fit_global) config.fit_global = true;
      if (jobs) config.jobs = *jobs;
      if (out_dir) config.output_dir = *out_dir;
      config.validate();
      const auto result = flowbench::run(config);
      std::size_t failed = 0;
      for (const auto& r : result.records) failed += r.failed;
      fmt::print("{} result rows written to {} ({} failed cells)\n", result.records.size(), config.output_dir,
                 failed);
    } else if (*synth_cmd) {
      const auto spec = spec_path ? flowbench::load_synth_spec(*spec_path) : flowbench::SynthSpec{};
      const auto summary = flowbench::synth_generate(spec, synth_seed, synth_out);
      fs::path schema_path = synth_out;
      schema_path.replace_extension(".schema.yaml");
      flowbench::save_schema(flowbench::synth_schema(spec), schema_path.string());
      fmt::print("{} rows ({} benign, {} attack, {} duplicates, {} dirty cells) -> {}\nschema -> {}\n", summary.rows,
                 summary.class0, summary.class1, summary.duplicates, summary.dirty_cells, synth_out,
                 schema_path.string());
    } else if (*report_cmd) {
      std::vector<fs::path> dirs(report_in.begin(), report_in.end());
      std::cout << flowbench::report(dirs, report_out ? fs::path(*report_out) : dirs.front());
    }
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return 1;
  }
  return 0;
}
