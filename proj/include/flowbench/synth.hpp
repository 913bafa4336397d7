#pragma once

#include "flowbench/schema.hpp"

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace flowbench {

inline constexpr double kParetoShape = 1.1;

/// Parameters of the synthetic flow generator.
///
/// Informative columns are class-conditional Gaussians whose class-1 mean is
/// shifted by `separation` standard deviations; noise columns ignore the
/// label. Heavy-tailed noise (Pareto) mimics byte/packet counters, whose
/// min-max scaled variance is small.
struct SynthSpec {
  std::size_t rows = 1000;
  double imbalance = 0.9;  // fraction of class 0
  int informative = 3;
  int noise = 7;
  int categorical = 2;
  int boolean = 2;
  double duplicate_rate = 0.0;
  double dirty_rate = 0.0;
  double separation = 2.0;
  bool heavy_tailed_noise = true;
  std::vector<std::string> attack_types = {"dos", "exploits", "reconnaissance"};

  void validate() const;
};

SynthSpec load_synth_spec(const std::string& path);

/// What the generator actually wrote, for test bookkeeping.
struct SynthSummary {
  std::size_t rows = 0;
  std::size_t class0 = 0;
  std::size_t class1 = 0;
  std::size_t duplicates = 0;  // rows identical to an earlier row once identifiers are dropped
  std::size_t dirty_cells = 0;
};

SynthSummary synth_generate(const SynthSpec& spec, std::uint64_t seed, std::ostream& out);
SynthSummary synth_generate(const SynthSpec& spec, std::uint64_t seed, const std::string& path);

/// Schema describing the generator's columns. Equals builtin_schema("synthetic")
/// when categorical = boolean = 2.
DatasetSchema synth_schema(const SynthSpec& spec);

}  // namespace flowbench
