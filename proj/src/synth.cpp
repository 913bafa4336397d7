#include "flowbench/synth.hpp"

#include "flowbench/common.hpp"
#include "flowbench/csv.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numeric>
#include <ostream>

namespace flowbench {

void SynthSpec::validate() const {
  if (rows < 4) throw Error(fmt::format("synth: rows {} < 4", rows));
  if (!(imbalance > 0.0 && imbalance < 1.0)) throw Error(fmt::format("synth: imbalance {} outside (0,1)", imbalance));
  if (informative < 0 || noise < 0 || categorical < 0 || boolean < 0) throw Error("synth: negative column count");
  if (informative + noise < 1) throw Error("synth: need at least one numeric column");
  if (!(duplicate_rate >= 0.0 && duplicate_rate < 1.0)) throw Error("synth: duplicate_rate outside [0,1)");
  if (!(dirty_rate >= 0.0 && dirty_rate < 1.0)) throw Error("synth: dirty_rate outside [0,1)");
  if (!std::isfinite(separation)) throw Error("synth: separation must be finite");
  if (attack_types.empty()) throw Error("synth: attack_types must not be empty");
}

SynthSpec load_synth_spec(const std::string& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const YAML::Exception& e) {
    throw Error(fmt::format("cannot read synth spec '{}': {}", path, e.what()));
  }
  SynthSpec s;
  if (root["rows"]) s.rows = root["rows"].as<std::size_t>();
  if (root["imbalance"]) s.imbalance = root["imbalance"].as<double>();
  if (root["informative"]) s.informative = root["informative"].as<int>();
  if (root["noise"]) s.noise = root["noise"].as<int>();
  if (root["categorical"]) s.categorical = root["categorical"].as<int>();
  if (root["boolean"]) s.boolean = root["boolean"].as<int>();
  if (root["duplicate_rate"]) s.duplicate_rate = root["duplicate_rate"].as<double>();
  if (root["dirty_rate"]) s.dirty_rate = root["dirty_rate"].as<double>();
  if (root["separation"]) s.separation = root["separation"].as<double>();
  if (root["heavy_tailed_noise"]) s.heavy_tailed_noise = root["heavy_tailed_noise"].as<bool>();
  if (root["attack_types"]) s.attack_types = root["attack_types"].as<std::vector<std::string>>();
  s.validate();
  return s;
}

DatasetSchema synth_schema(const SynthSpec& spec) {
  DatasetSchema s;
  s.name = "synthetic";
  s.identifier_columns = {"id", "srcip", "dstip", "sport", "dport"};
  s.categorical_columns = numbered_names("cat_", spec.categorical);
  s.boolean_columns = numbered_names("bool_", spec.boolean);
  s.label_column = "label";
  s.attack_type_column = "attack_cat";
  s.validate();
  return s;
}

SynthSummary synth_generate(const SynthSpec& spec, std::uint64_t seed, std::ostream& out) {
  spec.validate();
  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  const std::size_t n = spec.rows;

  // Exact class counts, then a seeded permutation of the label sequence.
  const auto n0 = static_cast<std::size_t>(std::llround(spec.imbalance * static_cast<double>(n)));
  std::vector<int> labels(n, 1);
  std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(n0), 0);
  std::shuffle(labels.begin(), labels.end(), rng);

  // Per-column raw scale so that min-max scaling has something to do.
  const int numeric = spec.informative + spec.noise;
  std::vector<double> offset(static_cast<std::size_t>(numeric)), scale(static_cast<std::size_t>(numeric));
  for (int j = 0; j < numeric; ++j) {
    offset[static_cast<std::size_t>(j)] = std::floor(uniform01(rng) * 1000.0);
    scale[static_cast<std::size_t>(j)] = 1.0 + std::floor(uniform01(rng) * 99.0);
  }

  static constexpr std::array<const char*, 6> kProtocols = {"tcp", "udp", "icmp", "arp", "ospf", "sctp"};
  static constexpr std::array<const char*, 5> kServices = {"-", "http", "dns", "ftp", "smtp"};
  static constexpr std::array<const char*, 6> kDirty = {"nan", "-", "Infinity", "-Infinity", "NaN", ""};
  static constexpr std::array<const char*, 4> kTrue = {"T", "true", "1", "TRUE"};
  static constexpr std::array<const char*, 4> kFalse = {"F", "false", "0", "FALSE"};

  RawTable table;
  table.columns = {"id", "srcip", "dstip", "sport", "dport"};
  for (int j = 0; j < spec.informative; ++j) table.columns.push_back(fmt::format("inf_{}", j));
  for (int j = 0; j < spec.noise; ++j) table.columns.push_back(fmt::format("noise_{}", j));
  for (int j = 0; j < spec.categorical; ++j) table.columns.push_back(fmt::format("cat_{}", j));
  for (int j = 0; j < spec.boolean; ++j) table.columns.push_back(fmt::format("bool_{}", j));
  table.columns.push_back("label");
  table.columns.push_back("attack_cat");

  SynthSummary summary;
  summary.rows = n;
  summary.class0 = n0;
  summary.class1 = n - n0;

  const auto target_dups = static_cast<std::size_t>(std::llround(spec.duplicate_rate * static_cast<double>(n)));
  std::vector<char> want_dup(n, 0);
  {
    std::vector<std::size_t> pos(n);
    std::iota(pos.begin(), pos.end(), std::size_t{0});
    std::shuffle(pos.begin(), pos.end(), rng);
    for (std::size_t i = 0; i < target_dups; ++i) want_dup[pos[i]] = 1;
  }
  std::array<std::vector<std::size_t>, 2> originals;  // non-duplicate rows per class

  const std::size_t fixed = 5;
  for (std::size_t r = 0; r < n; ++r) {
    const int y = labels[r];
    std::vector<std::string> row;
    row.reserve(table.columns.size());
    row.push_back(std::to_string(r + 1));
    row.push_back(fmt::format("10.0.{}.{}", rng() % 256, rng() % 256));
    row.push_back(fmt::format("192.168.{}.{}", rng() % 256, rng() % 256));
    row.push_back(std::to_string(1024 + rng() % 64000));
    row.push_back(std::to_string(rng() % 1024));

    auto& pool = originals[static_cast<std::size_t>(y)];
    if (want_dup[r] && !pool.empty()) {
      const auto& src = table.rows[pool[rng() % pool.size()]];
      row.insert(row.end(), src.begin() + static_cast<std::ptrdiff_t>(fixed), src.end());
      table.rows.push_back(std::move(row));
      ++summary.duplicates;
      continue;
    }

    for (int j = 0; j < numeric; ++j) {
      const auto ju = static_cast<std::size_t>(j);
      if (uniform01(rng) < spec.dirty_rate) {
        row.emplace_back(kDirty[rng() % kDirty.size()]);
        ++summary.dirty_cells;
        continue;
      }
      double v = 0.0;
      if (j < spec.informative) {
        v = offset[ju] + scale[ju] * (gauss(rng) + (y == 1 ? spec.separation : 0.0));
      } else if (spec.heavy_tailed_noise) {
        v = offset[ju] + scale[ju] * std::pow(1.0 - uniform01(rng), -1.0 / kParetoShape);
      } else {
        v = offset[ju] + scale[ju] * gauss(rng);
      }
      row.push_back(fmt::format("{:.6f}", v));
    }
    for (int j = 0; j < spec.categorical; ++j) {
      if (j % 2 == 0) row.emplace_back(kProtocols[rng() % kProtocols.size()]);
      else row.emplace_back(kServices[rng() % kServices.size()]);
    }
    for (int j = 0; j < spec.boolean; ++j) {
      const bool b = uniform01(rng) < 0.3;
      const auto& tokens = b ? kTrue : kFalse;
      row.emplace_back(tokens[rng() % tokens.size()]);
    }
    row.push_back(std::to_string(y));
    row.push_back(y == 1 ? spec.attack_types[rng() % spec.attack_types.size()] : std::string("Normal"));
    pool.push_back(table.rows.size());
    table.rows.push_back(std::move(row));
  }
  write_csv(table, out);
  return summary;
}

SynthSummary synth_generate(const SynthSpec& spec, std::uint64_t seed, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(fmt::format("cannot write '{}'", path));
  return synth_generate(spec, seed, out);
}

}  // namespace flowbench
