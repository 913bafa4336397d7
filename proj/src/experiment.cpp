#include "flowbench/experiment.hpp"

#include "flowbench/csv.hpp"
#include "flowbench/report.hpp"
#include "flowbench/schema.hpp"

#include <fmt/format.h>
#include <fmt/ostream.h>
#include <fmt/ranges.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include <atomic>
#include <cctype>
#include <chrono>
#include <cmath>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

namespace flowbench {

namespace fs = std::filesystem;

namespace {

std::string file_safe(std::string_view name) {
  std::string out(name);
  for (char& ch : out) {
    const bool ok = std::isalnum(static_cast<unsigned char>(ch)) || ch == '.' || ch == '-' || ch == '_';
    if (!ok) ch = '-';
  }
  return out.empty() ? "dataset" : out;
}

std::string format_double(double v) { return fmt::format("{}", v); }

double parse_double(const std::string& s, std::string_view column) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error(fmt::format("results: bad number '{}' in column {}", s, column));
  }
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  const fs::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw Error(fmt::format("cannot write '{}'", tmp.string()));
    out << text;
    if (!out) throw Error(fmt::format("write failed for '{}'", tmp.string()));
  }
  fs::rename(tmp, path);
}

}  // namespace

std::string Cell::key(const std::string& dataset) const {
  return fmt::format("{}_{}_{}_{}", file_safe(dataset), to_string(model), to_string(fe), dims);
}

std::vector<Cell> expand_cells(const ExperimentConfig& config, int feature_count) {
  std::vector<Cell> cells;
  std::set<std::tuple<int, int, int>> seen;
  for (FeMethod fe : config.fe_methods) {
    std::vector<int> widths;
    if (fe == FeMethod::full) {
      widths = {feature_count};
    } else if (fe == FeMethod::lda) {
      widths = {1};
    } else {
      widths = config.dimensions;
    }
    for (int dims : widths) {
      if (dims > feature_count) {
        throw Error(fmt::format("{} with {} dimensions exceeds the {} available features", to_string(fe), dims,
                                feature_count));
      }
      for (ClassifierKind model : config.models) {
        if (seen.emplace(static_cast<int>(fe), dims, static_cast<int>(model)).second) {
          cells.push_back({fe, dims, model});
        }
      }
    }
  }
  return cells;
}

void write_results_csv(std::ostream& out, std::span<const ResultRecord> records, bool with_wall_time) {
  out << "dataset,model,fe,dims,fold,acc,f1,dr,far,precision,auc,pooled_auc,tp,tn,fp,fn,degenerate,status,error";
  out << (with_wall_time ? ",wall_time_seconds\n" : "\n");
  for (const auto& r : records) {
    out << csv_escape(r.dataset) << ',' << r.model << ',' << r.fe << ',' << r.dims << ',' << r.fold << ',';
    if (r.failed) {
      out << ",,,,,,,,,,,,failed," << csv_escape(r.error);
    } else {
      fmt::print(out, "{},{},{},{},{},{},{},{},{},{},{},{},ok,", format_double(r.m.acc), format_double(r.m.f1),
                 format_double(r.m.dr), format_double(r.m.far), format_double(r.m.precision), format_double(r.auc),
                 r.pooled_auc ? format_double(*r.pooled_auc) : std::string(), r.counts.tp, r.counts.tn, r.counts.fp,
                 r.counts.fn, r.m.degenerate ? 1 : 0);
    }
    if (with_wall_time) out << ',' << format_double(r.wall_time_seconds);
    out << '\n';
  }
}

std::vector<ResultRecord> read_results_csv(const std::string& path) {
  const RawTable table = read_csv(path);
  auto col = [&](const char* name) { return table.require_column(name); };
  const auto c_dataset = col("dataset"), c_model = col("model"), c_fe = col("fe"), c_dims = col("dims"),
             c_fold = col("fold"), c_acc = col("acc"), c_f1 = col("f1"), c_dr = col("dr"), c_far = col("far"),
             c_prec = col("precision"), c_auc = col("auc"), c_pooled = col("pooled_auc"), c_tp = col("tp"),
             c_tn = col("tn"), c_fp = col("fp"), c_fn = col("fn"), c_deg = col("degenerate"),
             c_status = col("status"), c_error = col("error");
  const auto c_wall = table.column_index("wall_time_seconds");
  std::vector<ResultRecord> out;
  for (const auto& row : table.rows) {
    ResultRecord r;
    r.dataset = row[c_dataset];
    r.model = row[c_model];
    r.fe = row[c_fe];
    r.dims = static_cast<int>(parse_double(row[c_dims], "dims"));
    r.fold = row[c_fold];
    r.failed = row[c_status] == "failed";
    r.error = row[c_error];
    if (!r.failed) {
      r.m.acc = parse_double(row[c_acc], "acc");
      r.m.f1 = parse_double(row[c_f1], "f1");
      r.m.dr = parse_double(row[c_dr], "dr");
      r.m.far = parse_double(row[c_far], "far");
      r.m.precision = parse_double(row[c_prec], "precision");
      r.m.degenerate = row[c_deg] == "1";
      r.auc = parse_double(row[c_auc], "auc");
      if (!row[c_pooled].empty()) r.pooled_auc = parse_double(row[c_pooled], "pooled_auc");
      r.counts.tp = static_cast<std::int64_t>(parse_double(row[c_tp], "tp"));
      r.counts.tn = static_cast<std::int64_t>(parse_double(row[c_tn], "tn"));
      r.counts.fp = static_cast<std::int64_t>(parse_double(row[c_fp], "fp"));
      r.counts.fn = static_cast<std::int64_t>(parse_double(row[c_fn], "fn"));
    }
    if (c_wall && !row[*c_wall].empty()) r.wall_time_seconds = parse_double(row[*c_wall], "wall_time_seconds");
    out.push_back(std::move(r));
  }
  return out;
}

namespace {

struct Transform {
  ScalerModel scaler;
  ExtractorModel extractor;
};

Transform fit_transform(const FeatureMatrix& fit_data, FeMethod fe, int dims, const TrainSettings& ae,
                        std::uint64_t ae_seed) {
  Transform t;
  t.scaler = fit_scaler(fit_data);
  nn::TrainConfig cfg;
  cfg.epochs = ae.epochs;
  cfg.batch_size = ae.batch_size;
  cfg.learning_rate = ae.learning_rate;
  cfg.seed = ae_seed;
  t.extractor = fit_extractor(fe, apply_scaler(fit_data, t.scaler), dims, cfg);
  return t;
}

FoldData apply_transform(Transform t, const FeatureMatrix& data, std::span<const Index> train_rows,
                         std::span<const Index> test_rows) {
  FoldData f;
  f.train = apply_extractor(t.extractor, apply_scaler(data.select_rows(train_rows), t.scaler));
  f.test = apply_extractor(t.extractor, apply_scaler(data.select_rows(test_rows), t.scaler));
  f.scaler = std::move(t.scaler);
  f.extractor = std::move(t.extractor);
  return f;
}

}  // namespace

FoldData fit_fold(const FeatureMatrix& data, std::span<const Index> train_rows, std::span<const Index> test_rows,
                  FeMethod fe, int dims, const TrainSettings& ae, std::uint64_t ae_seed, bool fit_global) {
  const FeatureMatrix fit_data = fit_global ? data : data.select_rows(train_rows);
  return apply_transform(fit_transform(fit_data, fe, dims, ae, ae_seed), data, train_rows, test_rows);
}

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::uint64_t data_fingerprint(const ExperimentConfig& c, const FeatureMatrix& data) {
  std::string canon = fmt::format("v{}|{}|{}|{}|{}|{}|{}|{}|{}|{}|{}|{}|{}|{}|{}|{}|{}", c.version, c.folds, c.seed,
                                  c.subsample ? static_cast<long long>(*c.subsample) : -1LL, c.fit_global,
                                  c.train.epochs, c.train.batch_size, format_double(c.train.learning_rate),
                                  c.autoencoder.epochs, c.autoencoder.batch_size,
                                  format_double(c.autoencoder.learning_rate), static_cast<int>(c.dff_dropout),
                                  c.weight_shallow, format_double(c.threshold), data.rows(), data.cols(),
                                  fmt::join(data.feature_names, ","));
  std::uint64_t h = fnv1a(canon);
  h = fnv1a(std::string_view(reinterpret_cast<const char*>(data.values.data()),
                             static_cast<std::size_t>(data.values.size()) * sizeof(double)),
            h);
  h = fnv1a(std::string_view(reinterpret_cast<const char*>(data.labels.data()), data.labels.size() * sizeof(int)),
            h);
  for (const auto& a : data.attack_types) h = fnv1a(a, h);
  return h;
}

class Manifest {
public:
  Manifest(fs::path path, std::string fingerprint, std::string dataset)
      : path_(std::move(path)), fingerprint_(std::move(fingerprint)), dataset_(std::move(dataset)) {
    if (!fs::exists(path_)) return;
    nlohmann::json j;
    try {
      std::ifstream in(path_);
      j = nlohmann::json::parse(in);
    } catch (const std::exception& e) {
      throw Error(fmt::format("unreadable manifest '{}': {}", path_.string(), e.what()));
    }
    if (j.value("fingerprint", "") != fingerprint_) {
      throw Error(fmt::format(
          "'{}' belongs to a run with a different dataset or settings; choose another output directory",
          path_.parent_path().string()));
    }
    for (const auto& k : j.at("completed")) completed_.insert(k.get<std::string>());
  }

  bool contains(const std::string& key) const {
    std::lock_guard lock(mu_);
    return completed_.contains(key);
  }

  void mark(const std::string& key) {
    std::lock_guard lock(mu_);
    completed_.insert(key);
    flush_locked();
  }

  void flush() {
    std::lock_guard lock(mu_);
    flush_locked();
  }

private:
  void flush_locked() {
    nlohmann::json j;
    j["version"] = 1;
    j["dataset"] = dataset_;
    j["fingerprint"] = fingerprint_;
    j["completed"] = completed_;
    write_text_atomic(path_, j.dump(2) + "\n");
  }

  fs::path path_;
  std::string fingerprint_;
  std::string dataset_;
  std::set<std::string> completed_;
  mutable std::mutex mu_;
};

struct CellOutcome {
  std::vector<ResultRecord> records;  // folds then mean, or a single failure row
  std::optional<AttackBreakdown> per_attack;
  RocCurve pooled_roc;
};

ResultRecord base_record(const std::string& dataset, const Cell& cell) {
  ResultRecord r;
  r.dataset = dataset;
  r.model = to_string(cell.model);
  r.fe = to_string(cell.fe);
  r.dims = cell.dims;
  return r;
}

// Lazily built per-fold transformed data shared by the models of one (fe, dims) group.
class FoldCache {
public:
  FoldCache(const ExperimentConfig& config, const FeatureMatrix& data, const FoldPlan& plan, FeMethod fe, int dims)
      : config_(config), data_(data), plan_(plan), fe_(fe), dims_(dims),
        folds_(static_cast<std::size_t>(plan.k)), errors_(static_cast<std::size_t>(plan.k)) {}

  const FoldData& get(int fold) {
    const auto i = static_cast<std::size_t>(fold);
    if (errors_[i]) throw Error(*errors_[i]);
    if (!folds_[i]) {
      try {
        const auto train = plan_.train_indices(fold);
        const auto test = plan_.test_indices(fold);
        if (config_.fit_global) {
          if (!global_) {
            global_ = fit_transform(data_, fe_, dims_, config_.autoencoder,
                                    fnv1a(fmt::format("{}|ae|{}|{}|global", config_.seed, to_string(fe_), dims_)));
          }
          folds_[i] = apply_transform(*global_, data_, train, test);
        } else {
          folds_[i] = fit_fold(data_, train, test, fe_, dims_, config_.autoencoder,
                               fnv1a(fmt::format("{}|ae|{}|{}|{}", config_.seed, to_string(fe_), dims_, fold)),
                               false);
        }
      } catch (const std::exception& e) {
        errors_[i] = fmt::format("fold {} feature extraction: {}", fold, e.what());
        throw Error(*errors_[i]);
      }
    }
    return *folds_[i];
  }

private:
  const ExperimentConfig& config_;
  const FeatureMatrix& data_;
  const FoldPlan& plan_;
  FeMethod fe_;
  int dims_;
  std::optional<Transform> global_;
  std::vector<std::optional<FoldData>> folds_;
  std::vector<std::optional<std::string>> errors_;
};

ClassifierSpec cell_classifier(const ExperimentConfig& config, const Cell& cell) {
  ClassifierSpec spec = cell.model == ClassifierKind::dff ? build_dff(cell.dims, config.dff_dropout)
                                                          : make_classifier(cell.model, cell.dims);
  spec.weight_shallow = config.weight_shallow;
  return spec;
}

CellOutcome run_cell(const ExperimentConfig& config, const std::string& dataset, const Cell& cell,
                     FoldCache& cache, int folds) {
  const auto key = cell.key(dataset);
  CellOutcome out;
  const auto cell_start = Clock::now();
  try {
    const ClassifierSpec spec = cell_classifier(config, cell);
    std::vector<EvalReport> reports;
    std::vector<double> pooled_p;
    std::vector<int> pooled_y;
    for (int f = 0; f < folds; ++f) {
      const auto fold_start = Clock::now();
      const FoldData& fd = cache.get(f);
      nn::TrainConfig tc;
      tc.epochs = config.train.epochs;
      tc.batch_size = config.train.batch_size;
      tc.learning_rate = config.train.learning_rate;
      tc.seed = fnv1a(fmt::format("{}|{}|{}", config.seed, key, f));
      const Vector p = fit_predict(spec, fd.train, fd.test, tc);
      for (Index i = 0; i < p.size(); ++i) {
        if (!std::isfinite(p(i))) throw Error(fmt::format("fold {}: non-finite score", f));
      }
      reports.push_back(evaluate(p, fd.test.labels, fd.test.attack_types, config.threshold));
      pooled_p.insert(pooled_p.end(), p.data(), p.data() + p.size());
      pooled_y.insert(pooled_y.end(), fd.test.labels.begin(), fd.test.labels.end());

      ResultRecord r = base_record(dataset, cell);
      r.fold = std::to_string(f);
      r.m = reports.back().m;
      r.auc = reports.back().auc;
      r.counts = reports.back().counts;
      r.wall_time_seconds = seconds_since(fold_start);
      out.records.push_back(std::move(r));
    }
    const EvalReport mean = aggregate_folds(reports);
    auto pooled = roc_auc(Eigen::Map<const Vector>(pooled_p.data(), static_cast<Index>(pooled_p.size())), pooled_y);
    ResultRecord r = base_record(dataset, cell);
    r.fold = "mean";
    r.m = mean.m;
    r.auc = mean.auc;
    r.pooled_auc = pooled.auc;
    r.counts = mean.counts;
    r.wall_time_seconds = seconds_since(cell_start);
    out.records.push_back(std::move(r));
    out.per_attack = mean.per_attack;
    out.pooled_roc = std::move(pooled.curve);
  } catch (const std::exception& e) {
    spdlog::warn("{} failed: {}", key, e.what());
    out = CellOutcome{};
    ResultRecord r = base_record(dataset, cell);
    r.fold = "mean";
    r.failed = true;
    r.error = e.what();
    r.wall_time_seconds = seconds_since(cell_start);
    out.records.push_back(std::move(r));
  }
  return out;
}

void persist_cell(const fs::path& dir, const std::string& key, const CellOutcome& outcome) {
  if (!outcome.pooled_roc.points.empty()) {
    std::ostringstream roc;
    write_roc_csv(roc, outcome.pooled_roc);
    write_text_atomic(dir / "roc" / (key + ".csv"), roc.str());
  }
  if (outcome.per_attack) write_per_attack_csv(dir / "cells" / (key + ".attack.csv"), *outcome.per_attack);
  std::ostringstream rows;
  write_results_csv(rows, outcome.records, true);
  write_text_atomic(dir / "cells" / (key + ".csv"), rows.str());
}

CellOutcome load_cell(const fs::path& dir, const std::string& key) {
  CellOutcome out;
  out.records = read_results_csv((dir / "cells" / (key + ".csv")).string());
  const auto attack = dir / "cells" / (key + ".attack.csv");
  if (fs::exists(attack)) out.per_attack = read_per_attack_csv(attack);
  return out;
}

DatasetVariance compute_variance(const ExperimentConfig& config, const std::string& dataset,
                                 const FeatureMatrix& data, const FoldPlan& plan) {
  const FeatureMatrix fit_data = config.fit_global ? data : data.select_rows(plan.train_indices(0));
  const FeatureMatrix scaled = apply_scaler(fit_data, fit_scaler(fit_data));
  DatasetVariance v;
  v.dataset = dataset;
  const Index k = std::min(scaled.rows() - 1, scaled.cols());
  const PcaModel pca = pca_fit(scaled, static_cast<int>(k));
  v.pca = variance_report(pca_transform(scaled, pca), VarianceMethod::pca, pca.total_variance);
  try {
    v.lda = variance_report(lda_transform(scaled, lda_fit(scaled)), VarianceMethod::lda);
  } catch (const std::exception& e) {
    spdlog::warn("lda variance for {}: {}", dataset, e.what());
  }
  return v;
}

}  // namespace

RunOutput run(const ExperimentConfig& config, const std::string& dataset_name, const FeatureMatrix& input) {
  config.validate();
  input.validate();
  FeatureMatrix data = input;
  if (config.subsample && static_cast<std::size_t>(data.rows()) > *config.subsample) {
    data = data.select_rows(stratified_subsample(data, *config.subsample, fnv1a(fmt::format("{}|subsample",
                                                                                             config.seed))));
    spdlog::info("subsampled {} to {} rows", dataset_name, data.rows());
  }
  const auto cells = expand_cells(config, static_cast<int>(data.cols()));
  const FoldPlan plan = stratified_kfold(data.labels, config.folds, config.seed);

  const fs::path dir = config.output_dir;
  for (const char* sub : {"cells", "roc", "variance", "sweeps", "summary"}) fs::create_directories(dir / sub);
  Manifest manifest(dir / "manifest.json", fmt::format("{:016x}", data_fingerprint(config, data)), dataset_name);
  manifest.flush();

  RunOutput result;
  result.variance.push_back(compute_variance(config, dataset_name, data, plan));

  // Group pending cells by (fe, dims) so that transforms are shared across models.
  std::vector<CellOutcome> outcomes(cells.size());
  std::vector<bool> pending(cells.size(), false);
  std::vector<std::vector<std::size_t>> groups;
  std::map<std::pair<int, int>, std::size_t> group_of;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    const auto key = cells[i].key(dataset_name);
    if (manifest.contains(key) && fs::exists(dir / "cells" / (key + ".csv"))) {
      outcomes[i] = load_cell(dir, key);
      ++result.resumed_cells;
      continue;
    }
    pending[i] = true;
    const std::pair<int, int> g{static_cast<int>(cells[i].fe), cells[i].dims};
    auto [it, inserted] = group_of.emplace(g, groups.size());
    if (inserted) groups.emplace_back();
    groups[it->second].push_back(i);
  }
  if (result.resumed_cells > 0) spdlog::info("resuming: {} of {} cells already complete", result.resumed_cells,
                                             cells.size());

  std::atomic<std::size_t> next_group{0};
  std::atomic<std::size_t> done{result.resumed_cells};
  auto worker = [&] {
    for (std::size_t g; (g = next_group.fetch_add(1)) < groups.size();) {
      const auto& members = groups[g];
      FoldCache cache(config, data, plan, cells[members.front()].fe, cells[members.front()].dims);
      for (std::size_t i : members) {
        const auto key = cells[i].key(dataset_name);
        outcomes[i] = run_cell(config, dataset_name, cells[i], cache, config.folds);
        persist_cell(dir, key, outcomes[i]);
        manifest.mark(key);
        const auto& mean = outcomes[i].records.back();
        if (mean.failed) {
          spdlog::info("[{}/{}] {} failed", done.fetch_add(1) + 1, cells.size(), key);
        } else {
          spdlog::info("[{}/{}] {} auc={:.4f} ({:.1f}s)", done.fetch_add(1) + 1, cells.size(), key, mean.auc,
                       mean.wall_time_seconds);
        }
      }
    }
  };
  const int workers = std::max(1, std::min<int>(config.jobs, static_cast<int>(groups.size())));
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  }

  for (std::size_t i = 0; i < cells.size(); ++i) {
    for (auto& r : outcomes[i].records) result.records.push_back(std::move(r));
    if (outcomes[i].per_attack) result.per_attack[cells[i].key(dataset_name)] = std::move(*outcomes[i].per_attack);
  }

  {
    std::ostringstream csv;
    write_results_csv(csv, result.records, false);
    write_text_atomic(dir / "results.csv", csv.str());
  }
  {
    std::ostringstream csv;
    csv << "dataset,model,fe,dims,fold,wall_time_seconds\n";
    for (const auto& r : result.records) {
      csv << csv_escape(r.dataset) << ',' << r.model << ',' << r.fe << ',' << r.dims << ',' << r.fold << ','
          << format_double(r.wall_time_seconds) << '\n';
    }
    write_text_atomic(dir / "timings.csv", csv.str());
  }
  for (const auto& best : best_per_dataset(result.records)) {
    const Cell c{parse_fe_method(best.fe), best.dims, parse_classifier_kind(best.model)};
    const auto it = result.per_attack.find(c.key(best.dataset));
    if (it != result.per_attack.end()) write_per_attack_csv(dir / "per_attack.csv", it->second);
  }
  emit_plots(result.records, result.variance, dir, config.svg);
  write_text_atomic(dir / "summary.txt", render_summary(result.records, result.per_attack));
  return result;
}

RunOutput run(const ExperimentConfig& config) {
  config.validate();
  const auto schema = resolve_schema(config.schema_name);
  const auto prepared = prepare_file(config.dataset_path, schema);
  spdlog::info("loaded {}: {} rows ({} duplicates removed), {} features", config.dataset_path, prepared.data.rows(),
               prepared.duplicates_removed, prepared.data.cols());
  return run(config, config.dataset_name, prepared.data);
}

}  // namespace flowbench
