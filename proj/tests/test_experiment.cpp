#include "flowbench/experiment.hpp"
#include "flowbench/report.hpp"
#include "flowbench/synth.hpp"
#include "test_util.hpp"

#include <doctest.h>
#include <spdlog/spdlog.h>

#include <fstream>
#include <sstream>

using namespace flowbench;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t line_count(const fs::path& p) {
  const auto text = slurp(p);
  return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
}

ExperimentConfig small_config(const fs::path& out) {
  ExperimentConfig c;
  c.dataset_path = "unused.csv";
  c.schema_name = "synthetic";
  c.folds = 3;
  c.seed = 11;
  c.train = {5, 32, 1e-2};
  c.autoencoder = {5, 32, 1e-2};
  c.output_dir = out.string();
  c.svg = false;
  return c;
}

ResultRecord mean_row(std::string model, std::string fe, int dims, double auc, std::string dataset = "ds") {
  ResultRecord r;
  r.dataset = std::move(dataset);
  r.model = std::move(model);
  r.fe = std::move(fe);
  r.dims = dims;
  r.fold = "mean";
  r.auc = auc;
  return r;
}

struct Quiet {
  Quiet() { spdlog::set_level(spdlog::level::warn); }
} quiet;

}  // namespace

TEST_SUITE("config") {
  TEST_CASE("full document and path resolution") {
    const auto c = parse_config(R"(
version: 1
dataset: {path: data/flows.csv, schema: unsw-nb15}
fe: [pca, lda]
dims: [2, 4]
models: [dff, nb]
folds: 4
seed: 9
subsample: 5000
train: {epochs: 3}
dff_dropout: after_each_hidden
output_dir: out
jobs: 2
)",
                                "/cfg");
    CHECK(c.dataset_path == "/cfg/data/flows.csv");
    CHECK(c.output_dir == "/cfg/out");
    CHECK(c.dataset_name == "flows");
    CHECK(c.fe_methods == std::vector<FeMethod>{FeMethod::pca, FeMethod::lda});
    CHECK(c.dimensions == std::vector<int>{2, 4});
    CHECK(c.models == std::vector<ClassifierKind>{ClassifierKind::dff, ClassifierKind::nb});
    CHECK(c.folds == 4);
    CHECK(c.seed == 9);
    CHECK(c.subsample == 5000u);
    CHECK(c.train.epochs == 3);
    CHECK(c.train.batch_size == 256);
    CHECK(c.autoencoder.epochs == 3);
    CHECK(c.dff_dropout == DropoutPlacement::after_each_hidden);
    CHECK(c.jobs == 2);
  }

  TEST_CASE("defaults") {
    const auto c = parse_config("version: 1\ndataset: {path: /x.csv, schema: synthetic}\n");
    CHECK(c.dimensions == std::vector<int>{1, 2, 3, 4, 5, 10, 20, 30});
    CHECK(c.folds == 5);
    CHECK(c.threshold == 0.5);
    CHECK(c.train.epochs == 20);
    CHECK(c.train.batch_size == 256);
    CHECK_FALSE(c.fit_global);
  }

  TEST_CASE("rejected documents") {
    const std::string head = "version: 1\ndataset: {path: /x.csv, schema: synthetic}\n";
    CHECK_THROWS_AS(parse_config("dataset: {path: /x.csv, schema: synthetic}\n"), Error);
    CHECK_THROWS_AS(parse_config("version: 2\ndataset: {path: /x.csv, schema: synthetic}\n"), Error);
    CHECK_THROWS_AS(parse_config(head + "colour: blue\n"), Error);
    CHECK_THROWS_AS(parse_config(head + "fe: [ica]\n"), Error);
    CHECK_THROWS_AS(parse_config(head + "models: [svm]\n"), Error);
    CHECK_THROWS_AS(parse_config(head + "dims: [0]\n"), Error);
    CHECK_THROWS_AS(parse_config(head + "folds: 1\n"), Error);
    CHECK_THROWS_AS(parse_config(head + "train: {epochs: 0}\n"), Error);
    CHECK_THROWS_AS(parse_config(head + "threshold: 2\n"), Error);
    CHECK_THROWS_AS(parse_config(head + "dims: 3\n"), Error);
    CHECK_THROWS_AS(parse_config("version: 1\ndataset: {path: /x.csv}\n"), Error);
    CHECK_THROWS_AS(parse_config("[1, 2"), Error);
    CHECK_THROWS_AS(load_config("/nonexistent/config.yaml"), Error);
  }
}

TEST_SUITE("cells") {
  TEST_CASE("expansion and collapse") {
    ExperimentConfig c;
    c.fe_methods = {FeMethod::full, FeMethod::pca, FeMethod::lda};
    c.dimensions = {1, 2, 3};
    c.models = {ClassifierKind::dt, ClassifierKind::nb};
    const auto cells = expand_cells(c, 8);
    CHECK(cells.size() == 2 + 6 + 2);
    CHECK(cells.front().dims == 8);
    CHECK(cells.back().fe == FeMethod::lda);
    CHECK(cells.back().dims == 1);
    CHECK(cells[2].key("UNSW NB15") == "UNSW-NB15_dt_pca_1");

    c.dimensions = {1, 9};
    CHECK_THROWS_AS(expand_cells(c, 8), Error);
  }
}

TEST_SUITE("records") {
  TEST_CASE("results CSV round trip") {
    ResultRecord a = mean_row("dt", "pca", 3, 0.875);
    a.m = metrics({5, 4, 1, 2});
    a.counts = {5, 4, 1, 2};
    a.pooled_auc = 0.86;
    ResultRecord b = mean_row("nb", "full", 7, 0.0);
    b.failed = true;
    b.error = "fold 1: boom, with \"quotes\"";
    testutil::TempDir dir("records");
    {
      std::ofstream out(dir.file("r.csv"));
      const ResultRecord rows[] = {a, b};
      write_results_csv(out, rows);
    }
    const auto back = read_results_csv(dir.file("r.csv"));
    REQUIRE(back.size() == 2);
    CHECK(back[0].auc == a.auc);
    CHECK(back[0].pooled_auc == a.pooled_auc);
    CHECK(back[0].m.f1 == a.m.f1);
    CHECK(back[0].counts == a.counts);
    CHECK(back[1].failed);
    CHECK(back[1].error == b.error);
    CHECK(slurp(dir.file("r.csv")).find("wall_time") == std::string::npos);
  }

  TEST_CASE("best per model") {
    const ResultRecord single[] = {mean_row("dt", "pca", 5, 0.9)};
    CHECK(best_per_model(single).size() == 1);

    const ResultRecord argmax[] = {mean_row("dt", "pca", 10, 0.93), mean_row("dt", "pca", 20, 0.95)};
    CHECK(best_per_model(argmax).front().dims == 20);

    const ResultRecord tie[] = {mean_row("dt", "pca", 20, 0.95), mean_row("dt", "pca", 10, 0.95),
                                mean_row("nb", "pca", 1, 0.5)};
    const auto best = best_per_model(tie);
    REQUIRE(best.size() == 2);
    CHECK(best[0].dims == 10);
    CHECK(best[1].model == "nb");

    auto fold_row = mean_row("dt", "pca", 30, 0.99);
    fold_row.fold = "0";
    auto failed = mean_row("dt", "pca", 40, 0.999);
    failed.failed = true;
    const ResultRecord mixed[] = {fold_row, failed, mean_row("dt", "pca", 2, 0.7)};
    CHECK(best_per_model(mixed).front().dims == 2);
  }
}

TEST_SUITE("fit_fold") {
  TEST_CASE("statistics come from training rows only") {
    const auto data = testutil::blobs(60, 4, 0.5, 2.0, 1);
    std::vector<Index> train, test;
    for (Index i = 0; i < 60; ++i) (i % 4 == 0 ? test : train).push_back(i);
    const TrainSettings ae{2, 16, 1e-2};

    auto poisoned = data;
    for (Index i : test) poisoned.values.row(i).setConstant(1e6);

    for (auto fe : {FeMethod::full, FeMethod::pca, FeMethod::lda, FeMethod::ae}) {
      CAPTURE(to_string(fe));
      const auto clean = fit_fold(data, train, test, fe, 2, ae, 5, false);
      const auto dirty = fit_fold(poisoned, train, test, fe, 2, ae, 5, false);
      CHECK(clean.scaler.min == dirty.scaler.min);
      CHECK(clean.scaler.max == dirty.scaler.max);
      CHECK(clean.train.values == dirty.train.values);
      CHECK(clean.train.rows() == static_cast<Index>(train.size()));
      CHECK(clean.test.rows() == static_cast<Index>(test.size()));
    }

    const auto fold = fit_fold(data, train, test, FeMethod::pca, 2, ae, 5, false);
    const auto train_only = data.select_rows(train);
    CHECK(fold.scaler.min == Vector(train_only.values.colwise().minCoeff().transpose()));
    const auto& pca = std::get<PcaModel>(fold.extractor);
    const Vector scaled_mean = apply_scaler(train_only, fold.scaler).values.colwise().mean().transpose();
    CHECK((pca.mean - scaled_mean).cwiseAbs().maxCoeff() < 1e-12);

    const auto global = fit_fold(poisoned, train, test, FeMethod::full, 2, ae, 5, true);
    CHECK(global.scaler.max.maxCoeff() == 1e6);
  }
}

TEST_SUITE("run") {
  TEST_CASE("separable data with a tree on all features") {
    testutil::TempDir dir("run-full");
    auto c = small_config(dir.path());
    const auto data = testutil::blobs(300, 5, 0.3, 6.0, 2);
    const auto out = run(c, "blobs", data);
    REQUIRE(out.records.size() == 4);
    const auto& mean = out.records.back();
    CHECK(mean.is_mean());
    CHECK(mean.dims == 5);
    CHECK(mean.auc > 0.95);
    CHECK(mean.counts.total() == 300);
    CHECK(mean.pooled_auc.has_value());
    for (const char* f : {"results.csv", "timings.csv", "summary.txt", "manifest.json", "cells/blobs_dt_full_5.csv",
                          "roc/blobs_dt_full_5.csv", "variance/blobs_pca.csv", "sweeps/blobs_dt_full.csv",
                          "summary/cross_dataset.csv"}) {
      CHECK_MESSAGE(fs::exists(dir.path() / f), f);
    }
  }

  TEST_CASE("record counting, sweeps and summary") {
    testutil::TempDir dir("run-count");
    auto c = small_config(dir.path());
    c.fe_methods = {FeMethod::pca};
    c.dimensions = {1, 2};
    c.models = {ClassifierKind::nb};
    const auto data = testutil::blobs(150, 4, 0.4, 2.0, 3);
    const auto out = run(c, "blobs", data);
    std::size_t means = 0;
    for (const auto& r : out.records) means += r.is_mean();
    CHECK(means == 2);
    CHECK(out.records.size() == 2 * (3 + 1));

    CHECK(line_count(dir.path() / "results.csv") == out.records.size() + 1);
    const auto summary = slurp(dir.path() / "summary.txt");
    CHECK(summary.find(fmt::format("Result rows: {}", out.records.size())) != std::string::npos);
    CHECK(summary.find("%") != std::string::npos);

    const auto sweep = slurp(dir.path() / "sweeps/blobs_nb_pca.csv");
    CHECK(sweep.rfind("dims,auc\n1,", 0) == 0);
    CHECK(sweep.find("\n2,") != std::string::npos);
    CHECK(line_count(dir.path() / "sweeps/blobs_nb_pca.csv") == 3);

    std::ifstream var(dir.path() / "variance/blobs_pca.csv");
    std::string line;
    std::getline(var, line);
    while (std::getline(var, line)) CHECK(std::stod(line.substr(line.find(',') + 1)) >= 0.0);
  }

  TEST_CASE("identical output across reruns and job counts") {
    testutil::TempDir a("run-a"), b("run-b");
    auto c = small_config(a.path());
    c.fe_methods = {FeMethod::full, FeMethod::pca, FeMethod::ae};
    c.dimensions = {1, 3};
    c.models = {ClassifierKind::dff, ClassifierKind::dt, ClassifierKind::lr};
    const auto data = testutil::blobs(200, 6, 0.3, 2.0, 4);
    run(c, "blobs", data);
    c.output_dir = b.path().string();
    c.jobs = 3;
    run(c, "blobs", data);
    CHECK(slurp(a.path() / "results.csv") == slurp(b.path() / "results.csv"));
  }

  TEST_CASE("resume reproduces an uninterrupted run") {
    testutil::TempDir dir("run-resume");
    auto c = small_config(dir.path());
    c.fe_methods = {FeMethod::pca, FeMethod::lda};
    c.dimensions = {1, 2, 3};
    c.models = {ClassifierKind::nb, ClassifierKind::dt};
    const auto data = testutil::blobs(200, 5, 0.3, 2.0, 5);
    run(c, "blobs", data);
    const auto reference = slurp(dir.path() / "results.csv");

    int removed = 0;
    for (const auto& entry : fs::directory_iterator(dir.path() / "cells")) {
      if (removed++ % 2 == 0) fs::remove(entry.path());
    }
    fs::remove(dir.path() / "results.csv");
    const auto resumed = run(c, "blobs", data);
    CHECK(resumed.resumed_cells == 8 - static_cast<std::size_t>((removed + 1) / 2));
    CHECK(slurp(dir.path() / "results.csv") == reference);

    c.seed = 12;
    CHECK_THROWS_AS(run(c, "blobs", data), Error);
  }

  TEST_CASE("a failing cell leaves one failure row and the sweep continues") {
    testutil::TempDir dir("run-fail");
    auto c = small_config(dir.path());
    c.folds = 2;
    c.fe_methods = {FeMethod::pca};
    c.dimensions = {1, 4};
    c.models = {ClassifierKind::nb};
    Matrix x(6, 5);
    x << 0, 1, 2, 3, 4, 1, 0, 2, 1, 3, 2, 2, 0, 1, 1, 5, 4, 3, 2, 1, 4, 5, 2, 3, 1, 6, 4, 5, 3, 2;
    const auto out = run(c, "tiny", testutil::make_fm(x, {0, 0, 0, 1, 1, 1}));
    const auto& last = out.records.back();
    CHECK(last.failed);
    CHECK(last.is_mean());
    CHECK(last.dims == 4);
    CHECK_FALSE(last.error.empty());
    std::size_t rows_for_dims4 = 0;
    for (const auto& r : out.records) rows_for_dims4 += r.dims == 4;
    CHECK(rows_for_dims4 == 1);
    CHECK_FALSE(out.records.front().failed);
    CHECK(slurp(dir.path() / "summary.txt").find("Failed") != std::string::npos);
  }

  TEST_CASE("from a config file on synthetic flows") {
    testutil::TempDir dir("run-config");
    SynthSpec spec;
    spec.rows = 400;
    synth_generate(spec, 6, dir.file("flows.csv"));
    {
      std::ofstream cfg(dir.file("exp.yaml"));
      cfg << "version: 1\ndataset: {path: flows.csv, schema: synthetic}\nfe: [lda]\nmodels: [nb]\nfolds: 3\n"
             "output_dir: out\nsvg: false\n";
    }
    const auto out = run(load_config(dir.file("exp.yaml")));
    CHECK(out.records.size() == 4);
    CHECK(out.records.back().dataset == "flows");
    CHECK(fs::exists(dir.path() / "out" / "per_attack.csv"));
    CHECK(fs::exists(dir.path() / "out" / "variance" / "flows_lda.csv"));
    CHECK_FALSE(read_per_attack_csv(dir.path() / "out" / "per_attack.csv").empty());
  }
}

TEST_SUITE("report") {
  TEST_CASE("summary formatting") {
    auto r = mean_row("dt", "full", 40, 0.95623);
    r.m.acc = 0.98333;
    const ResultRecord rows[] = {r};
    const auto text = render_summary(rows, {});
    CHECK(text.find("98.33%") != std::string::npos);
    CHECK(text.find("0.9562") != std::string::npos);
    CHECK(text.find("Result rows: 1") != std::string::npos);
    CHECK(text.find("Actual") == std::string::npos);

    std::map<std::string, AttackBreakdown> attacks{{"ds_dt_full_40", {{"dos", {10, 9, 0.9}}}}};
    CHECK(render_summary(rows, attacks).find("90.00%") != std::string::npos);
  }

  TEST_CASE("merging run directories") {
    testutil::TempDir a("rep-a"), b("rep-b"), out("rep-out");
    auto c = small_config(a.path());
    c.models = {ClassifierKind::nb};
    run(c, "first", testutil::blobs(120, 3, 0.4, 2.0, 7));
    c.output_dir = b.path().string();
    run(c, "second", testutil::blobs(120, 3, 0.4, 2.0, 8));
    const auto text = report({a.path(), b.path()}, out.path());
    CHECK(text.find("first") != std::string::npos);
    CHECK(text.find("second") != std::string::npos);
    CHECK(fs::exists(out.path() / "summary.txt"));
    CHECK(line_count(out.path() / "summary" / "cross_dataset.csv") == 3);
  }
}
