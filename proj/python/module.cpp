#include "flowbench/experiment.hpp"
#include "flowbench/report.hpp"
#include "flowbench/schema.hpp"
#include "flowbench/synth.hpp"

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace flowbench;

namespace {

FeatureMatrix make_matrix(const Matrix& x, const std::vector<int>& y, const std::vector<std::string>& attack_types) {
  FeatureMatrix m;
  m.values = x;
  m.labels = y;
  m.attack_types = attack_types;
  m.feature_names = numbered_names("f", x.cols());
  m.validate();
  return m;
}

nn::TrainConfig train_config(int epochs, int batch_size, double learning_rate, std::uint64_t seed) {
  nn::TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = batch_size;
  cfg.learning_rate = learning_rate;
  cfg.seed = seed;
  cfg.validate();
  return cfg;
}

py::dict record_dict(const ResultRecord& r) {
  py::dict d;
  d["dataset"] = r.dataset;
  d["model"] = r.model;
  d["fe"] = r.fe;
  d["dims"] = r.dims;
  d["fold"] = r.fold;
  d["failed"] = r.failed;
  d["error"] = r.error;
  d["acc"] = r.m.acc;
  d["f1"] = r.m.f1;
  d["dr"] = r.m.dr;
  d["far"] = r.m.far;
  d["precision"] = r.m.precision;
  d["auc"] = r.auc;
  d["pooled_auc"] = r.pooled_auc ? py::cast(*r.pooled_auc) : py::none();
  d["wall_time_seconds"] = r.wall_time_seconds;
  return d;
}

}  // namespace

PYBIND11_MODULE(_flowbench, m) {
  m.doc() = "Flow-based intrusion detection benchmark: preprocessing, feature extraction, classifiers, evaluation";

  py::register_exception<Error>(m, "FlowbenchError", PyExc_ValueError);

  m.def("builtin_schemas", &builtin_schema_names);

  m.def(
      "synth",
      [](const std::string& path, std::uint64_t seed, std::size_t rows, double imbalance, int informative, int noise,
         double separation) {
        SynthSpec spec;
        spec.rows = rows;
        spec.imbalance = imbalance;
        spec.informative = informative;
        spec.noise = noise;
        spec.separation = separation;
        spec.validate();
        const auto s = synth_generate(spec, seed, path);
        return py::dict(py::arg("rows") = s.rows, py::arg("class0") = s.class0, py::arg("class1") = s.class1,
                        py::arg("duplicates") = s.duplicates, py::arg("dirty_cells") = s.dirty_cells);
      },
      py::arg("path"), py::arg("seed") = 0, py::arg("rows") = 1000, py::arg("imbalance") = 0.9,
      py::arg("informative") = 3, py::arg("noise") = 7, py::arg("separation") = 2.0,
      "Write a synthetic flow CSV readable with the 'synthetic' schema.");

  m.def(
      "load_dataset",
      [](const std::string& path, const std::string& schema) {
        auto prepared = prepare_file(path, resolve_schema(schema));
        return py::dict(py::arg("X") = prepared.data.values, py::arg("y") = prepared.data.labels,
                        py::arg("feature_names") = prepared.data.feature_names,
                        py::arg("attack_types") = prepared.data.attack_types,
                        py::arg("duplicates_removed") = prepared.duplicates_removed);
      },
      py::arg("path"), py::arg("schema"),
      "Read a CSV, drop identifiers, deduplicate, encode categoricals and clean values (unscaled).");

  m.def(
      "minmax_scale",
      [](const Matrix& train, const Matrix& other) {
        const auto scaler = fit_scaler(make_matrix(train, std::vector<int>(train.rows(), 0), {}));
        const auto apply = [&](const Matrix& x) {
          return apply_scaler(make_matrix(x, std::vector<int>(x.rows(), 0), {}), scaler).values;
        };
        return py::make_tuple(apply(train), apply(other));
      },
      py::arg("train"), py::arg("other"), "Fit min-max scaling on train and apply it to both matrices.");

  m.def(
      "stratified_kfold",
      [](const std::vector<int>& labels, int k, std::uint64_t seed) { return stratified_kfold(labels, k, seed).assignments; },
      py::arg("labels"), py::arg("k") = 5, py::arg("seed") = 0, "Fold index of every row.");

  m.def(
      "class_weights",
      [](const std::vector<int>& labels) {
        const auto w = class_weights(labels);
        return py::make_tuple(w.w0, w.w1);
      },
      py::arg("labels"));

  py::class_<PcaModel>(m, "PcaModel")
      .def_readonly("mean", &PcaModel::mean)
      .def_readonly("components", &PcaModel::components)
      .def_readonly("singular_values", &PcaModel::singular_values)
      .def_readonly("explained_variance", &PcaModel::explained_variance)
      .def_readonly("total_variance", &PcaModel::total_variance)
      .def("transform", [](const PcaModel& p, const Matrix& x) { return pca_transform(x, p); });
  m.def("pca_fit", py::overload_cast<const Matrix&, Index>(&pca_fit), py::arg("X"), py::arg("k"));

  py::class_<LdaModel>(m, "LdaModel")
      .def_readonly("projection", &LdaModel::projection)
      .def_readonly("zero_separation", &LdaModel::zero_separation)
      .def("transform", [](const LdaModel& l, const Matrix& x) { return lda_project(x, l); });
  m.def(
      "lda_fit", [](const Matrix& x, const std::vector<int>& y, double ridge) { return lda_fit(make_matrix(x, y, {}), ridge); },
      py::arg("X"), py::arg("y"), py::arg("ridge") = kLdaRidge);

  py::class_<AeModel>(m, "AeModel")
      .def_readonly("bottleneck", &AeModel::bottleneck)
      .def_readonly("epoch_loss", &AeModel::epoch_loss)
      .def("transform", [](const AeModel& a, const Matrix& x) { return ae_encode(x, a); })
      .def("reconstruct", [](const AeModel& a, const Matrix& x) { return ae_reconstruct(x, a); });
  m.def(
      "ae_fit",
      [](const Matrix& x, int k, int epochs, int batch_size, double learning_rate, std::uint64_t seed) {
        return ae_fit(x, k, train_config(epochs, batch_size, learning_rate, seed));
      },
      py::arg("X"), py::arg("k"), py::arg("epochs") = 20, py::arg("batch_size") = 256,
      py::arg("learning_rate") = 1e-3, py::arg("seed") = 0, "Autoencoder on [0, 1]-scaled data.");

  m.def(
      "fit_predict",
      [](const std::string& model, const Matrix& x_train, const std::vector<int>& y_train, const Matrix& x_test,
         int epochs, int batch_size, double learning_rate, std::uint64_t seed) {
        const auto train = make_matrix(x_train, y_train, {});
        const auto test = make_matrix(x_test, std::vector<int>(x_test.rows(), 0), {});
        const auto spec = make_classifier(parse_classifier_kind(model), static_cast<int>(x_train.cols()));
        py::gil_scoped_release release;
        return fit_predict(spec, train, test, train_config(epochs, batch_size, learning_rate, seed));
      },
      py::arg("model"), py::arg("X_train"), py::arg("y_train"), py::arg("X_test"), py::arg("epochs") = 20,
      py::arg("batch_size") = 256, py::arg("learning_rate") = 1e-3, py::arg("seed") = 0,
      "Train one of dff, cnn, rnn, dt, lr, nb and return class-1 probabilities for X_test.");

  m.def(
      "evaluate",
      [](const Vector& p, const std::vector<int>& y, const std::vector<std::string>& attack_types, double threshold) {
        const auto r = evaluate(p, y, attack_types, threshold);
        py::dict d;
        d["tp"] = r.counts.tp;
        d["tn"] = r.counts.tn;
        d["fp"] = r.counts.fp;
        d["fn"] = r.counts.fn;
        d["acc"] = r.m.acc;
        d["precision"] = r.m.precision;
        d["dr"] = r.m.dr;
        d["far"] = r.m.far;
        d["f1"] = r.m.f1;
        d["auc"] = r.auc;
        std::vector<std::pair<double, double>> roc;
        for (const auto& pt : r.roc.points) roc.emplace_back(pt.far, pt.dr);
        d["roc"] = roc;
        if (r.per_attack) {
          py::dict pa;
          for (const auto& [name, e] : *r.per_attack) pa[py::str(name)] = py::make_tuple(e.actual, e.detected, e.dr);
          d["per_attack"] = pa;
        }
        return d;
      },
      py::arg("probabilities"), py::arg("labels"), py::arg("attack_types") = std::vector<std::string>{},
      py::arg("threshold") = kDefaultThreshold);

  m.def(
      "roc_auc", [](const Vector& p, const std::vector<int>& y) { return roc_auc(p, y).auc; }, py::arg("probabilities"),
      py::arg("labels"));

  m.def(
      "run_experiment",
      [](const std::string& config_path, std::optional<std::string> out_dir, std::optional<std::uint64_t> seed,
         std::optional<int> jobs) {
        auto config = load_config(config_path);
        if (out_dir) config.output_dir = *out_dir;
        if (seed) config.seed = *seed;
        if (jobs) config.jobs = *jobs;
        config.validate();
        RunOutput out;
        {
          py::gil_scoped_release release;
          out = run(config);
        }
        py::list records;
        for (const auto& r : out.records) records.append(record_dict(r));
        return records;
      },
      py::arg("config"), py::arg("out_dir") = py::none(), py::arg("seed") = py::none(), py::arg("jobs") = py::none(),
      "Run a sweep from a YAML config; returns one dict per result row.");

  m.def(
      "report",
      [](const std::vector<std::filesystem::path>& dirs, const std::filesystem::path& out) { return report(dirs, out); },
      py::arg("run_dirs"), py::arg("out_dir"));
}
