#include "flowbench/experiment.hpp"

#include <fmt/format.h>
#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace flowbench {

namespace {

void check_keys(const YAML::Node& node, const std::set<std::string>& allowed, std::string_view where) {
  if (!node.IsMap()) throw Error(fmt::format("config: '{}' must be a mapping", where));
  for (const auto& kv : node) {
    const auto key = kv.first.as<std::string>();
    if (!allowed.contains(key)) throw Error(fmt::format("config: unknown key '{}' in {}", key, where));
  }
}

template <typename T>
T scalar(const YAML::Node& node, std::string_view key) {
  try {
    return node.as<T>();
  } catch (const YAML::Exception&) {
    throw Error(fmt::format("config: invalid value for '{}'", key));
  }
}

TrainSettings parse_train(const YAML::Node& node, std::string_view where, TrainSettings base) {
  check_keys(node, {"epochs", "batch_size", "learning_rate"}, where);
  if (node["epochs"]) base.epochs = scalar<int>(node["epochs"], "epochs");
  if (node["batch_size"]) base.batch_size = scalar<int>(node["batch_size"], "batch_size");
  if (node["learning_rate"]) base.learning_rate = scalar<double>(node["learning_rate"], "learning_rate");
  return base;
}

template <typename T, typename Parse>
std::vector<T> parse_list(const YAML::Node& node, std::string_view key, Parse parse) {
  if (!node.IsSequence()) throw Error(fmt::format("config: '{}' must be a list", key));
  std::vector<T> out;
  for (const auto& item : node) out.push_back(parse(scalar<std::string>(item, key)));
  return out;
}

void validate_train(const TrainSettings& t, std::string_view where) {
  if (t.epochs < 1 || t.batch_size < 1 || !(t.learning_rate > 0.0)) {
    throw Error(fmt::format("config: {} needs epochs >= 1, batch_size >= 1, learning_rate > 0", where));
  }
}

}  // namespace

void ExperimentConfig::validate() const {
  if (version != kConfigVersion) throw Error(fmt::format("config: unsupported version {}", version));
  if (dataset_path.empty()) throw Error("config: dataset path is required");
  if (schema_name.empty()) throw Error("config: dataset schema is required");
  if (fe_methods.empty()) throw Error("config: fe list is empty");
  if (models.empty()) throw Error("config: models list is empty");
  if (folds < 2) throw Error(fmt::format("config: folds must be >= 2, got {}", folds));
  for (int d : dimensions) {
    if (d < 1) throw Error(fmt::format("config: dimension {} must be >= 1", d));
  }
  const bool needs_dims = std::any_of(fe_methods.begin(), fe_methods.end(),
                                      [](FeMethod f) { return f == FeMethod::pca || f == FeMethod::ae; });
  if (needs_dims && dimensions.empty()) throw Error("config: dims list is empty");
  if (subsample && *subsample < 2) throw Error("config: subsample must be >= 2");
  validate_train(train, "train");
  validate_train(autoencoder, "autoencoder");
  if (!(threshold >= 0.0 && threshold <= 1.0)) throw Error("config: threshold must lie in [0, 1]");
  if (jobs < 1) throw Error("config: jobs must be >= 1");
}

ExperimentConfig parse_config(const std::string& yaml_text, const std::filesystem::path& base_dir) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw Error(fmt::format("config: {}", e.what()));
  }
  check_keys(root,
             {"version", "dataset", "fe", "dims", "models", "folds", "seed", "subsample", "train", "autoencoder",
              "dff_dropout", "weight_shallow", "threshold", "output_dir", "fit_global", "jobs", "svg"},
             "config");
  ExperimentConfig c;
  if (!root["version"]) throw Error("config: missing 'version'");
  c.version = scalar<int>(root["version"], "version");

  const auto ds = root["dataset"];
  if (!ds) throw Error("config: missing 'dataset'");
  check_keys(ds, {"path", "schema", "name"}, "dataset");
  if (!ds["path"] || !ds["schema"]) throw Error("config: dataset needs 'path' and 'schema'");
  std::filesystem::path path = scalar<std::string>(ds["path"], "path");
  if (path.is_relative() && !base_dir.empty()) path = base_dir / path;
  c.dataset_path = path.string();
  c.schema_name = scalar<std::string>(ds["schema"], "schema");
  const auto names = builtin_schema_names();
  const bool builtin = std::find(names.begin(), names.end(), c.schema_name) != names.end();
  if (!builtin && std::filesystem::path(c.schema_name).is_relative() && !base_dir.empty()) {
    c.schema_name = (base_dir / c.schema_name).string();
  }
  c.dataset_name = ds["name"] ? scalar<std::string>(ds["name"], "name") : path.stem().string();

  if (root["fe"]) c.fe_methods = parse_list<FeMethod>(root["fe"], "fe", parse_fe_method);
  if (root["models"]) c.models = parse_list<ClassifierKind>(root["models"], "models", parse_classifier_kind);
  if (root["dims"]) {
    if (!root["dims"].IsSequence()) throw Error("config: 'dims' must be a list");
    c.dimensions.clear();
    for (const auto& d : root["dims"]) c.dimensions.push_back(scalar<int>(d, "dims"));
  }
  if (root["folds"]) c.folds = scalar<int>(root["folds"], "folds");
  if (root["seed"]) c.seed = scalar<std::uint64_t>(root["seed"], "seed");
  if (root["subsample"] && !root["subsample"].IsNull()) {
    c.subsample = scalar<std::size_t>(root["subsample"], "subsample");
  }
  if (root["train"]) c.train = parse_train(root["train"], "train", c.train);
  c.autoencoder = c.train;
  if (root["autoencoder"]) c.autoencoder = parse_train(root["autoencoder"], "autoencoder", c.autoencoder);
  if (root["dff_dropout"]) {
    const auto v = scalar<std::string>(root["dff_dropout"], "dff_dropout");
    if (v == "before_output") {
      c.dff_dropout = DropoutPlacement::before_output;
    } else if (v == "after_each_hidden") {
      c.dff_dropout = DropoutPlacement::after_each_hidden;
    } else {
      throw Error(fmt::format("config: dff_dropout must be before_output or after_each_hidden, got '{}'", v));
    }
  }
  if (root["weight_shallow"]) c.weight_shallow = scalar<bool>(root["weight_shallow"], "weight_shallow");
  if (root["threshold"]) c.threshold = scalar<double>(root["threshold"], "threshold");
  if (root["output_dir"]) {
    std::filesystem::path out = scalar<std::string>(root["output_dir"], "output_dir");
    if (out.is_relative() && !base_dir.empty()) out = base_dir / out;
    c.output_dir = out.string();
  }
  if (root["fit_global"]) c.fit_global = scalar<bool>(root["fit_global"], "fit_global");
  if (root["jobs"]) c.jobs = scalar<int>(root["jobs"], "jobs");
  if (root["svg"]) c.svg = scalar<bool>(root["svg"], "svg");
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(fmt::format("cannot open config '{}'", path));
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), std::filesystem::path(path).parent_path());
}

}  // namespace flowbench
