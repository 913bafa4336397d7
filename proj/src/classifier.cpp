#include "flowbench/classifier.hpp"

#include "flowbench/serialize.hpp"

#include <fmt/format.h>

namespace flowbench {

using nn::Activation;
using nn::LayerSpec;

std::string to_string(ClassifierKind kind) {
  switch (kind) {
    case ClassifierKind::dff: return "dff";
    case ClassifierKind::cnn: return "cnn";
    case ClassifierKind::rnn: return "rnn";
    case ClassifierKind::dt: return "dt";
    case ClassifierKind::lr: return "lr";
    case ClassifierKind::nb: return "nb";
  }
  return "?";
}

ClassifierKind parse_classifier_kind(std::string_view name) {
  for (auto k : {ClassifierKind::dff, ClassifierKind::cnn, ClassifierKind::rnn, ClassifierKind::dt,
                 ClassifierKind::lr, ClassifierKind::nb}) {
    if (to_string(k) == name) return k;
  }
  throw Error(fmt::format("unknown model '{}'", name));
}

bool is_deep(ClassifierKind kind) {
  return kind == ClassifierKind::dff || kind == ClassifierKind::cnn || kind == ClassifierKind::rnn;
}

void ClassifierSpec::validate() const {
  if (input_dim < 1) throw Error(fmt::format("{}: input_dim must be >= 1", to_string(kind)));
  if (is_deep(kind)) {
    if (net.input.width() != input_dim) throw Error("classifier network input does not match input_dim");
    const auto out = nn::output_shape(net);
    if (out.width() != 1 || net.layers.empty() || net.layers.back().activation != Activation::sigmoid) {
      throw Error("classifier network must end in a single sigmoid unit");
    }
  }
  if (kind == ClassifierKind::lr && (!(lr.c > 0.0) || lr.max_iterations < 1 || lr.history < 1)) {
    throw Error("invalid logistic-regression options");
  }
  if (kind == ClassifierKind::nb && var_smoothing < 0.0) throw Error("var_smoothing must be >= 0");
}

namespace {

void require_dim(int input_dim) {
  if (input_dim < 1) throw Error(fmt::format("input_dim {} must be >= 1", input_dim));
}

}  // namespace

ClassifierSpec build_dff(int input_dim, DropoutPlacement dropout) {
  require_dim(input_dim);
  ClassifierSpec s;
  s.kind = ClassifierKind::dff;
  s.input_dim = input_dim;
  s.net.input = {1, input_dim};
  for (int i = 0; i < 3; ++i) {
    s.net.layers.push_back(LayerSpec::dense(20, Activation::relu));
    if (dropout == DropoutPlacement::after_each_hidden) s.net.layers.push_back(LayerSpec::dropout(kDropoutRate));
  }
  if (dropout == DropoutPlacement::before_output) s.net.layers.push_back(LayerSpec::dropout(kDropoutRate));
  s.net.layers.push_back(LayerSpec::dense(1, Activation::sigmoid));
  s.validate();
  return s;
}

ClassifierSpec build_cnn(int input_dim) {
  require_dim(input_dim);
  ClassifierSpec s;
  s.kind = ClassifierKind::cnn;
  s.input_dim = input_dim;
  s.net.input = {input_dim, 1};
  auto& l = s.net.layers;
  if (input_dim >= 10) {
    l.push_back(LayerSpec::conv1d(20, 3, Activation::relu));
    l.push_back(LayerSpec::avgpool1d(2));
    l.push_back(LayerSpec::conv1d(20, 2, Activation::relu));
    l.push_back(LayerSpec::avgpool1d(2));
    l.push_back(LayerSpec::conv1d(20, 1, Activation::relu));
  } else {
    l.push_back(LayerSpec::conv1d(20, 1, Activation::relu));
    if (input_dim >= 2) l.push_back(LayerSpec::avgpool1d(2));
  }
  l.push_back(LayerSpec::dropout(kDropoutRate));
  l.push_back(LayerSpec::flatten());
  l.push_back(LayerSpec::dense(1, Activation::sigmoid));
  s.validate();
  return s;
}

ClassifierSpec build_rnn(int input_dim) {
  require_dim(input_dim);
  ClassifierSpec s;
  s.kind = ClassifierKind::rnn;
  s.input_dim = input_dim;
  s.net.input = {1, input_dim};
  s.net.layers = {LayerSpec::lstm(input_dim), LayerSpec::dense(10, Activation::relu),
                  LayerSpec::dropout(kDropoutRate), LayerSpec::dense(1, Activation::sigmoid)};
  s.validate();
  return s;
}

ClassifierSpec make_classifier(ClassifierKind kind, int input_dim) {
  switch (kind) {
    case ClassifierKind::dff: return build_dff(input_dim);
    case ClassifierKind::cnn: return build_cnn(input_dim);
    case ClassifierKind::rnn: return build_rnn(input_dim);
    default: break;
  }
  require_dim(input_dim);
  ClassifierSpec s;
  s.kind = kind;
  s.input_dim = input_dim;
  s.validate();
  return s;
}

FittedClassifier fit_classifier(const ClassifierSpec& spec, const FeatureMatrix& train,
                                const nn::TrainConfig& config) {
  spec.validate();
  if (train.cols() != spec.input_dim) {
    throw Error(fmt::format("{}: training data has {} features, spec expects {}", to_string(spec.kind), train.cols(),
                            spec.input_dim));
  }
  FittedClassifier fitted;
  fitted.kind = spec.kind;
  std::optional<ClassWeights> shallow_weights;
  if (spec.weight_shallow) shallow_weights = config.class_weights.value_or(class_weights(train.labels));
  switch (spec.kind) {
    case ClassifierKind::dff:
    case ClassifierKind::cnn:
    case ClassifierKind::rnn: {
      nn::TrainConfig cfg = config;
      if (!cfg.class_weights) cfg.class_weights = class_weights(train.labels);
      fitted.model = nn::train(spec.net, train, cfg).params;
      break;
    }
    case ClassifierKind::dt: fitted.model = dt_fit(train, shallow_weights); break;
    case ClassifierKind::lr: fitted.model = lr_fit(train, shallow_weights, spec.lr); break;
    case ClassifierKind::nb: fitted.model = gnb_fit(train, spec.var_smoothing); break;
  }
  return fitted;
}

Vector score(const FittedClassifier& model, const Matrix& m) {
  return std::visit(
      [&](const auto& fitted) -> Vector {
        using T = std::decay_t<decltype(fitted)>;
        if constexpr (std::is_same_v<T, nn::NetParams>) {
          return nn::predict_proba(fitted, m);
        } else if constexpr (std::is_same_v<T, DecisionTree>) {
          return dt_score(fitted, m);
        } else if constexpr (std::is_same_v<T, LrModel>) {
          return lr_score(fitted, m);
        } else {
          return gnb_score(fitted, m);
        }
      },
      model.model);
}

Vector fit_predict(const ClassifierSpec& spec, const FeatureMatrix& train, const FeatureMatrix& test,
                   const nn::TrainConfig& config) {
  if (train.cols() != test.cols()) {
    throw Error(fmt::format("train has {} features, test has {}", train.cols(), test.cols()));
  }
  return score(fit_classifier(spec, train, config), test.values);
}

void save_classifier(std::ostream& out, const FittedClassifier& model) {
  out << "flowbench-classifier 1 " << to_string(model.kind) << '\n';
  std::visit(
      [&](const auto& fitted) {
        using T = std::decay_t<decltype(fitted)>;
        if constexpr (std::is_same_v<T, nn::NetParams>) {
          nn::save_params(out, fitted);
        } else if constexpr (std::is_same_v<T, DecisionTree>) {
          save_tree(out, fitted);
        } else if constexpr (std::is_same_v<T, LrModel>) {
          save_lr(out, fitted);
        } else {
          save_gnb(out, fitted);
        }
      },
      model.model);
}

FittedClassifier load_classifier(std::istream& in) {
  io::TokenReader r(in);
  r.expect("flowbench-classifier");
  if (r.next_int() != 1) throw Error("unsupported classifier format version");
  FittedClassifier m;
  m.kind = parse_classifier_kind(r.next());
  switch (m.kind) {
    case ClassifierKind::dff:
    case ClassifierKind::cnn:
    case ClassifierKind::rnn: m.model = nn::load_params(in); break;
    case ClassifierKind::dt: m.model = load_tree(in); break;
    case ClassifierKind::lr: m.model = load_lr(in); break;
    case ClassifierKind::nb: m.model = load_gnb(in); break;
  }
  return m;
}

}  // namespace flowbench
