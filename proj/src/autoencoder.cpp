#include "flowbench/autoencoder.hpp"

#include <fmt/format.h>

namespace flowbench {

nn::NetSpec autoencoder_spec(int input_dim, int bottleneck) {
  if (input_dim < 1) throw Error("autoencoder: input_dim must be >= 1");
  if (bottleneck < 1) throw Error(fmt::format("autoencoder: bottleneck {} must be >= 1", bottleneck));
  using nn::Activation;
  using nn::LayerSpec;
  nn::NetSpec spec;
  spec.input = {1, input_dim};
  for (int width : kAeHidden) spec.layers.push_back(LayerSpec::dense(width, Activation::relu));
  spec.layers.push_back(LayerSpec::dense(bottleneck, Activation::relu));
  for (auto it = std::rbegin(kAeHidden); it != std::rend(kAeHidden); ++it) {
    spec.layers.push_back(LayerSpec::dense(*it, Activation::relu));
  }
  spec.layers.push_back(LayerSpec::dense(input_dim, Activation::sigmoid));
  return spec;
}

AeModel ae_fit(const Matrix& train, int bottleneck, const nn::TrainConfig& config) {
  if (train.rows() == 0) throw Error("ae_fit: empty training data");
  if (train.size() > 0 && (train.minCoeff() < -1e-9 || train.maxCoeff() > 1.0 + 1e-9)) {
    throw Error("ae_fit: inputs must be scaled to [0, 1]");
  }
  const auto spec = autoencoder_spec(static_cast<int>(train.cols()), bottleneck);
  nn::TrainConfig cfg = config;
  cfg.class_weights.reset();
  auto result = nn::train(spec, train, train, Vector::Ones(train.rows()), cfg);

  const std::size_t encoder_layers = std::size(kAeHidden) + 1;
  AeModel model;
  model.bottleneck = bottleneck;
  model.encoder = nn::slice(result.params, 0, encoder_layers);
  model.decoder = nn::slice(result.params, encoder_layers, result.params.layers.size());
  model.epoch_loss = std::move(result.epoch_loss);
  model.reconstruction_loss = nn::bce_loss(ae_reconstruct(train, model), train, Vector::Ones(train.rows()));
  return model;
}

AeModel ae_fit(const FeatureMatrix& train, int bottleneck, const nn::TrainConfig& config) {
  return ae_fit(train.values, bottleneck, config);
}

Matrix ae_encode(const Matrix& m, const AeModel& model) {
  if (m.cols() != model.input_dim()) {
    throw Error(fmt::format("ae_encode: {} columns, model expects {}", m.cols(), model.input_dim()));
  }
  return nn::predict(model.encoder, m);
}

FeatureMatrix ae_encode(const FeatureMatrix& m, const AeModel& model) {
  return m.with_values(ae_encode(m.values, model), numbered_names("ae", model.bottleneck));
}

Matrix ae_reconstruct(const Matrix& m, const AeModel& model) {
  return nn::predict(model.decoder, ae_encode(m, model));
}

}  // namespace flowbench
