#pragma once

#include "flowbench/common.hpp"
#include "flowbench/nn.hpp"

#include <vector>

namespace flowbench {

/// Dense autoencoder d -> 30 -> 20 -> 10 -> k -> 10 -> 20 -> 30 -> d.
/// Hidden and bottleneck layers use relu; the reconstruction layer is
/// sigmoid so that binary cross-entropy against [0,1] inputs is well posed.
struct AeModel {
  nn::NetParams encoder;
  nn::NetParams decoder;
  int bottleneck = 0;
  double reconstruction_loss = 0.0;  // infer-mode BCE on the training rows
  std::vector<double> epoch_loss;

  Index input_dim() const { return encoder.input_width(); }
};

inline constexpr int kAeHidden[] = {30, 20, 10};

nn::NetSpec autoencoder_spec(int input_dim, int bottleneck);

/// Inputs must already be min-max scaled (values within [-1e-9, 1 + 1e-9]).
AeModel ae_fit(const Matrix& train, int bottleneck, const nn::TrainConfig& config);
AeModel ae_fit(const FeatureMatrix& train, int bottleneck, const nn::TrainConfig& config);

Matrix ae_encode(const Matrix& m, const AeModel& model);
FeatureMatrix ae_encode(const FeatureMatrix& m, const AeModel& model);
Matrix ae_reconstruct(const Matrix& m, const AeModel& model);

}  // namespace flowbench
