#pragma once

// Small reverse-mode neural network core: dense, 1-D convolution, average
// pooling, LSTM, dropout and flatten layers trained with weighted binary
// cross-entropy and adam.
//
// Activations of a batch are stored as an (n x steps*channels) matrix with
// column index t*channels + c, so a convolution window over steps
// [t, t+k) is a contiguous block of k*channels columns.

#include "flowbench/common.hpp"
#include "flowbench/split.hpp"

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace flowbench::nn {

enum class LayerKind { dense, conv1d, avgpool1d, lstm, dropout, flatten };
enum class Activation { linear, relu, sigmoid };

std::string to_string(LayerKind kind);
std::string to_string(Activation activation);

struct LayerSpec {
  LayerKind kind = LayerKind::dense;
  int units = 1;  // dense/lstm units, conv1d filters
  int kernel_size = 1;
  int pool_size = 1;
  Activation activation = Activation::linear;
  double dropout_rate = 0.0;

  static LayerSpec dense(int units, Activation activation);
  static LayerSpec conv1d(int filters, int kernel_size, Activation activation);
  static LayerSpec avgpool1d(int pool_size);
  static LayerSpec lstm(int units);
  static LayerSpec dropout(double rate);
  static LayerSpec flatten();

  bool operator==(const LayerSpec&) const = default;
};

struct Shape {
  int steps = 1;
  int channels = 1;

  int width() const { return steps * channels; }
  bool operator==(const Shape&) const = default;
};

struct NetSpec {
  Shape input;
  std::vector<LayerSpec> layers;

  bool operator==(const NetSpec&) const = default;
};

/// Output shape of every layer. Throws when the stack does not chain:
/// dense needs a single-step input (use flatten), convolution and pooling
/// need enough steps, and layer parameters must be in range.
std::vector<Shape> propagate_shapes(const NetSpec& spec);
Shape output_shape(const NetSpec& spec);

using Tensors = std::vector<Matrix>;

/// Per-layer parameter tensors.
///   dense:  W (in x units), b (1 x units)
///   conv1d: W (kernel*channels x filters), b (1 x filters)
///   lstm:   Wx (features x 4u), Wh (u x 4u), b (1 x 4u); gate order i, f, g, o
struct NetParams {
  NetSpec spec;
  std::vector<Tensors> layers;

  std::size_t parameter_count() const;
  int input_width() const { return spec.input.width(); }
};

struct Gradients {
  std::vector<Tensors> layers;

  std::size_t parameter_count() const;
};

/// Glorot-uniform weights, zero biases, LSTM forget-gate bias 1.
NetParams init_params(const NetSpec& spec, std::uint64_t seed);

enum class Mode { train, infer };

struct LstmStep {
  Matrix x, h_prev, c_prev, i, f, g, o, c, tanh_c;
};

struct LayerCache {
  Matrix input;
  Matrix pre;     // pre-activation (dense, conv1d)
  Matrix output;  // post-activation
  Matrix mask;    // dropout keep-mask, already scaled by 1/(1-r)
  std::vector<LstmStep> steps;
};

struct ForwardCache {
  Mode mode = Mode::infer;
  Index rows = 0;
  std::vector<LayerCache> layers;
};

struct ForwardResult {
  Matrix output;
  ForwardCache cache;
};

/// Runs the network. Train mode samples dropout masks from `rng` (required
/// when the network has dropout); infer mode treats dropout as identity.
ForwardResult forward(const NetParams& params, const Matrix& batch, Mode mode, Rng* rng = nullptr);

/// Infer-mode output without keeping a cache; processes large inputs in chunks.
Matrix predict(const NetParams& params, const Matrix& batch);

/// Sigmoid outputs as a probability vector for single-output networks.
Vector predict_proba(const NetParams& params, const Matrix& batch);

inline constexpr double kProbabilityClamp = 1e-7;

/// Row-weighted binary cross-entropy averaged over all n*m output cells;
/// probabilities are clamped to [1e-7, 1-1e-7].
double bce_loss(const Matrix& probabilities, const Matrix& targets, const Vector& row_weights);
double bce_loss(const Vector& probabilities, std::span<const int> labels, const ClassWeights& weights);

/// Gradient of bce_loss with respect to every parameter. The last layer must
/// have a sigmoid activation; the cache must come from forward() on the same
/// parameters in train mode or infer mode with matching batch rows.
Gradients backward(const NetParams& params, const ForwardCache& cache, const Matrix& targets,
                   const Vector& row_weights);
Gradients backward(const NetParams& params, const ForwardCache& cache, std::span<const int> labels,
                   const ClassWeights& weights);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<Tensors> m;
  std::vector<Tensors> v;
  long long t = 0;

  static AdamState zeros_like(const NetParams& params, AdamConfig config = {});
};

/// Bias-corrected adam update in place; increments state.t.
void adam_step(NetParams& params, const Gradients& grads, AdamState& state);

struct TrainConfig {
  int epochs = 20;
  int batch_size = 256;
  double learning_rate = 1e-3;
  std::uint64_t seed = 0;
  std::optional<ClassWeights> class_weights;
  bool shuffle = true;

  void validate() const;
};

struct TrainResult {
  NetParams params;
  std::vector<double> epoch_loss;  // sample-weighted mean of train-mode batch losses
  std::size_t steps = 0;
};

/// Mini-batch training; a pure function of (spec, data, config). Throws with
/// the epoch and batch index when the loss turns non-finite.
TrainResult train(const NetSpec& spec, const Matrix& inputs, const Matrix& targets,
                  const Vector& row_weights, const TrainConfig& config);

/// Binary classifier training; row weights come from config.class_weights.
TrainResult train(const NetSpec& spec, const FeatureMatrix& data, const TrainConfig& config);

/// Sub-network made of layers [first, last); parameters are copied.
NetParams slice(const NetParams& params, std::size_t first, std::size_t last);

void save_params(std::ostream& out, const NetParams& params);
NetParams load_params(std::istream& in);

}  // namespace flowbench::nn
