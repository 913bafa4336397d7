#include "flowbench/nn.hpp"

#include "flowbench/serialize.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace flowbench::nn {

std::string to_string(LayerKind kind) {
  switch (kind) {
    case LayerKind::dense: return "dense";
    case LayerKind::conv1d: return "conv1d";
    case LayerKind::avgpool1d: return "avgpool1d";
    case LayerKind::lstm: return "lstm";
    case LayerKind::dropout: return "dropout";
    case LayerKind::flatten: return "flatten";
  }
  return "?";
}

std::string to_string(Activation activation) {
  switch (activation) {
    case Activation::linear: return "linear";
    case Activation::relu: return "relu";
    case Activation::sigmoid: return "sigmoid";
  }
  return "?";
}

namespace {

LayerKind parse_kind(const std::string& s) {
  for (auto k : {LayerKind::dense, LayerKind::conv1d, LayerKind::avgpool1d, LayerKind::lstm,
                 LayerKind::dropout, LayerKind::flatten}) {
    if (to_string(k) == s) return k;
  }
  throw Error(fmt::format("unknown layer kind '{}'", s));
}

Activation parse_activation(const std::string& s) {
  for (auto a : {Activation::linear, Activation::relu, Activation::sigmoid}) {
    if (to_string(a) == s) return a;
  }
  throw Error(fmt::format("unknown activation '{}'", s));
}

}  // namespace

LayerSpec LayerSpec::dense(int units, Activation activation) {
  LayerSpec s;
  s.kind = LayerKind::dense;
  s.units = units;
  s.activation = activation;
  return s;
}

LayerSpec LayerSpec::conv1d(int filters, int kernel_size, Activation activation) {
  LayerSpec s;
  s.kind = LayerKind::conv1d;
  s.units = filters;
  s.kernel_size = kernel_size;
  s.activation = activation;
  return s;
}

LayerSpec LayerSpec::avgpool1d(int pool_size) {
  LayerSpec s;
  s.kind = LayerKind::avgpool1d;
  s.pool_size = pool_size;
  return s;
}

LayerSpec LayerSpec::lstm(int units) {
  LayerSpec s;
  s.kind = LayerKind::lstm;
  s.units = units;
  return s;
}

LayerSpec LayerSpec::dropout(double rate) {
  LayerSpec s;
  s.kind = LayerKind::dropout;
  s.dropout_rate = rate;
  return s;
}

LayerSpec LayerSpec::flatten() {
  LayerSpec s;
  s.kind = LayerKind::flatten;
  return s;
}

std::vector<Shape> propagate_shapes(const NetSpec& spec) {
  if (spec.input.steps < 1 || spec.input.channels < 1) throw Error("network input shape must be positive");
  std::vector<Shape> shapes;
  Shape cur = spec.input;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    if (l.units < 1 || l.kernel_size < 1 || l.pool_size < 1) {
      throw Error(fmt::format("layer {}: units, kernel and pool sizes must be >= 1", i));
    }
    switch (l.kind) {
      case LayerKind::dense:
        if (cur.steps != 1) throw Error(fmt::format("layer {}: dense needs a flat input, got {} steps", i, cur.steps));
        cur = {1, l.units};
        break;
      case LayerKind::conv1d:
        if (cur.steps < l.kernel_size) {
          throw Error(fmt::format("layer {}: kernel {} longer than sequence {}", i, l.kernel_size, cur.steps));
        }
        cur = {cur.steps - l.kernel_size + 1, l.units};
        break;
      case LayerKind::avgpool1d:
        if (cur.steps < l.pool_size) {
          throw Error(fmt::format("layer {}: pool {} longer than sequence {}", i, l.pool_size, cur.steps));
        }
        cur = {cur.steps / l.pool_size, cur.channels};
        break;
      case LayerKind::lstm:
        cur = {1, l.units};
        break;
      case LayerKind::dropout:
        if (!(l.dropout_rate >= 0.0 && l.dropout_rate < 1.0)) {
          throw Error(fmt::format("layer {}: dropout rate {} outside [0, 1)", i, l.dropout_rate));
        }
        break;
      case LayerKind::flatten:
        cur = {1, cur.width()};
        break;
    }
    shapes.push_back(cur);
  }
  return shapes;
}

Shape output_shape(const NetSpec& spec) {
  const auto shapes = propagate_shapes(spec);
  return shapes.empty() ? spec.input : shapes.back();
}

std::size_t NetParams::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : layers) {
    for (const auto& m : t) n += static_cast<std::size_t>(m.size());
  }
  return n;
}

std::size_t Gradients::parameter_count() const {
  std::size_t n = 0;
  for (const auto& t : layers) {
    for (const auto& m : t) n += static_cast<std::size_t>(m.size());
  }
  return n;
}

namespace {

Matrix glorot(Index fan_in, Index fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  Matrix w(fan_in, fan_out);
  for (Index c = 0; c < w.cols(); ++c) {
    for (Index r = 0; r < w.rows(); ++r) w(r, c) = (2.0 * uniform01(rng) - 1.0) * limit;
  }
  return w;
}

Shape input_shape_of(const NetSpec& spec, const std::vector<Shape>& shapes, std::size_t layer) {
  return layer == 0 ? spec.input : shapes[layer - 1];
}

}  // namespace

NetParams init_params(const NetSpec& spec, std::uint64_t seed) {
  const auto shapes = propagate_shapes(spec);
  Rng rng(seed);
  NetParams p;
  p.spec = spec;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    const Shape in = input_shape_of(spec, shapes, i);
    Tensors t;
    switch (l.kind) {
      case LayerKind::dense:
        t.push_back(glorot(in.width(), l.units, rng));
        t.push_back(Matrix::Zero(1, l.units));
        break;
      case LayerKind::conv1d:
        // Keras-style fans: receptive field times channels.
        t.push_back(glorot(Index{l.kernel_size} * in.channels, l.units, rng));
        t.push_back(Matrix::Zero(1, l.units));
        break;
      case LayerKind::lstm: {
        t.push_back(glorot(in.channels, 4 * l.units, rng));
        t.push_back(glorot(l.units, 4 * l.units, rng));
        Matrix b = Matrix::Zero(1, 4 * l.units);
        b.middleCols(l.units, l.units).setOnes();
        t.push_back(std::move(b));
        break;
      }
      default:
        break;
    }
    p.layers.push_back(std::move(t));
  }
  return p;
}

namespace {

double sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Matrix activate(const Matrix& pre, Activation a) {
  switch (a) {
    case Activation::linear: return pre;
    case Activation::relu: return pre.cwiseMax(0.0);
    case Activation::sigmoid: return pre.unaryExpr([](double x) { return sigmoid(x); });
  }
  return pre;
}

// dL/dpre given dL/dout.
Matrix activation_backward(const Matrix& grad_out, const Matrix& pre, const Matrix& out, Activation a) {
  switch (a) {
    case Activation::linear: return grad_out;
    case Activation::relu: return grad_out.cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
    case Activation::sigmoid:
      return grad_out.cwiseProduct(out.cwiseProduct((1.0 - out.array()).matrix()));
  }
  return grad_out;
}

void check_params(const NetParams& params) {
  if (params.layers.size() != params.spec.layers.size()) {
    throw Error("network parameters do not match the layer list");
  }
}

Matrix dense_forward(const Matrix& x, const Tensors& t) {
  return (x * t[0]).rowwise() + t[1].row(0);
}

Matrix conv_forward(const Matrix& x, const Tensors& t, const Shape& in, const LayerSpec& l) {
  const int out_steps = in.steps - l.kernel_size + 1;
  const Index window = Index{l.kernel_size} * in.channels;
  Matrix out(x.rows(), Index{out_steps} * l.units);
  for (int s = 0; s < out_steps; ++s) {
    out.middleCols(Index{s} * l.units, l.units) =
        (x.middleCols(Index{s} * in.channels, window) * t[0]).rowwise() + t[1].row(0);
  }
  return out;
}

Matrix pool_forward(const Matrix& x, const Shape& in, const LayerSpec& l) {
  const int out_steps = in.steps / l.pool_size;
  Matrix out = Matrix::Zero(x.rows(), Index{out_steps} * in.channels);
  const double inv = 1.0 / l.pool_size;
  for (int s = 0; s < out_steps; ++s) {
    for (int j = 0; j < l.pool_size; ++j) {
      out.middleCols(Index{s} * in.channels, in.channels) +=
          x.middleCols(Index{s * l.pool_size + j} * in.channels, in.channels) * inv;
    }
  }
  return out;
}

Matrix lstm_forward(const Matrix& x, const Tensors& t, const Shape& in, int units, std::vector<LstmStep>* steps) {
  const Index n = x.rows();
  const Index u = units;
  Matrix h = Matrix::Zero(n, u);
  Matrix c = Matrix::Zero(n, u);
  auto sig = [](const Matrix& m) { return Matrix(m.unaryExpr([](double v) { return sigmoid(v); })); };
  for (int s = 0; s < in.steps; ++s) {
    LstmStep st;
    st.x = x.middleCols(Index{s} * in.channels, in.channels);
    Matrix z = (st.x * t[0] + h * t[1]).rowwise() + t[2].row(0);
    st.i = sig(z.middleCols(0, u));
    st.f = sig(z.middleCols(u, u));
    st.g = z.middleCols(2 * u, u).array().tanh().matrix();
    st.o = sig(z.middleCols(3 * u, u));
    st.c_prev = c;
    st.h_prev = h;
    c = st.f.cwiseProduct(c) + st.i.cwiseProduct(st.g);
    st.c = c;
    st.tanh_c = c.array().tanh().matrix();
    h = st.o.cwiseProduct(st.tanh_c);
    if (steps) steps->push_back(std::move(st));
  }
  return h;
}

Matrix run(const NetParams& params, const Matrix& batch, Mode mode, Rng* rng, ForwardCache* cache) {
  check_params(params);
  const auto& spec = params.spec;
  if (batch.cols() != spec.input.width()) {
    throw Error(fmt::format("batch has {} columns, network expects {}", batch.cols(), spec.input.width()));
  }
  const auto shapes = propagate_shapes(spec);
  if (cache) {
    cache->mode = mode;
    cache->rows = batch.rows();
    cache->layers.clear();
    cache->layers.reserve(spec.layers.size());
  }
  Matrix x = batch;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& l = spec.layers[i];
    const Shape in = input_shape_of(spec, shapes, i);
    const auto& t = params.layers[i];
    LayerCache lc;
    Matrix out;
    switch (l.kind) {
      case LayerKind::dense:
      case LayerKind::conv1d: {
        Matrix pre = l.kind == LayerKind::dense ? dense_forward(x, t) : conv_forward(x, t, in, l);
        out = activate(pre, l.activation);
        if (cache) lc.pre = std::move(pre);
        break;
      }
      case LayerKind::avgpool1d:
        out = pool_forward(x, in, l);
        break;
      case LayerKind::lstm:
        out = lstm_forward(x, t, in, l.units, cache ? &lc.steps : nullptr);
        break;
      case LayerKind::dropout:
        if (mode == Mode::train && l.dropout_rate > 0.0) {
          if (!rng) throw Error("train-mode forward with dropout needs a random generator");
          const double keep = 1.0 - l.dropout_rate;
          Matrix mask(x.rows(), x.cols());
          for (Index c = 0; c < mask.cols(); ++c) {
            for (Index r = 0; r < mask.rows(); ++r) mask(r, c) = uniform01(*rng) < keep ? 1.0 / keep : 0.0;
          }
          out = x.cwiseProduct(mask);
          if (cache) lc.mask = std::move(mask);
        } else {
          out = x;
        }
        break;
      case LayerKind::flatten:
        out = x;
        break;
    }
    if (cache) {
      lc.input = std::move(x);
      lc.output = out;
      cache->layers.push_back(std::move(lc));
    }
    x = std::move(out);
  }
  return x;
}

}  // namespace

ForwardResult forward(const NetParams& params, const Matrix& batch, Mode mode, Rng* rng) {
  ForwardResult r;
  r.output = run(params, batch, mode, rng, &r.cache);
  return r;
}

Matrix predict(const NetParams& params, const Matrix& batch) {
  constexpr Index kChunk = 8192;
  if (batch.rows() <= kChunk) return run(params, batch, Mode::infer, nullptr, nullptr);
  const Index width = output_shape(params.spec).width();
  Matrix out(batch.rows(), width);
  for (Index start = 0; start < batch.rows(); start += kChunk) {
    const Index len = std::min(kChunk, batch.rows() - start);
    out.middleRows(start, len) = run(params, batch.middleRows(start, len), Mode::infer, nullptr, nullptr);
  }
  return out;
}

Vector predict_proba(const NetParams& params, const Matrix& batch) {
  Matrix out = predict(params, batch);
  if (out.cols() != 1) throw Error(fmt::format("network has {} outputs, expected 1", out.cols()));
  return out.col(0);
}

double bce_loss(const Matrix& probabilities, const Matrix& targets, const Vector& row_weights) {
  if (probabilities.rows() != targets.rows() || probabilities.cols() != targets.cols() ||
      row_weights.size() != probabilities.rows()) {
    throw Error("bce_loss: shape mismatch");
  }
  if (probabilities.size() == 0) return 0.0;
  double total = 0.0;
  for (Index r = 0; r < probabilities.rows(); ++r) {
    double row = 0.0;
    for (Index c = 0; c < probabilities.cols(); ++c) {
      const double p = std::clamp(probabilities(r, c), kProbabilityClamp, 1.0 - kProbabilityClamp);
      const double y = targets(r, c);
      row -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
    }
    total += row_weights(r) * row;
  }
  return total / static_cast<double>(probabilities.size());
}

namespace {

Matrix label_targets(std::span<const int> labels) {
  Matrix t(static_cast<Index>(labels.size()), 1);
  for (std::size_t i = 0; i < labels.size(); ++i) t(static_cast<Index>(i), 0) = labels[i];
  return t;
}

Vector label_weights(std::span<const int> labels, const ClassWeights& w) {
  Vector v(static_cast<Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) v(static_cast<Index>(i)) = w(labels[i]);
  return v;
}

}  // namespace

double bce_loss(const Vector& probabilities, std::span<const int> labels, const ClassWeights& weights) {
  if (probabilities.size() != static_cast<Index>(labels.size())) throw Error("bce_loss: length mismatch");
  return bce_loss(Matrix(probabilities), label_targets(labels), label_weights(labels, weights));
}

Gradients backward(const NetParams& params, const ForwardCache& cache, const Matrix& targets,
                   const Vector& row_weights) {
  check_params(params);
  const auto& spec = params.spec;
  if (cache.layers.size() != spec.layers.size() || cache.layers.empty()) {
    throw Error("backward: cache does not belong to this network");
  }
  if (targets.rows() != cache.rows || row_weights.size() != cache.rows) {
    throw Error("backward: targets do not match the cached batch");
  }
  const auto& last = spec.layers.back();
  if (last.activation != Activation::sigmoid ||
      (last.kind != LayerKind::dense && last.kind != LayerKind::conv1d)) {
    throw Error("backward: the last layer must be dense or conv1d with a sigmoid activation");
  }
  const Matrix& p = cache.layers.back().output;
  if (p.cols() != targets.cols()) throw Error("backward: target width mismatch");

  const auto shapes = propagate_shapes(spec);
  Gradients grads;
  grads.layers.resize(spec.layers.size());

  // Sigmoid + cross-entropy: dL/dpre = w * (p - y) / (n * m).
  const double scale = 1.0 / static_cast<double>(p.size());
  Matrix delta = ((p - targets).array().colwise() * row_weights.array()).matrix() * scale;
  bool delta_is_pre = true;

  for (std::size_t ii = spec.layers.size(); ii-- > 0;) {
    const auto& l = spec.layers[ii];
    const auto& lc = cache.layers[ii];
    const auto& t = params.layers[ii];
    const Shape in = input_shape_of(spec, shapes, ii);
    auto& g = grads.layers[ii];
    if (lc.input.rows() != cache.rows) throw Error("backward: stale cache");
    Matrix grad_in;
    switch (l.kind) {
      case LayerKind::dense: {
        Matrix dpre = delta_is_pre ? delta : activation_backward(delta, lc.pre, lc.output, l.activation);
        g.push_back(lc.input.transpose() * dpre);
        g.push_back(dpre.colwise().sum());
        grad_in = dpre * t[0].transpose();
        break;
      }
      case LayerKind::conv1d: {
        Matrix dpre = delta_is_pre ? delta : activation_backward(delta, lc.pre, lc.output, l.activation);
        const int out_steps = in.steps - l.kernel_size + 1;
        const Index window = Index{l.kernel_size} * in.channels;
        Matrix dw = Matrix::Zero(t[0].rows(), t[0].cols());
        Matrix db = Matrix::Zero(1, l.units);
        grad_in = Matrix::Zero(lc.input.rows(), lc.input.cols());
        for (int s = 0; s < out_steps; ++s) {
          const auto d = dpre.middleCols(Index{s} * l.units, l.units);
          dw.noalias() += lc.input.middleCols(Index{s} * in.channels, window).transpose() * d;
          db += d.colwise().sum();
          grad_in.middleCols(Index{s} * in.channels, window).noalias() += d * t[0].transpose();
        }
        g.push_back(std::move(dw));
        g.push_back(std::move(db));
        break;
      }
      case LayerKind::avgpool1d: {
        const int out_steps = in.steps / l.pool_size;
        grad_in = Matrix::Zero(lc.input.rows(), lc.input.cols());
        const double inv = 1.0 / l.pool_size;
        for (int s = 0; s < out_steps; ++s) {
          for (int j = 0; j < l.pool_size; ++j) {
            grad_in.middleCols(Index{s * l.pool_size + j} * in.channels, in.channels) =
                delta.middleCols(Index{s} * in.channels, in.channels) * inv;
          }
        }
        break;
      }
      case LayerKind::lstm: {
        const Index u = l.units;
        Matrix dwx = Matrix::Zero(t[0].rows(), t[0].cols());
        Matrix dwh = Matrix::Zero(t[1].rows(), t[1].cols());
        Matrix db = Matrix::Zero(1, 4 * u);
        grad_in = Matrix::Zero(lc.input.rows(), lc.input.cols());
        Matrix dh = delta;
        Matrix dc = Matrix::Zero(dh.rows(), u);
        Matrix dz(dh.rows(), 4 * u);
        for (int s = in.steps; s-- > 0;) {
          const auto& st = lc.steps[static_cast<std::size_t>(s)];
          const Matrix d_o = dh.cwiseProduct(st.tanh_c);
          dc += dh.cwiseProduct(st.o).cwiseProduct((1.0 - st.tanh_c.array().square()).matrix());
          const Matrix d_i = dc.cwiseProduct(st.g);
          const Matrix d_g = dc.cwiseProduct(st.i);
          const Matrix d_f = dc.cwiseProduct(st.c_prev);
          dz.middleCols(0, u) = d_i.cwiseProduct((st.i.array() * (1.0 - st.i.array())).matrix());
          dz.middleCols(u, u) = d_f.cwiseProduct((st.f.array() * (1.0 - st.f.array())).matrix());
          dz.middleCols(2 * u, u) = d_g.cwiseProduct((1.0 - st.g.array().square()).matrix());
          dz.middleCols(3 * u, u) = d_o.cwiseProduct((st.o.array() * (1.0 - st.o.array())).matrix());
          dwx.noalias() += st.x.transpose() * dz;
          dwh.noalias() += st.h_prev.transpose() * dz;
          db += dz.colwise().sum();
          grad_in.middleCols(Index{s} * in.channels, in.channels) = dz * t[0].transpose();
          dh = dz * t[1].transpose();
          dc = dc.cwiseProduct(st.f);
        }
        g.push_back(std::move(dwx));
        g.push_back(std::move(dwh));
        g.push_back(std::move(db));
        break;
      }
      case LayerKind::dropout:
        grad_in = lc.mask.size() == 0 ? delta : delta.cwiseProduct(lc.mask);
        break;
      case LayerKind::flatten:
        grad_in = delta;
        break;
    }
    delta = std::move(grad_in);
    delta_is_pre = false;
  }
  return grads;
}

Gradients backward(const NetParams& params, const ForwardCache& cache, std::span<const int> labels,
                   const ClassWeights& weights) {
  return backward(params, cache, label_targets(labels), label_weights(labels, weights));
}

AdamState AdamState::zeros_like(const NetParams& params, AdamConfig config) {
  AdamState s;
  s.config = config;
  for (const auto& t : params.layers) {
    Tensors z;
    for (const auto& m : t) z.push_back(Matrix::Zero(m.rows(), m.cols()));
    s.m.push_back(z);
    s.v.push_back(std::move(z));
  }
  return s;
}

void adam_step(NetParams& params, const Gradients& grads, AdamState& state) {
  if (grads.layers.size() != params.layers.size() || state.m.size() != params.layers.size()) {
    throw Error("adam_step: gradient/state layout does not match parameters");
  }
  ++state.t;
  const auto& cfg = state.config;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));
  for (std::size_t i = 0; i < params.layers.size(); ++i) {
    auto& p = params.layers[i];
    if (grads.layers[i].size() != p.size()) throw Error("adam_step: tensor count mismatch");
    for (std::size_t j = 0; j < p.size(); ++j) {
      const auto& g = grads.layers[i][j];
      auto& m = state.m[i][j];
      auto& v = state.v[i][j];
      if (g.rows() != p[j].rows() || g.cols() != p[j].cols()) throw Error("adam_step: tensor shape mismatch");
      m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
      v = cfg.beta2 * v + (1.0 - cfg.beta2) * g.cwiseAbs2();
      p[j].array() -= cfg.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + cfg.epsilon);
    }
  }
}

void TrainConfig::validate() const {
  if (epochs < 1) throw Error(fmt::format("epochs must be >= 1, got {}", epochs));
  if (batch_size < 1) throw Error(fmt::format("batch_size must be >= 1, got {}", batch_size));
  if (!(learning_rate > 0.0)) throw Error("learning_rate must be positive");
}

TrainResult train(const NetSpec& spec, const Matrix& inputs, const Matrix& targets, const Vector& row_weights,
                  const TrainConfig& config) {
  config.validate();
  const Index n = inputs.rows();
  if (n == 0) throw Error("train: empty data");
  if (targets.rows() != n || row_weights.size() != n) throw Error("train: inputs/targets/weights disagree");

  TrainResult result;
  result.params = init_params(spec, config.seed);
  Rng rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  AdamState adam = AdamState::zeros_like(result.params, AdamConfig{config.learning_rate});

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  const Index batch = config.batch_size;
  const Index batches = (n + batch - 1) / batch;

  Matrix xb, tb;
  Vector wb;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    if (config.shuffle) std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (Index b = 0; b < batches; ++b) {
      const Index start = b * batch;
      const Index len = std::min(batch, n - start);
      xb.resize(len, inputs.cols());
      tb.resize(len, targets.cols());
      wb.resize(len);
      for (Index r = 0; r < len; ++r) {
        const Index src = order[static_cast<std::size_t>(start + r)];
        xb.row(r) = inputs.row(src);
        tb.row(r) = targets.row(src);
        wb(r) = row_weights(src);
      }
      auto fwd = forward(result.params, xb, Mode::train, &rng);
      const double loss = bce_loss(fwd.output, tb, wb);
      if (!std::isfinite(loss)) {
        throw Error(fmt::format("non-finite loss at epoch {} batch {}", epoch, b));
      }
      epoch_loss += loss * static_cast<double>(len);
      const Gradients grads = backward(result.params, fwd.cache, tb, wb);
      adam_step(result.params, grads, adam);
      ++result.steps;
    }
    result.epoch_loss.push_back(epoch_loss / static_cast<double>(n));
  }
  return result;
}

TrainResult train(const NetSpec& spec, const FeatureMatrix& data, const TrainConfig& config) {
  if (data.count_label(0) == 0 || data.count_label(1) == 0) throw Error("train: both classes must be present");
  const ClassWeights w = config.class_weights.value_or(ClassWeights{});
  return train(spec, data.values, label_targets(data.labels), label_weights(data.labels, w), config);
}

NetParams slice(const NetParams& params, std::size_t first, std::size_t last) {
  check_params(params);
  if (first >= last || last > params.spec.layers.size()) throw Error("slice: invalid layer range");
  const auto shapes = propagate_shapes(params.spec);
  NetParams out;
  out.spec.input = input_shape_of(params.spec, shapes, first);
  for (std::size_t i = first; i < last; ++i) {
    out.spec.layers.push_back(params.spec.layers[i]);
    out.layers.push_back(params.layers[i]);
  }
  return out;
}

void save_params(std::ostream& out, const NetParams& params) {
  check_params(params);
  out << "flowbench-net 1\n";
  out << "input " << params.spec.input.steps << ' ' << params.spec.input.channels << '\n';
  out << "layers " << params.spec.layers.size() << '\n';
  for (std::size_t i = 0; i < params.spec.layers.size(); ++i) {
    const auto& l = params.spec.layers[i];
    out << "layer " << to_string(l.kind) << ' ' << l.units << ' ' << l.kernel_size << ' ' << l.pool_size << ' '
        << to_string(l.activation) << ' ';
    io::write_double(out, l.dropout_rate);
    out << '\n' << "tensors " << params.layers[i].size() << '\n';
    for (const auto& m : params.layers[i]) io::write_matrix(out, m);
  }
  out << "end\n";
}

NetParams load_params(std::istream& in) {
  io::TokenReader r(in);
  r.expect("flowbench-net");
  if (r.next_int() != 1) throw Error("unsupported network format version");
  NetParams p;
  r.expect("input");
  p.spec.input.steps = static_cast<int>(r.next_int());
  p.spec.input.channels = static_cast<int>(r.next_int());
  r.expect("layers");
  const auto count = r.next_int();
  for (long long i = 0; i < count; ++i) {
    r.expect("layer");
    LayerSpec l;
    l.kind = parse_kind(r.next());
    l.units = static_cast<int>(r.next_int());
    l.kernel_size = static_cast<int>(r.next_int());
    l.pool_size = static_cast<int>(r.next_int());
    l.activation = parse_activation(r.next());
    l.dropout_rate = r.next_double();
    p.spec.layers.push_back(l);
    r.expect("tensors");
    const auto nt = r.next_int();
    Tensors t;
    for (long long j = 0; j < nt; ++j) t.push_back(r.next_matrix());
    p.layers.push_back(std::move(t));
  }
  r.expect("end");
  // Validate shapes against a fresh initialisation.
  const NetParams reference = init_params(p.spec, 0);
  for (std::size_t i = 0; i < p.layers.size(); ++i) {
    if (p.layers[i].size() != reference.layers[i].size()) throw Error("model file: tensor count mismatch");
    for (std::size_t j = 0; j < p.layers[i].size(); ++j) {
      if (p.layers[i][j].rows() != reference.layers[i][j].rows() ||
          p.layers[i][j].cols() != reference.layers[i][j].cols()) {
        throw Error(fmt::format("model file: tensor {}/{} has the wrong shape", i, j));
      }
    }
  }
  return p;
}

}  // namespace flowbench::nn
