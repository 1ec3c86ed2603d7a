#include "core/neural.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "core/error.hpp"
#include "core/metrics.hpp"

namespace deeppharm {

namespace {

// Uniform double in [0, 1) from the top 53 bits of the engine output.
double unit_uniform(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

void apply_activation(Activation a, Matrix& z) {
  switch (a) {
    case Activation::kTanh:
      z = z.array().tanh().matrix();
      break;
    case Activation::kSigmoid:
      z = (1.0 / (1.0 + (-z.array()).exp())).matrix();
      break;
  }
}

// Derivative of the activation expressed through its output.
Eigen::ArrayXXd activation_slope(Activation a, const Matrix& out) {
  switch (a) {
    case Activation::kTanh: return 1.0 - out.array().square();
    case Activation::kSigmoid: return out.array() * (1.0 - out.array());
  }
  return Eigen::ArrayXXd::Zero(out.rows(), out.cols());
}

std::vector<Matrix> forward_all(const NetworkModel& model, const Matrix& inputs) {
  if (static_cast<std::size_t>(inputs.cols()) != model.spec.input_width()) {
    fail(ErrorCode::kShapeMismatch, "input width " + std::to_string(inputs.cols()) +
                                        " does not match network input " +
                                        std::to_string(model.spec.input_width()));
  }
  std::vector<Matrix> acts;
  acts.reserve(model.layer_count() + 1);
  acts.push_back(inputs);
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    Matrix z = acts.back() * model.weights[l].transpose();
    z.rowwise() += model.biases[l].transpose();
    apply_activation(model.spec.activations[l], z);
    acts.push_back(std::move(z));
  }
  return acts;
}

void check_batch(const NetworkModel& model, const Batch& batch) {
  const auto out = static_cast<Eigen::Index>(model.spec.output_width());
  if (batch.targets.rows() != batch.inputs.rows() || batch.mask.rows() != batch.inputs.rows() ||
      batch.targets.cols() != out || batch.mask.cols() != out) {
    fail(ErrorCode::kShapeMismatch, "batch targets/mask do not match the network output");
  }
}

void check_same_shape(const Matrix& a, const Matrix& b, const Matrix& c) {
  if (a.rows() != b.rows() || a.cols() != b.cols() || a.rows() != c.rows() ||
      a.cols() != c.cols()) {
    fail(ErrorCode::kShapeMismatch, "prediction, label and mask shapes differ");
  }
}

// d(data loss)/d(pred).
Matrix loss_gradient(const Matrix& pred, const Batch& batch, const LossSpec& loss) {
  Matrix g = Matrix::Zero(pred.rows(), pred.cols());
  if (const auto* mt = std::get_if<MultitaskLoss>(&loss)) {
    if (mt->task_weights.size() != static_cast<std::size_t>(pred.cols())) {
      fail(ErrorCode::kShapeMismatch, "task weight count does not match output width");
    }
    for (Eigen::Index t = 0; t < pred.cols(); ++t) {
      const double n = batch.mask.col(t).sum();
      if (n <= 0.0) continue;
      const double w = mt->task_weights[static_cast<std::size_t>(t)] / n;
      g.col(t) = w * ((pred.col(t) - batch.targets.col(t)).array() * batch.mask.col(t).array())
                         .matrix();
    }
  } else {
    const auto& wb = std::get<WeightedBinaryLoss>(loss);
    const double n = batch.mask.sum();
    if (n <= 0.0) return g;
    for (Eigen::Index c = 0; c < pred.cols(); ++c) {
      for (Eigen::Index r = 0; r < pred.rows(); ++r) {
        if (batch.mask(r, c) == 0.0) continue;
        const double w = batch.targets(r, c) == 1.0 ? wb.positive : wb.negative;
        g(r, c) = w * (pred(r, c) - batch.targets(r, c)) / n;
      }
    }
  }
  return g;
}

double data_loss(const Matrix& pred, const Batch& batch, const LossSpec& loss) {
  if (const auto* mt = std::get_if<MultitaskLoss>(&loss)) {
    return multitask_cost(pred, batch.targets, batch.mask, mt->task_weights);
  }
  const auto& wb = std::get<WeightedBinaryLoss>(loss);
  return weighted_binary_cost(pred, batch.targets, batch.mask, wb.positive, wb.negative);
}

}  // namespace

std::string_view activation_name(Activation a) {
  return a == Activation::kTanh ? "tanh" : "sigmoid";
}

Activation activation_from_name(std::string_view name) {
  if (name == "tanh") return Activation::kTanh;
  if (name == "sigmoid") return Activation::kSigmoid;
  fail(ErrorCode::kBadSpec, "unknown activation '" + std::string(name) + "'");
}

LayerSpec LayerSpec::dense(std::vector<std::size_t> sizes) {
  LayerSpec spec;
  spec.sizes = std::move(sizes);
  if (spec.sizes.size() >= 2) {
    spec.activations.assign(spec.sizes.size() - 1, Activation::kTanh);
    spec.activations.back() = Activation::kSigmoid;
  }
  return spec;
}

std::vector<std::size_t> feature_stack(std::size_t top, std::size_t bottom, std::size_t step) {
  std::vector<std::size_t> sizes;
  for (std::size_t w = top; w >= bottom && w > 0; w -= step) {
    sizes.push_back(w);
    if (step == 0 || w < step) break;
  }
  return sizes;
}

void validate_spec(const LayerSpec& spec) {
  if (spec.sizes.size() < 2) fail(ErrorCode::kBadSpec, "a network needs at least two layer sizes");
  if (spec.activations.size() != spec.sizes.size() - 1) {
    fail(ErrorCode::kBadSpec, "one activation per weight layer is required");
  }
  for (std::size_t s : spec.sizes) {
    if (s == 0) fail(ErrorCode::kBadSpec, "layer sizes must be at least 1");
  }
}

std::size_t NetworkModel::parameter_count() const {
  std::size_t n = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    n += static_cast<std::size_t>(weights[l].size() + biases[l].size());
  }
  return n;
}

void reset_adam(NetworkModel& model) {
  auto& a = model.adam;
  a.step = 0;
  a.m_weights.clear();
  a.v_weights.clear();
  a.m_biases.clear();
  a.v_biases.clear();
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    a.m_weights.push_back(Matrix::Zero(model.weights[l].rows(), model.weights[l].cols()));
    a.v_weights.push_back(Matrix::Zero(model.weights[l].rows(), model.weights[l].cols()));
    a.m_biases.push_back(Vector::Zero(model.biases[l].size()));
    a.v_biases.push_back(Vector::Zero(model.biases[l].size()));
  }
}

NetworkModel init_network(const LayerSpec& spec, std::uint64_t seed, const AdamConfig& adam) {
  validate_spec(spec);
  NetworkModel model;
  model.spec = spec;
  model.rng_seed = seed;
  model.adam.config = adam;
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < spec.layer_count(); ++l) {
    const auto fan_in = static_cast<Eigen::Index>(spec.sizes[l]);
    const auto fan_out = static_cast<Eigen::Index>(spec.sizes[l + 1]);
    const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    Matrix w(fan_out, fan_in);
    for (Eigen::Index r = 0; r < fan_out; ++r) {
      for (Eigen::Index c = 0; c < fan_in; ++c) w(r, c) = (2.0 * unit_uniform(rng) - 1.0) * limit;
    }
    model.weights.push_back(std::move(w));
    model.biases.push_back(Vector::Zero(fan_out));
  }
  reset_adam(model);
  return model;
}

Matrix forward(const NetworkModel& model, const Matrix& inputs) {
  return std::move(forward_all(model, inputs).back());
}

double multitask_cost(const Matrix& pred, const Matrix& label, const Matrix& mask,
                      std::span<const double> task_weights) {
  check_same_shape(pred, label, mask);
  if (task_weights.size() != static_cast<std::size_t>(pred.cols())) {
    fail(ErrorCode::kShapeMismatch, "task weight count does not match output width");
  }
  double cost = 0.0;
  for (Eigen::Index t = 0; t < pred.cols(); ++t) {
    double sum = 0.0;
    double n = 0.0;
    for (Eigen::Index r = 0; r < pred.rows(); ++r) {
      if (mask(r, t) == 0.0) continue;
      const double d = pred(r, t) - label(r, t);
      sum += d * d / 2.0;
      n += 1.0;
    }
    if (n > 0.0) cost += task_weights[static_cast<std::size_t>(t)] * (sum / n);
  }
  return cost;
}

double weighted_binary_cost(const Matrix& pred, const Matrix& label, const Matrix& mask,
                            double positive, double negative) {
  check_same_shape(pred, label, mask);
  double sum = 0.0;
  double n = 0.0;
  for (Eigen::Index c = 0; c < pred.cols(); ++c) {
    for (Eigen::Index r = 0; r < pred.rows(); ++r) {
      if (mask(r, c) == 0.0) continue;
      const double l = label(r, c);
      if (l != 0.0 && l != 1.0) fail(ErrorCode::kNonBinaryLabel, "binary labels must be 0 or 1");
      const double d = pred(r, c) - l;
      sum += (l == 1.0 ? positive : negative) * d * d / 2.0;
      n += 1.0;
    }
  }
  return n > 0.0 ? sum / n : 0.0;
}

double weighted_binary_cost(std::span<const double> pred, std::span<const double> label,
                            double positive, double negative) {
  if (pred.size() != label.size()) fail(ErrorCode::kShapeMismatch, "length mismatch");
  const auto n = static_cast<Eigen::Index>(pred.size());
  Matrix p(n, 1), l(n, 1);
  for (Eigen::Index i = 0; i < n; ++i) {
    p(i, 0) = pred[static_cast<std::size_t>(i)];
    l(i, 0) = label[static_cast<std::size_t>(i)];
  }
  return weighted_binary_cost(p, l, Matrix::Ones(n, 1), positive, negative);
}

std::string_view loss_tag(const LossSpec& loss) {
  return std::holds_alternative<MultitaskLoss>(loss) ? "multitask" : "weighted_binary";
}

double objective(const NetworkModel& model, const Batch& batch, const LossSpec& loss) {
  check_batch(model, batch);
  const Matrix pred = forward(model, batch.inputs);
  double l2 = 0.0;
  for (const auto& w : model.weights) l2 += w.squaredNorm();
  return data_loss(pred, batch, loss) + 0.5 * model.adam.config.lambda * l2;
}

namespace {

Gradients backward_from(const NetworkModel& model, const std::vector<Matrix>& acts,
                        const Batch& batch, const LossSpec& loss) {
  const std::size_t layers = model.layer_count();
  Gradients g;
  g.weights.resize(layers);
  g.biases.resize(layers);
  Matrix delta = loss_gradient(acts.back(), batch, loss);
  for (std::size_t l = layers; l-- > 0;) {
    delta = (delta.array() * activation_slope(model.spec.activations[l], acts[l + 1])).matrix();
    g.weights[l] = delta.transpose() * acts[l] + model.adam.config.lambda * model.weights[l];
    g.biases[l] = delta.colwise().sum().transpose();
    if (l > 0) delta = delta * model.weights[l];
  }
  return g;
}

}  // namespace

Gradients backward(const NetworkModel& model, const Batch& batch, const LossSpec& loss) {
  check_batch(model, batch);
  return backward_from(model, forward_all(model, batch.inputs), batch, loss);
}

void adam_step(NetworkModel& model, const Gradients& grads) {
  if (grads.weights.size() != model.layer_count() || grads.biases.size() != model.layer_count()) {
    fail(ErrorCode::kShapeMismatch, "gradient layer count does not match the model");
  }
  auto& a = model.adam;
  if (a.m_weights.size() != model.layer_count()) reset_adam(model);
  const AdamConfig& c = a.config;
  a.step += 1;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(a.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(a.step));
  auto update = [&](auto& param, auto& m, auto& v, const auto& g) {
    if (param.rows() != g.rows() || param.cols() != g.cols()) {
      fail(ErrorCode::kShapeMismatch, "gradient shape does not match parameter");
    }
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g.cwiseProduct(g);
    param.array() -= c.learning_rate * (m.array() / bc1) / ((v.array() / bc2).sqrt() + c.eps);
  };
  for (std::size_t l = model.frozen_layers; l < model.layer_count(); ++l) {
    update(model.weights[l], a.m_weights[l], a.v_weights[l], grads.weights[l]);
    update(model.biases[l], a.m_biases[l], a.v_biases[l], grads.biases[l]);
  }
}

DenseBatchSource::DenseBatchSource(Batch data) : data_(std::move(data)) {
  if (data_.targets.rows() != data_.inputs.rows() || data_.mask.rows() != data_.inputs.rows() ||
      data_.mask.cols() != data_.targets.cols()) {
    fail(ErrorCode::kShapeMismatch, "inconsistent dense training data");
  }
}

void DenseBatchSource::fill(std::span<const std::size_t> rows, Batch& out) const {
  const auto n = static_cast<Eigen::Index>(rows.size());
  out.inputs.resize(n, data_.inputs.cols());
  out.targets.resize(n, data_.targets.cols());
  out.mask.resize(n, data_.mask.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)]);
    out.inputs.row(i) = data_.inputs.row(r);
    out.targets.row(i) = data_.targets.row(r);
    out.mask.row(i) = data_.mask.row(r);
  }
}

TrainingHistory train(NetworkModel& model, const BatchSource& data, const TrainConfig& cfg,
                      const Batch* validation) {
  const std::size_t n = data.size();
  if (n == 0) fail(ErrorCode::kEmptyTrainingSet, "no training rows");
  model.adam.config = cfg.adam;
  if (cfg.freeze_layers) model.frozen_layers = std::min(*cfg.freeze_layers, model.layer_count());
  model.loss_tag = std::string(loss_tag(cfg.loss));
  if (const auto* mt = std::get_if<MultitaskLoss>(&cfg.loss)) {
    if (mt->task_weights.size() != model.spec.output_width()) {
      fail(ErrorCode::kShapeMismatch, "task weight count does not match output width");
    }
  }

  const std::size_t batch = cfg.batch_size == 0 ? n : std::min(cfg.batch_size, n);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(cfg.seed);
  TrainingHistory history;
  Batch mb;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    for (std::size_t i = n - 1; i > 0; --i) {
      std::swap(order[i], order[static_cast<std::size_t>(rng() % (i + 1))]);
    }
    double loss_sum = 0.0;
    for (std::size_t start = 0; start < n; start += batch) {
      const std::size_t count = std::min(batch, n - start);
      data.fill(std::span<const std::size_t>(order).subspan(start, count), mb);
      check_batch(model, mb);
      const std::vector<Matrix> acts = forward_all(model, mb.inputs);
      loss_sum += data_loss(acts.back(), mb, cfg.loss) * static_cast<double>(count);
      adam_step(model, backward_from(model, acts, mb, cfg.loss));
    }
    model.epoch_count += 1;

    EpochRecord rec;
    rec.epoch = model.epoch_count;
    rec.train_loss = loss_sum / static_cast<double>(n);
    if (validation != nullptr && validation->inputs.rows() > 0) {
      const Matrix pred = forward(model, validation->inputs);
      for (Eigen::Index t = 0; t < pred.cols(); ++t) {
        std::vector<double> p, l;
        for (Eigen::Index r = 0; r < pred.rows(); ++r) {
          if (validation->mask(r, t) == 0.0) continue;
          p.push_back(pred(r, t));
          l.push_back(validation->targets(r, t));
        }
        if (p.empty()) {
          rec.validation_accuracy.push_back(std::numeric_limits<double>::quiet_NaN());
          rec.validation_mae.push_back(std::numeric_limits<double>::quiet_NaN());
        } else {
          rec.validation_accuracy.push_back(accuracy_at(p, l, 0.1));
          rec.validation_mae.push_back(mae(p, l));
        }
      }
    }
    history.push_back(std::move(rec));
  }
  return history;
}

}  // namespace deeppharm
