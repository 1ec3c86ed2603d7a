#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace deeppharm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation { kTanh, kSigmoid };

std::string_view activation_name(Activation a);
Activation activation_from_name(std::string_view name);

// Layer widths from input to output; activations[l] applies to the output
// of weight layer l, so activations.size() == sizes.size() - 1.
struct LayerSpec {
  std::vector<std::size_t> sizes;
  std::vector<Activation> activations;

  std::size_t layer_count() const { return sizes.size() - 1; }
  std::size_t input_width() const { return sizes.front(); }
  std::size_t output_width() const { return sizes.back(); }

  // tanh on every hidden layer, sigmoid on the output layer.
  static LayerSpec dense(std::vector<std::size_t> sizes);

  bool operator==(const LayerSpec&) const = default;
};

// [1000, 900, ..., 100]: the shared feature-extraction stack.
std::vector<std::size_t> feature_stack(std::size_t top = 1000, std::size_t bottom = 100,
                                       std::size_t step = 100);

void validate_spec(const LayerSpec& spec);

struct AdamConfig {
  double learning_rate = 0.1;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double lambda = 0.01;  // L2 coefficient on weights (not biases)
  double eps = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::vector<Matrix> m_weights, v_weights;
  std::vector<Vector> m_biases, v_biases;
  std::uint64_t step = 0;
};

struct NetworkModel {
  LayerSpec spec;
  std::vector<Matrix> weights;  // weights[l] is sizes[l+1] x sizes[l]
  std::vector<Vector> biases;
  AdamState adam;
  std::uint64_t epoch_count = 0;
  std::uint64_t rng_seed = 0;
  std::string loss_tag;              // "multitask", "weighted_binary" or empty
  std::vector<std::string> outputs;  // name of each output column
  std::size_t frozen_layers = 0;     // leading layers excluded from updates

  std::size_t layer_count() const { return weights.size(); }
  std::size_t parameter_count() const;
};

// Glorot-uniform weights from a seeded engine, zero biases, zero Adam state.
NetworkModel init_network(const LayerSpec& spec, std::uint64_t seed,
                          const AdamConfig& adam = {});

void reset_adam(NetworkModel& model);

// Rows of `inputs` are samples. Returns one row of outputs per sample.
Matrix forward(const NetworkModel& model, const Matrix& inputs);

// Masked, per-task weighted halved squared error. Tasks with no present
// label contribute zero.
double multitask_cost(const Matrix& pred, const Matrix& label, const Matrix& mask,
                      std::span<const double> task_weights);

// Mean over present entries of w(label) * (pred - label)^2 / 2 where w is
// `positive` for label 1 and `negative` for label 0.
double weighted_binary_cost(const Matrix& pred, const Matrix& label, const Matrix& mask,
                            double positive, double negative);
double weighted_binary_cost(std::span<const double> pred, std::span<const double> label,
                            double positive = 100.0, double negative = 1.0);

struct MultitaskLoss {
  std::vector<double> task_weights{3.0, 1.0, 9.0, 1.0};
};
struct WeightedBinaryLoss {
  double positive = 100.0;
  double negative = 1.0;
};
using LossSpec = std::variant<MultitaskLoss, WeightedBinaryLoss>;

std::string_view loss_tag(const LossSpec& loss);

struct Batch {
  Matrix inputs;   // n x input width
  Matrix targets;  // n x output width
  Matrix mask;     // n x output width, 1 where the target is present
};

struct Gradients {
  std::vector<Matrix> weights;
  std::vector<Vector> biases;
};

// Data loss plus (lambda / 2) * sum of squared weights.
double objective(const NetworkModel& model, const Batch& batch, const LossSpec& loss);

// Analytic gradient of objective() with respect to every parameter.
Gradients backward(const NetworkModel& model, const Batch& batch, const LossSpec& loss);

void adam_step(NetworkModel& model, const Gradients& grads);

// Supplies training rows on demand, so large corpora need not be dense.
class BatchSource {
 public:
  virtual ~BatchSource() = default;
  virtual std::size_t size() const = 0;
  virtual void fill(std::span<const std::size_t> rows, Batch& out) const = 0;
};

class DenseBatchSource final : public BatchSource {
 public:
  explicit DenseBatchSource(Batch data);
  std::size_t size() const override { return static_cast<std::size_t>(data_.inputs.rows()); }
  void fill(std::span<const std::size_t> rows, Batch& out) const override;
  const Batch& data() const { return data_; }

 private:
  Batch data_;
};

struct TrainConfig {
  AdamConfig adam;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;  // 0 means full batch
  std::uint64_t seed = 0;
  LossSpec loss = MultitaskLoss{};
  std::optional<std::size_t> freeze_layers;  // overrides model.frozen_layers
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  // Per output column, over present validation labels; NaN when none.
  std::vector<double> validation_accuracy;
  std::vector<double> validation_mae;
};

using TrainingHistory = std::vector<EpochRecord>;

TrainingHistory train(NetworkModel& model, const BatchSource& data, const TrainConfig& cfg,
                      const Batch* validation = nullptr);

}  // namespace deeppharm
