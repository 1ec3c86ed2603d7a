#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/data_model.hpp"
#include "core/neural.hpp"

namespace deeppharm {

// Hyperparameters of one network and its training run.
struct NetworkConfig {
  std::vector<std::size_t> layers;               // hidden widths
  std::vector<std::string> activations;          // empty: tanh hidden, sigmoid output
  std::size_t task_layer = 0;                    // pretraining only: width above the features
  double learning_rate = 0.1;
  double beta1 = 0.5;
  double beta2 = 0.999;
  double lambda = 0.01;
  double eps = 1e-8;
  std::size_t epochs = 100;
  std::size_t batch_size = 32;
  std::array<double, kNumTasks> task_weights{3.0, 1.0, 9.0, 1.0};
  std::array<double, 2> pos_neg_weights{100.0, 1.0};

  AdamConfig adam() const { return {learning_rate, beta1, beta2, lambda, eps}; }
};

struct TransferMemberConfig {
  std::string name;
  std::size_t task_layer = 1000;
  std::size_t epochs = 96;
  std::vector<std::string> tasks{"ba", "ppbr", "vdss", "hl"};
};

struct PipelineConfig {
  struct Paths {
    std::string dataset = "pk_dataset.csv";
    std::string bioactivity;  // empty: not configured
    std::string checkpoint_dir = "checkpoints";
    std::string report_dir = "reports";
  } paths;
  struct Fingerprint {
    int radius = 2;
    std::size_t nbits = 1024;
    bool use_precomputed = false;
  } fingerprint;
  struct Split {
    std::string method = "mdfiswd";
    double w1 = 0.7;
    double w2 = 0.3;
    int se_groups = 10;
  } split;
  std::array<double, kNumTasks> divisors{100.0, 100.0, 2000.0, 168.0};
  NetworkConfig pretrain;
  double pretrain_validation_fraction = 0.1;
  NetworkConfig multitask;
  NetworkConfig transfer;
  bool freeze_features = false;
  std::vector<TransferMemberConfig> members;
  std::uint64_t seed = 0;

  // Full-size hyperparameters for the pharmacokinetic models.
  static PipelineConfig defaults();

  nlohmann::json to_json() const;
  // Missing keys keep their defaults; unknown keys and out-of-range values
  // throw Error(kConfigError).
  static PipelineConfig from_json(const nlohmann::json& j);
  static PipelineConfig load(const std::string& path);
};

std::string default_config_json();

// Derives an independent seed for one purpose from the run seed.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose);

std::string sha256_hex(std::string_view data);

using LogSink = std::function<void(std::string_view)>;

class Pipeline {
 public:
  static constexpr std::array<std::string_view, 8> kSubcommands{
      "fingerprint", "split", "pretrain", "train", "transfer", "consensus", "evaluate", "predict"};

  // Relative dataset paths resolve against `config_dir`; artifacts land in
  // `out_dir`.
  Pipeline(PipelineConfig config, std::string out_dir, std::string config_dir = ".");

  void set_threads(std::size_t threads) { threads_ = threads == 0 ? 1 : threads; }
  void set_seed(std::uint64_t seed) { config_.seed = seed; }
  void set_log(LogSink sink) { log_ = std::move(sink); }

  void run(std::string_view subcommand);

  const PipelineConfig& config() const { return config_; }

  // Artifact locations.
  std::string fingerprints_path() const;
  std::string split_path() const;
  std::string pretrained_path() const;
  std::string multitask_path() const;
  std::string member_path(const std::string& name) const;
  std::string consensus_path() const;
  std::string report_json_path() const;
  std::string report_text_path() const;
  std::string predictions_path() const;
  std::string manifest_path() const;

 private:
  struct Artifacts {
    std::vector<std::string> inputs;
    std::vector<std::string> outputs;
  };

  void run_fingerprint(Artifacts& a);
  void run_split(Artifacts& a);
  void run_pretrain(Artifacts& a);
  void run_train(Artifacts& a);
  void run_transfer(Artifacts& a);
  void run_consensus(Artifacts& a);
  void run_evaluate(Artifacts& a);
  void run_predict(Artifacts& a);

  Dataset load_normalized_dataset(Artifacts& a) const;
  Matrix load_fingerprints(const Dataset& ds, Artifacts& a) const;
  std::vector<std::size_t> load_split(const Dataset& ds, Artifacts& a, int subset) const;
  void write_manifest(std::string_view subcommand, const Artifacts& a) const;
  std::string resolve_input(const std::string& path) const;
  void log(const std::string& line) const;

  PipelineConfig config_;
  std::string out_dir_;
  std::string config_dir_;
  std::size_t threads_ = 1;
  LogSink log_;
};

}  // namespace deeppharm
