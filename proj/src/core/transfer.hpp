#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "core/data_model.hpp"
#include "core/neural.hpp"

namespace deeppharm {

inline constexpr int kCheckpointVersion = 1;

// Versioned JSON checkpoint. Every double is stored as its shortest
// round-trip decimal string, so a reload is bit-exact.
std::string serialize_model(const NetworkModel& model);
NetworkModel deserialize_model(const std::string& json);

void save_model(const NetworkModel& model, const std::string& path);
NetworkModel load_model(const std::string& path);

// Copies every layer of `pretrained` except its task layer and output layer
// and appends a freshly initialized task layer of `task_layer_size` plus a
// sigmoid output layer of `out_size`. Adam state is reset and nothing is
// frozen unless `freeze_features` is set.
NetworkModel transfer_feature_layers(const NetworkModel& pretrained, std::size_t task_layer_size,
                                     std::size_t out_size, std::uint64_t seed,
                                     bool freeze_features = false);

// Number of copied feature-extraction layers for a pretrained network.
std::size_t feature_layer_count(const NetworkModel& pretrained);

// A consensus member: a network plus the task predicted by each output
// column (nullopt for columns that predict no pharmacokinetic task).
struct ConsensusMember {
  std::string name;
  NetworkModel model;
  std::vector<std::optional<std::size_t>> output_tasks;

  std::optional<std::size_t> column_for(std::size_t task) const;
};

struct TaskScore {
  double accuracy = 0.0;  // accuracy at 0.1, percent
  double mae = 0.0;
  std::size_t count = 0;
};

struct ConsensusModel {
  std::vector<ConsensusMember> members;
  std::array<std::size_t, kNumTasks> selection{};  // task -> member index
  // validation[m][t], absent when member m does not predict task t.
  std::vector<std::array<std::optional<TaskScore>, kNumTasks>> validation;

  // n x kNumTasks predictions, each task routed to its selected member.
  Matrix predict(const Matrix& inputs) const;
};

// Scores one member on every task it predicts, over present labels of the
// validation slice. `inputs` row i belongs to record i of `validation`.
std::array<std::optional<TaskScore>, kNumTasks> score_member(const ConsensusMember& member,
                                                             const Matrix& inputs,
                                                             const Dataset& validation);

// Chooses, per task, the member with the highest validation accuracy at 0.1;
// ties go to the lower MAE, then to the lower member index.
ConsensusModel build_consensus(std::vector<ConsensusMember> members, const Matrix& inputs,
                               const Dataset& validation);

// Selection from precomputed scores; used by build_consensus.
std::array<std::size_t, kNumTasks> select_members(
    const std::vector<std::array<std::optional<TaskScore>, kNumTasks>>& scores);

inline constexpr int kConsensusVersion = 1;

// Manifest listing member checkpoint files (relative to the manifest's
// directory), the task -> member selection and the validation scores.
nlohmann::json consensus_manifest(const ConsensusModel& consensus,
                                  const std::vector<std::string>& member_files);
void save_consensus_manifest(const ConsensusModel& consensus,
                             const std::vector<std::string>& member_files,
                             const std::string& path);
// Loads the manifest and every member checkpoint it names.
ConsensusModel load_consensus(const std::string& manifest_path);

// Task of each output column, taken from the model's output names.
std::vector<std::optional<std::size_t>> output_tasks_of(const NetworkModel& model);

}  // namespace deeppharm
