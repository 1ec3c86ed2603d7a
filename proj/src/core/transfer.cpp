#include "core/transfer.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>

#include <nlohmann/json.hpp>

#include "core/error.hpp"
#include "core/metrics.hpp"
#include "core/text.hpp"

namespace deeppharm {

namespace {

using nlohmann::json;

constexpr const char* kModelFormat = "deeppharm-model";

// Row-major values joined by single spaces.
template <typename Dense>
std::string encode_values(const Dense& m) {
  std::string out;
  out.reserve(static_cast<std::size_t>(m.size()) * 24);
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      if (!out.empty()) out.push_back(' ');
      out += text::format_double(m(r, c));
    }
  }
  return out;
}

json encode_matrix(const Matrix& m) {
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", encode_values(m)}};
}

std::vector<double> decode_values(const std::string& s, std::size_t expected) {
  std::vector<double> values;
  values.reserve(expected);
  const char* p = s.data();
  const char* end = s.data() + s.size();
  while (p < end) {
    while (p < end && *p == ' ') ++p;
    if (p == end) break;
    double v = 0.0;
    auto [next, ec] = std::from_chars(p, end, v);
    if (ec != std::errc()) fail(ErrorCode::kCorruptFile, "malformed number in checkpoint");
    values.push_back(v);
    p = next;
  }
  if (values.size() != expected) fail(ErrorCode::kCorruptFile, "checkpoint value count mismatch");
  return values;
}

Matrix decode_matrix(const json& j) {
  const auto rows = j.at("rows").get<Eigen::Index>();
  const auto cols = j.at("cols").get<Eigen::Index>();
  if (rows < 0 || cols < 0) fail(ErrorCode::kCorruptFile, "negative matrix shape");
  const auto values =
      decode_values(j.at("data").get<std::string>(), static_cast<std::size_t>(rows * cols));
  Matrix m(rows, cols);
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = values[k++];
  }
  return m;
}

json encode_vector(const Vector& v) {
  return json{{"size", v.size()}, {"data", encode_values(v)}};
}

Vector decode_vector(const json& j) {
  const auto size = j.at("size").get<Eigen::Index>();
  if (size < 0) fail(ErrorCode::kCorruptFile, "negative vector size");
  const auto values = decode_values(j.at("data").get<std::string>(), static_cast<std::size_t>(size));
  Vector v(size);
  for (Eigen::Index i = 0; i < size; ++i) v(i) = values[static_cast<std::size_t>(i)];
  return v;
}

double decode_double(const json& j) {
  auto v = text::parse_double(j.get<std::string>());
  if (!v) fail(ErrorCode::kCorruptFile, "malformed number in checkpoint");
  return *v;
}

}  // namespace

std::string serialize_model(const NetworkModel& model) {
  json j;
  j["format"] = kModelFormat;
  j["format_version"] = kCheckpointVersion;
  std::vector<std::string> acts;
  for (auto a : model.spec.activations) acts.emplace_back(activation_name(a));
  j["spec"] = {{"sizes", model.spec.sizes}, {"activations", acts}};
  json layers = json::array();
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    layers.push_back({{"weights", encode_matrix(model.weights[l])},
                      {"bias", encode_vector(model.biases[l])}});
  }
  j["layers"] = std::move(layers);
  const AdamState& a = model.adam;
  json moments = json::array();
  for (std::size_t l = 0; l < a.m_weights.size(); ++l) {
    moments.push_back({{"m_weights", encode_matrix(a.m_weights[l])},
                       {"v_weights", encode_matrix(a.v_weights[l])},
                       {"m_bias", encode_vector(a.m_biases[l])},
                       {"v_bias", encode_vector(a.v_biases[l])}});
  }
  j["adam"] = {{"learning_rate", text::format_double(a.config.learning_rate)},
               {"beta1", text::format_double(a.config.beta1)},
               {"beta2", text::format_double(a.config.beta2)},
               {"lambda", text::format_double(a.config.lambda)},
               {"eps", text::format_double(a.config.eps)},
               {"step", a.step},
               {"moments", std::move(moments)}};
  j["meta"] = {{"epochs", model.epoch_count},
               {"seed", model.rng_seed},
               {"loss", model.loss_tag},
               {"outputs", model.outputs},
               {"frozen_layers", model.frozen_layers}};
  return j.dump() + "\n";
}

NetworkModel deserialize_model(const std::string& text_json) {
  json j = json::parse(text_json, nullptr, false);
  if (j.is_discarded() || !j.is_object()) fail(ErrorCode::kCorruptFile, "checkpoint is not valid JSON");
  try {
    if (j.value("format", std::string{}) != kModelFormat) {
      fail(ErrorCode::kCorruptFile, "not a model checkpoint");
    }
    const int version = j.at("format_version").get<int>();
    if (version != kCheckpointVersion) {
      fail(ErrorCode::kVersionMismatch, "checkpoint version " + std::to_string(version) +
                                            " is not supported (expected " +
                                            std::to_string(kCheckpointVersion) + ")");
    }
    NetworkModel model;
    model.spec.sizes = j.at("spec").at("sizes").get<std::vector<std::size_t>>();
    for (const auto& name : j.at("spec").at("activations")) {
      model.spec.activations.push_back(activation_from_name(name.get<std::string>()));
    }
    validate_spec(model.spec);
    const auto& layers = j.at("layers");
    if (layers.size() != model.spec.layer_count()) {
      fail(ErrorCode::kCorruptFile, "layer count does not match spec");
    }
    for (std::size_t l = 0; l < layers.size(); ++l) {
      Matrix w = decode_matrix(layers[l].at("weights"));
      Vector b = decode_vector(layers[l].at("bias"));
      if (static_cast<std::size_t>(w.rows()) != model.spec.sizes[l + 1] ||
          static_cast<std::size_t>(w.cols()) != model.spec.sizes[l] || b.size() != w.rows()) {
        fail(ErrorCode::kCorruptFile, "layer shape does not match spec");
      }
      model.weights.push_back(std::move(w));
      model.biases.push_back(std::move(b));
    }
    const auto& adam = j.at("adam");
    model.adam.config.learning_rate = decode_double(adam.at("learning_rate"));
    model.adam.config.beta1 = decode_double(adam.at("beta1"));
    model.adam.config.beta2 = decode_double(adam.at("beta2"));
    model.adam.config.lambda = decode_double(adam.at("lambda"));
    model.adam.config.eps = decode_double(adam.at("eps"));
    model.adam.step = adam.at("step").get<std::uint64_t>();
    const auto& moments = adam.at("moments");
    if (moments.size() != model.layer_count()) fail(ErrorCode::kCorruptFile, "adam state mismatch");
    for (std::size_t l = 0; l < moments.size(); ++l) {
      model.adam.m_weights.push_back(decode_matrix(moments[l].at("m_weights")));
      model.adam.v_weights.push_back(decode_matrix(moments[l].at("v_weights")));
      model.adam.m_biases.push_back(decode_vector(moments[l].at("m_bias")));
      model.adam.v_biases.push_back(decode_vector(moments[l].at("v_bias")));
      if (model.adam.m_weights[l].rows() != model.weights[l].rows() ||
          model.adam.m_weights[l].cols() != model.weights[l].cols() ||
          model.adam.v_weights[l].rows() != model.weights[l].rows() ||
          model.adam.v_weights[l].cols() != model.weights[l].cols() ||
          model.adam.m_biases[l].size() != model.biases[l].size() ||
          model.adam.v_biases[l].size() != model.biases[l].size()) {
        fail(ErrorCode::kCorruptFile, "adam state shape mismatch");
      }
    }
    const auto& meta = j.at("meta");
    model.epoch_count = meta.at("epochs").get<std::uint64_t>();
    model.rng_seed = meta.at("seed").get<std::uint64_t>();
    model.loss_tag = meta.at("loss").get<std::string>();
    model.outputs = meta.at("outputs").get<std::vector<std::string>>();
    model.frozen_layers = meta.at("frozen_layers").get<std::size_t>();
    return model;
  } catch (const json::exception& e) {
    fail(ErrorCode::kCorruptFile, std::string("malformed checkpoint: ") + e.what());
  }
}

void save_model(const NetworkModel& model, const std::string& path) {
  text::write_file(path, serialize_model(model));
}

NetworkModel load_model(const std::string& path) {
  return deserialize_model(text::read_file(path));
}

std::size_t feature_layer_count(const NetworkModel& pretrained) {
  return pretrained.layer_count() >= 2 ? pretrained.layer_count() - 2 : 0;
}

NetworkModel transfer_feature_layers(const NetworkModel& pretrained, std::size_t task_layer_size,
                                     std::size_t out_size, std::uint64_t seed,
                                     bool freeze_features) {
  const std::size_t features = feature_layer_count(pretrained);
  if (features == 0) {
    fail(ErrorCode::kIncompatiblePretrained,
         "pretrained network needs feature layers below its task and output layers");
  }
  if (task_layer_size == 0 || out_size == 0) {
    fail(ErrorCode::kInvalidArgument, "task layer and output sizes must be positive");
  }
  for (std::size_t l = 0; l < features; ++l) {
    if (pretrained.spec.activations[l] != Activation::kTanh &&
        pretrained.spec.activations[l] != Activation::kSigmoid) {
      fail(ErrorCode::kIncompatiblePretrained, "unsupported activation in feature layers");
    }
  }
  std::vector<std::size_t> sizes(pretrained.spec.sizes.begin(),
                                 pretrained.spec.sizes.begin() + static_cast<std::ptrdiff_t>(features + 1));
  sizes.push_back(task_layer_size);
  sizes.push_back(out_size);
  LayerSpec spec = LayerSpec::dense(sizes);
  for (std::size_t l = 0; l < features; ++l) spec.activations[l] = pretrained.spec.activations[l];

  NetworkModel model = init_network(spec, seed, pretrained.adam.config);
  for (std::size_t l = 0; l < features; ++l) {
    model.weights[l] = pretrained.weights[l];
    model.biases[l] = pretrained.biases[l];
  }
  model.frozen_layers = freeze_features ? features : 0;
  reset_adam(model);
  return model;
}

std::optional<std::size_t> ConsensusMember::column_for(std::size_t task) const {
  for (std::size_t c = 0; c < output_tasks.size(); ++c) {
    if (output_tasks[c] == task) return c;
  }
  return std::nullopt;
}

Matrix ConsensusModel::predict(const Matrix& inputs) const {
  Matrix out(inputs.rows(), static_cast<Eigen::Index>(kNumTasks));
  std::vector<std::optional<Matrix>> cache(members.size());
  for (std::size_t t = 0; t < kNumTasks; ++t) {
    const std::size_t m = selection[t];
    if (!cache[m]) cache[m] = forward(members[m].model, inputs);
    const auto col = members[m].column_for(t);
    if (!col) fail(ErrorCode::kNoMemberForTask, "selected member does not predict the task");
    out.col(static_cast<Eigen::Index>(t)) = cache[m]->col(static_cast<Eigen::Index>(*col));
  }
  return out;
}

std::array<std::optional<TaskScore>, kNumTasks> score_member(const ConsensusMember& member,
                                                             const Matrix& inputs,
                                                             const Dataset& validation) {
  if (static_cast<std::size_t>(inputs.rows()) != validation.size()) {
    fail(ErrorCode::kShapeMismatch, "validation inputs and records differ in count");
  }
  if (member.output_tasks.size() != member.model.spec.output_width()) {
    fail(ErrorCode::kShapeMismatch, "member output task map does not match its output width");
  }
  const Matrix pred = forward(member.model, inputs);
  std::array<std::optional<TaskScore>, kNumTasks> scores;
  for (std::size_t t = 0; t < kNumTasks; ++t) {
    const auto col = member.column_for(t);
    if (!col) continue;
    std::vector<double> p, l;
    for (std::size_t r = 0; r < validation.size(); ++r) {
      if (!validation.records[r].mask[t]) continue;
      p.push_back(pred(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(*col)));
      l.push_back(validation.records[r].labels[t]);
    }
    if (p.empty()) {
      fail(ErrorCode::kEmptyValidationTask,
           "validation slice has no " + std::string(task_name(t)) + " labels");
    }
    scores[t] = TaskScore{accuracy_at(p, l, 0.1), mae(p, l), p.size()};
  }
  return scores;
}

std::array<std::size_t, kNumTasks> select_members(
    const std::vector<std::array<std::optional<TaskScore>, kNumTasks>>& scores) {
  std::array<std::size_t, kNumTasks> selection{};
  for (std::size_t t = 0; t < kNumTasks; ++t) {
    std::optional<std::size_t> best;
    for (std::size_t m = 0; m < scores.size(); ++m) {
      const auto& s = scores[m][t];
      if (!s) continue;
      if (!best) {
        best = m;
        continue;
      }
      const TaskScore& b = *scores[*best][t];
      if (s->accuracy > b.accuracy || (s->accuracy == b.accuracy && s->mae < b.mae)) best = m;
    }
    if (!best) {
      fail(ErrorCode::kNoMemberForTask, "no member predicts " + std::string(task_name(t)));
    }
    selection[t] = *best;
  }
  return selection;
}

ConsensusModel build_consensus(std::vector<ConsensusMember> members, const Matrix& inputs,
                               const Dataset& validation) {
  if (members.empty()) fail(ErrorCode::kNoMemberForTask, "consensus needs at least one member");
  for (std::size_t t = 0; t < kNumTasks; ++t) {
    if (validation.present_count(t) == 0) {
      fail(ErrorCode::kEmptyValidationTask,
           "validation slice has no " + std::string(task_name(t)) + " labels");
    }
  }
  ConsensusModel consensus;
  for (const auto& m : members) consensus.validation.push_back(score_member(m, inputs, validation));
  consensus.selection = select_members(consensus.validation);
  consensus.members = std::move(members);
  return consensus;
}

std::vector<std::optional<std::size_t>> output_tasks_of(const NetworkModel& model) {
  std::vector<std::optional<std::size_t>> tasks;
  for (const auto& name : model.outputs) tasks.push_back(task_from_name(name));
  tasks.resize(model.spec.output_width());
  return tasks;
}

json consensus_manifest(const ConsensusModel& consensus,
                        const std::vector<std::string>& member_files) {
  if (member_files.size() != consensus.members.size()) {
    fail(ErrorCode::kInvalidArgument, "one file name per consensus member is required");
  }
  json j;
  j["format"] = "deeppharm-consensus";
  j["format_version"] = kConsensusVersion;
  j["members"] = json::array();
  for (std::size_t m = 0; m < consensus.members.size(); ++m) {
    const auto& member = consensus.members[m];
    json scores = json::object();
    for (std::size_t t = 0; t < kNumTasks; ++t) {
      const auto& s = m < consensus.validation.size() ? consensus.validation[m][t] : std::nullopt;
      if (!s) continue;
      scores[std::string(task_name(t))] = {
          {"accuracy_0.1", s->accuracy}, {"mae", s->mae}, {"n", s->count}};
    }
    j["members"].push_back({{"name", member.name},
                            {"file", member_files[m]},
                            {"outputs", member.model.outputs},
                            {"validation", scores}});
  }
  json selection = json::object();
  for (std::size_t t = 0; t < kNumTasks; ++t) {
    selection[std::string(task_name(t))] = consensus.members[consensus.selection[t]].name;
  }
  j["selection"] = selection;
  return j;
}

void save_consensus_manifest(const ConsensusModel& consensus,
                             const std::vector<std::string>& member_files,
                             const std::string& path) {
  text::write_file(path, consensus_manifest(consensus, member_files).dump(2) + "\n");
}

ConsensusModel load_consensus(const std::string& manifest_path) {
  const std::string raw = text::read_file(manifest_path);
  ConsensusModel consensus;
  try {
    const json j = json::parse(raw);
    if (j.at("format").get<std::string>() != "deeppharm-consensus") {
      fail(ErrorCode::kCorruptFile, "'" + manifest_path + "' is not a consensus manifest");
    }
    const int version = j.at("format_version").get<int>();
    if (version != kConsensusVersion) {
      fail(ErrorCode::kVersionMismatch,
           "consensus manifest version " + std::to_string(version) + " is not supported");
    }
    const auto dir = std::filesystem::path(manifest_path).parent_path();
    for (const auto& m : j.at("members")) {
      ConsensusMember member;
      member.name = m.at("name").get<std::string>();
      member.model = load_model((dir / m.at("file").get<std::string>()).string());
      member.output_tasks = output_tasks_of(member.model);
      std::array<std::optional<TaskScore>, kNumTasks> scores;
      if (m.contains("validation")) {
        for (const auto& [task, s] : m.at("validation").items()) {
          const auto t = task_from_name(task);
          if (!t) fail(ErrorCode::kCorruptFile, "unknown task '" + task + "' in manifest");
          scores[*t] = TaskScore{s.at("accuracy_0.1").get<double>(), s.at("mae").get<double>(),
                                 s.at("n").get<std::size_t>()};
        }
      }
      consensus.validation.push_back(scores);
      consensus.members.push_back(std::move(member));
    }
    for (std::size_t t = 0; t < kNumTasks; ++t) {
      const auto name = j.at("selection").at(std::string(task_name(t))).get<std::string>();
      bool found = false;
      for (std::size_t m = 0; m < consensus.members.size() && !found; ++m) {
        if (consensus.members[m].name == name) {
          consensus.selection[t] = m;
          found = true;
        }
      }
      if (!found || !consensus.members[consensus.selection[t]].column_for(t)) {
        fail(ErrorCode::kNoMemberForTask,
             "manifest selects no usable member for " + std::string(task_name(t)));
      }
    }
  } catch (const json::exception& e) {
    fail(ErrorCode::kCorruptFile, "'" + manifest_path + "': " + e.what());
  }
  return consensus;
}

}  // namespace deeppharm
