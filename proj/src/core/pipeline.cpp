#include "core/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <openssl/evp.h>

#include "core/bioactivity.hpp"
#include "core/error.hpp"
#include "core/evaluation.hpp"
#include "core/fingerprint.hpp"
#include "core/metrics.hpp"
#include "core/splitter.hpp"
#include "core/text.hpp"
#include "core/transfer.hpp"

namespace deeppharm {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "1.0.0";

// Strict reader over one JSON object: every key must be consumed by a getter.
class Section {
 public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) fail(ErrorCode::kConfigError, where() + " must be an object");
  }

  ~Section() = default;

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (!seen_.count(key)) fail(ErrorCode::kConfigError, "unknown key '" + key + "' in " + where());
    }
  }

  const json* get(const std::string& key) {
    seen_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  void number(const std::string& key, double& out) {
    if (const json* v = get(key)) {
      if (!v->is_number()) fail(ErrorCode::kConfigError, name(key) + " must be a number");
      out = v->get<double>();
    }
  }

  template <class Int>
  void integer(const std::string& key, Int& out) {
    if (const json* v = get(key)) {
      if (!v->is_number_integer()) fail(ErrorCode::kConfigError, name(key) + " must be an integer");
      if constexpr (std::is_unsigned_v<Int>) {
        if (!v->is_number_unsigned()) fail(ErrorCode::kConfigError, name(key) + " must be >= 0");
        out = static_cast<Int>(v->get<std::uint64_t>());
      } else {
        out = static_cast<Int>(v->get<std::int64_t>());
      }
    }
  }

  void boolean(const std::string& key, bool& out) {
    if (const json* v = get(key)) {
      if (!v->is_boolean()) fail(ErrorCode::kConfigError, name(key) + " must be true or false");
      out = v->get<bool>();
    }
  }

  void string(const std::string& key, std::string& out) {
    if (const json* v = get(key)) {
      if (!v->is_string()) fail(ErrorCode::kConfigError, name(key) + " must be a string");
      out = v->get<std::string>();
    }
  }

  template <std::size_t N>
  void numbers(const std::string& key, std::array<double, N>& out) {
    if (const json* v = get(key)) {
      if (!v->is_array() || v->size() != N) {
        fail(ErrorCode::kConfigError, name(key) + " must be an array of " + std::to_string(N) + " numbers");
      }
      for (std::size_t i = 0; i < N; ++i) {
        if (!(*v)[i].is_number()) fail(ErrorCode::kConfigError, name(key) + " must hold numbers");
        out[i] = (*v)[i].get<double>();
      }
    }
  }

  void sizes(const std::string& key, std::vector<std::size_t>& out) {
    if (const json* v = get(key)) {
      if (!v->is_array()) fail(ErrorCode::kConfigError, name(key) + " must be an array");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_number_unsigned() || e.get<std::uint64_t>() == 0) {
          fail(ErrorCode::kConfigError, name(key) + " must hold positive integers");
        }
        out.push_back(e.get<std::size_t>());
      }
    }
  }

  void strings(const std::string& key, std::vector<std::string>& out) {
    if (const json* v = get(key)) {
      if (!v->is_array()) fail(ErrorCode::kConfigError, name(key) + " must be an array");
      out.clear();
      for (const auto& e : *v) {
        if (!e.is_string()) fail(ErrorCode::kConfigError, name(key) + " must hold strings");
        out.push_back(e.get<std::string>());
      }
    }
  }

  std::string name(const std::string& key) const { return where() + "." + key; }
  std::string where() const { return path_.empty() ? "config" : path_; }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& message) {
  if (!ok) fail(ErrorCode::kConfigError, message);
}

json network_to_json(const NetworkConfig& n, bool layers, bool task_layer, bool binary) {
  json j;
  if (layers) {
    j["layers"] = n.layers;
    j["activations"] = n.activations;
  }
  if (task_layer) j["task_layer"] = n.task_layer;
  j["learning_rate"] = n.learning_rate;
  j["beta1"] = n.beta1;
  j["beta2"] = n.beta2;
  j["lambda"] = n.lambda;
  j["eps"] = n.eps;
  if (layers) j["epochs"] = n.epochs;
  j["batch_size"] = n.batch_size;
  if (binary) {
    j["pos_neg_weights"] = n.pos_neg_weights;
  } else {
    j["task_weights"] = n.task_weights;
  }
  return j;
}

void network_from_json(Section& s, NetworkConfig& n, bool layers, bool task_layer, bool binary) {
  if (layers) {
    s.sizes("layers", n.layers);
    s.strings("activations", n.activations);
    s.integer("epochs", n.epochs);
    require(n.epochs >= 1, s.name("epochs") + " must be at least 1");
    for (const auto& a : n.activations) {
      require(a == "tanh" || a == "sigmoid", s.name("activations") + " entries must be tanh or sigmoid");
    }
  }
  if (task_layer) {
    s.integer("task_layer", n.task_layer);
    require(n.task_layer >= 1, s.name("task_layer") + " must be at least 1");
  }
  s.number("learning_rate", n.learning_rate);
  s.number("beta1", n.beta1);
  s.number("beta2", n.beta2);
  s.number("lambda", n.lambda);
  s.number("eps", n.eps);
  s.integer("batch_size", n.batch_size);
  require(n.learning_rate > 0.0, s.name("learning_rate") + " must be positive");
  require(n.beta1 >= 0.0 && n.beta1 < 1.0, s.name("beta1") + " must lie in [0, 1)");
  require(n.beta2 >= 0.0 && n.beta2 < 1.0, s.name("beta2") + " must lie in [0, 1)");
  require(n.lambda >= 0.0, s.name("lambda") + " must be non-negative");
  require(n.eps > 0.0, s.name("eps") + " must be positive");
  if (binary) {
    s.numbers("pos_neg_weights", n.pos_neg_weights);
    require(n.pos_neg_weights[0] > 0.0 && n.pos_neg_weights[1] > 0.0,
            s.name("pos_neg_weights") + " must be positive");
  } else {
    s.numbers("task_weights", n.task_weights);
    double total = 0.0;
    for (double w : n.task_weights) {
      require(w >= 0.0, s.name("task_weights") + " must be non-negative");
      total += w;
    }
    require(total > 0.0, s.name("task_weights") + " must not all be zero");
  }
}

LayerSpec make_spec(std::size_t in, const std::vector<std::size_t>& hidden, std::size_t out,
                    const std::vector<std::string>& activations) {
  std::vector<std::size_t> sizes{in};
  sizes.insert(sizes.end(), hidden.begin(), hidden.end());
  sizes.push_back(out);
  LayerSpec spec = LayerSpec::dense(sizes);
  if (!activations.empty()) {
    if (activations.size() != spec.layer_count()) {
      fail(ErrorCode::kConfigError, "activations list needs " + std::to_string(spec.layer_count()) +
                                        " entries, one per layer");
    }
    for (std::size_t i = 0; i < activations.size(); ++i) {
      spec.activations[i] = activation_from_name(activations[i]);
    }
  }
  return spec;
}

TrainConfig train_config(const NetworkConfig& n, std::size_t epochs, std::uint64_t seed, LossSpec loss) {
  TrainConfig cfg;
  cfg.adam = n.adam();
  cfg.epochs = epochs;
  cfg.batch_size = n.batch_size;
  cfg.seed = seed;
  cfg.loss = std::move(loss);
  return cfg;
}

json history_to_json(const TrainingHistory& history) {
  json j = json::array();
  for (const auto& e : history) {
    json r{{"epoch", e.epoch}, {"train_loss", e.train_loss}};
    if (!e.validation_accuracy.empty()) {
      r["validation_accuracy_0.1"] = e.validation_accuracy;
      r["validation_mae"] = e.validation_mae;
    }
    j.push_back(std::move(r));
  }
  return j;
}

// Input rows for `indices`, plus targets and mask over `tasks`.
Batch make_batch(const Dataset& ds, const Matrix& fps, const std::vector<std::size_t>& indices,
                 const std::vector<std::size_t>& tasks) {
  Batch b;
  const auto n = static_cast<Eigen::Index>(indices.size());
  const auto k = static_cast<Eigen::Index>(tasks.size());
  b.inputs.resize(n, fps.cols());
  b.targets.setZero(n, k);
  b.mask.setZero(n, k);
  for (Eigen::Index i = 0; i < n; ++i) {
    const std::size_t r = indices[static_cast<std::size_t>(i)];
    b.inputs.row(i) = fps.row(static_cast<Eigen::Index>(r));
    const auto& rec = ds.records[r];
    for (Eigen::Index c = 0; c < k; ++c) {
      const std::size_t t = tasks[static_cast<std::size_t>(c)];
      if (!rec.mask[t]) continue;
      b.targets(i, c) = rec.labels[t];
      b.mask(i, c) = 1.0;
    }
  }
  return b;
}

std::vector<std::size_t> all_tasks() { return {0, 1, 2, 3}; }

std::vector<std::string> task_names(const std::vector<std::size_t>& tasks) {
  std::vector<std::string> out;
  for (std::size_t t : tasks) out.emplace_back(task_name(t));
  return out;
}

// n x kNumTasks predictions of a model whose outputs name tasks; NaN where a
// task is not predicted.
Matrix task_predictions(const NetworkModel& model, const Matrix& inputs) {
  const Matrix raw = forward(model, inputs);
  Matrix out = Matrix::Constant(inputs.rows(), static_cast<Eigen::Index>(kNumTasks),
                                std::numeric_limits<double>::quiet_NaN());
  const auto tasks = output_tasks_of(model);
  for (std::size_t c = 0; c < tasks.size(); ++c) {
    if (tasks[c]) out.col(static_cast<Eigen::Index>(*tasks[c])) = raw.col(static_cast<Eigen::Index>(c));
  }
  return out;
}

std::string ensure_parent(const std::string& path) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  return path;
}

void write_json(const std::string& path, const json& j) {
  text::write_file(ensure_parent(path), j.dump(2) + "\n");
}

void require_artifact(const std::string& path, std::string_view producer) {
  if (!fs::exists(path)) {
    fail(ErrorCode::kMissingArtifact,
         "'" + path + "' not found; run the '" + std::string(producer) + "' subcommand first");
  }
}

bool valid_member_name(const std::string& name) {
  if (name.empty()) return false;
  return std::all_of(name.begin(), name.end(), [](unsigned char c) {
    return std::isalnum(c) || c == '_' || c == '-';
  });
}

}  // namespace

PipelineConfig PipelineConfig::defaults() {
  PipelineConfig c;
  c.pretrain.layers = feature_stack();
  c.pretrain.task_layer = 1000;
  c.pretrain.learning_rate = 0.01;
  c.pretrain.epochs = 5;
  c.multitask.layers = feature_stack();
  c.multitask.learning_rate = 0.1;
  c.multitask.epochs = 100;
  c.transfer.learning_rate = 0.03;
  c.members = {{"ba", 1000, 96, {"ba", "ppbr", "vdss", "hl"}},
               {"ppbr", 1000, 52, {"ba", "ppbr", "vdss", "hl"}},
               {"vdss_hl", 100, 96, {"ba", "ppbr", "vdss", "hl"}}};
  return c;
}

json PipelineConfig::to_json() const {
  json j;
  j["seed"] = seed;
  j["paths"] = {{"dataset", paths.dataset},
                {"bioactivity", paths.bioactivity},
                {"checkpoint_dir", paths.checkpoint_dir},
                {"report_dir", paths.report_dir}};
  j["fingerprint"] = {{"radius", fingerprint.radius},
                      {"nbits", fingerprint.nbits},
                      {"use_precomputed", fingerprint.use_precomputed}};
  j["split"] = {{"method", split.method}, {"w1", split.w1}, {"w2", split.w2}, {"se_groups", split.se_groups}};
  j["normalization"] = {{"divisors", divisors}};
  j["pretrain"] = network_to_json(pretrain, true, true, true);
  j["pretrain"]["validation_fraction"] = pretrain_validation_fraction;
  j["multitask"] = network_to_json(multitask, true, false, false);
  j["transfer"] = network_to_json(transfer, false, false, false);
  j["transfer"]["freeze_features"] = freeze_features;
  j["transfer"]["members"] = json::array();
  for (const auto& m : members) {
    j["transfer"]["members"].push_back(
        {{"name", m.name}, {"task_layer", m.task_layer}, {"epochs", m.epochs}, {"tasks", m.tasks}});
  }
  return j;
}

PipelineConfig PipelineConfig::from_json(const json& j) {
  PipelineConfig c = defaults();
  Section root(j, "");
  root.integer("seed", c.seed);
  if (const json* p = root.get("paths")) {
    Section s(*p, "paths");
    s.string("dataset", c.paths.dataset);
    s.string("bioactivity", c.paths.bioactivity);
    s.string("checkpoint_dir", c.paths.checkpoint_dir);
    s.string("report_dir", c.paths.report_dir);
    s.finish();
  }
  if (const json* p = root.get("fingerprint")) {
    Section s(*p, "fingerprint");
    s.integer("radius", c.fingerprint.radius);
    s.integer("nbits", c.fingerprint.nbits);
    s.boolean("use_precomputed", c.fingerprint.use_precomputed);
    s.finish();
    require(c.fingerprint.radius >= 0 && c.fingerprint.radius <= 8,
            "fingerprint.radius must lie in [0, 8]");
    const std::size_t nbits = c.fingerprint.nbits;
    require(nbits >= 64 && (nbits & (nbits - 1)) == 0,
            "fingerprint.nbits must be a power of two of at least 64");
  }
  if (const json* p = root.get("split")) {
    Section s(*p, "split");
    s.string("method", c.split.method);
    s.number("w1", c.split.w1);
    s.number("w2", c.split.w2);
    s.integer("se_groups", c.split.se_groups);
    s.finish();
    require(c.split.method == "mdfiswd" || c.split.method == "random",
            "split.method must be 'mdfiswd' or 'random'");
    require(c.split.w1 >= 0.0 && c.split.w2 >= 0.0 && std::abs(c.split.w1 + c.split.w2 - 1.0) <= 1e-9,
            "split.w1 and split.w2 must be non-negative and sum to 1");
    require(c.split.se_groups >= 2, "split.se_groups must be at least 2");
  }
  if (const json* p = root.get("normalization")) {
    Section s(*p, "normalization");
    s.numbers("divisors", c.divisors);
    s.finish();
    for (double d : c.divisors) require(d > 0.0, "normalization.divisors must be positive");
  }
  if (const json* p = root.get("pretrain")) {
    Section s(*p, "pretrain");
    network_from_json(s, c.pretrain, true, true, true);
    s.number("validation_fraction", c.pretrain_validation_fraction);
    s.finish();
    require(c.pretrain_validation_fraction >= 0.0 && c.pretrain_validation_fraction < 1.0,
            "pretrain.validation_fraction must lie in [0, 1)");
    require(!c.pretrain.layers.empty(), "pretrain.layers must name at least one feature layer");
  }
  if (const json* p = root.get("multitask")) {
    Section s(*p, "multitask");
    network_from_json(s, c.multitask, true, false, false);
    s.finish();
  }
  if (const json* p = root.get("transfer")) {
    Section s(*p, "transfer");
    network_from_json(s, c.transfer, false, false, false);
    s.boolean("freeze_features", c.freeze_features);
    if (const json* m = s.get("members")) {
      if (!m->is_array() || m->empty()) fail(ErrorCode::kConfigError, "transfer.members must be a non-empty array");
      c.members.clear();
      std::set<std::string> names;
      for (std::size_t i = 0; i < m->size(); ++i) {
        TransferMemberConfig member;
        member.name.clear();
        Section ms((*m)[i], "transfer.members[" + std::to_string(i) + "]");
        ms.string("name", member.name);
        ms.integer("task_layer", member.task_layer);
        ms.integer("epochs", member.epochs);
        ms.strings("tasks", member.tasks);
        ms.finish();
        require(valid_member_name(member.name),
                ms.name("name") + " must be non-empty and use only letters, digits, '_' or '-'");
        require(names.insert(member.name).second, "duplicate member name '" + member.name + "'");
        require(member.task_layer >= 1, ms.name("task_layer") + " must be at least 1");
        require(member.epochs >= 1, ms.name("epochs") + " must be at least 1");
        require(!member.tasks.empty(), ms.name("tasks") + " must not be empty");
        std::set<std::string> seen;
        for (const auto& t : member.tasks) {
          require(task_from_name(t).has_value(), ms.name("tasks") + " has unknown task '" + t + "'");
          require(seen.insert(t).second, ms.name("tasks") + " repeats '" + t + "'");
        }
        c.members.push_back(std::move(member));
      }
    }
    s.finish();
  }
  root.finish();
  return c;
}

PipelineConfig PipelineConfig::load(const std::string& path) {
  const std::string raw = text::read_file(path);
  json j;
  try {
    j = json::parse(raw);
  } catch (const json::exception& e) {
    fail(ErrorCode::kConfigError, "'" + path + "' is not valid JSON: " + e.what());
  }
  return from_json(j);
}

std::string default_config_json() { return PipelineConfig::defaults().to_json().dump(2) + "\n"; }

std::uint64_t derive_seed(std::uint64_t seed, std::string_view purpose) {
  std::uint64_t h = 14695981039346656037ULL;
  auto mix = [&](unsigned char byte) {
    h ^= byte;
    h *= 1099511628211ULL;
  };
  for (int i = 0; i < 8; ++i) mix(static_cast<unsigned char>(seed >> (8 * i)));
  for (char c : purpose) mix(static_cast<unsigned char>(c));
  // splitmix64 finalizer
  h ^= h >> 30;
  h *= 0xbf58476d1ce4e5b9ULL;
  h ^= h >> 27;
  h *= 0x94d049bb133111ebULL;
  h ^= h >> 31;
  return h;
}

std::string sha256_hex(std::string_view data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    fail(ErrorCode::kIo, "SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 15];
  }
  return out;
}

Pipeline::Pipeline(PipelineConfig config, std::string out_dir, std::string config_dir)
    : config_(std::move(config)), out_dir_(std::move(out_dir)), config_dir_(std::move(config_dir)) {}

std::string Pipeline::fingerprints_path() const { return (fs::path(out_dir_) / "fingerprints.csv").string(); }
std::string Pipeline::split_path() const { return (fs::path(out_dir_) / "split.csv").string(); }
std::string Pipeline::pretrained_path() const {
  return (fs::path(out_dir_) / config_.paths.checkpoint_dir / "pretrained.pkmodel.json").string();
}
std::string Pipeline::multitask_path() const {
  return (fs::path(out_dir_) / config_.paths.checkpoint_dir / "multitask.pkmodel.json").string();
}
std::string Pipeline::member_path(const std::string& name) const {
  return (fs::path(out_dir_) / config_.paths.checkpoint_dir / ("deeppharm_" + name + ".pkmodel.json"))
      .string();
}
std::string Pipeline::consensus_path() const {
  return (fs::path(out_dir_) / config_.paths.checkpoint_dir / "consensus.json").string();
}
std::string Pipeline::report_json_path() const {
  return (fs::path(out_dir_) / config_.paths.report_dir / "report.json").string();
}
std::string Pipeline::report_text_path() const {
  return (fs::path(out_dir_) / config_.paths.report_dir / "report.txt").string();
}
std::string Pipeline::predictions_path() const { return (fs::path(out_dir_) / "predictions.csv").string(); }
std::string Pipeline::manifest_path() const { return (fs::path(out_dir_) / "run_manifest.json").string(); }

std::string Pipeline::resolve_input(const std::string& path) const {
  const fs::path p(path);
  if (p.is_absolute()) return p.string();
  return (fs::path(config_dir_) / p).lexically_normal().string();
}

void Pipeline::log(const std::string& line) const {
  if (log_) log_(line);
}

void Pipeline::run(std::string_view subcommand) {
  Artifacts a;
  fs::create_directories(out_dir_);
  if (subcommand == "fingerprint") {
    run_fingerprint(a);
  } else if (subcommand == "split") {
    run_split(a);
  } else if (subcommand == "pretrain") {
    run_pretrain(a);
  } else if (subcommand == "train") {
    run_train(a);
  } else if (subcommand == "transfer") {
    run_transfer(a);
  } else if (subcommand == "consensus") {
    run_consensus(a);
  } else if (subcommand == "evaluate") {
    run_evaluate(a);
  } else if (subcommand == "predict") {
    run_predict(a);
  } else {
    fail(ErrorCode::kInvalidArgument, "unknown subcommand '" + std::string(subcommand) + "'");
  }
  write_manifest(subcommand, a);
}

Dataset Pipeline::load_normalized_dataset(Artifacts& a) const {
  const std::string path = resolve_input(config_.paths.dataset);
  a.inputs.push_back(path);
  Dataset raw = load_pk_dataset(path);
  return normalize_targets(raw, NormalizationSpec{config_.divisors});
}

Matrix Pipeline::load_fingerprints(const Dataset& ds, Artifacts& a) const {
  const std::string path = fingerprints_path();
  require_artifact(path, "fingerprint");
  a.inputs.push_back(path);
  std::ifstream in(path);
  if (!in) fail(ErrorCode::kIo, "cannot open '" + path + "'");
  std::unordered_map<std::string, Fingerprint> by_id;
  std::string line;
  std::getline(in, line);
  const auto header = text::split_csv_line(line);
  if (header.size() != 2 || header[0] != "id" || header[1] != "ecfp") {
    fail(ErrorCode::kCorruptFile, "'" + path + "' must have header id,ecfp");
  }
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    const auto f = text::split_csv_line(line);
    if (f.size() != 2) fail(ErrorCode::kCorruptFile, "malformed row in '" + path + "'");
    by_id.emplace(f[0], Fingerprint::from_string(f[1]));
  }
  const std::size_t nbits = config_.fingerprint.nbits;
  Matrix m = Matrix::Zero(static_cast<Eigen::Index>(ds.size()), static_cast<Eigen::Index>(nbits));
  for (std::size_t r = 0; r < ds.size(); ++r) {
    auto it = by_id.find(ds.records[r].id);
    if (it == by_id.end()) {
      fail(ErrorCode::kMissingArtifact,
           "no fingerprint for '" + ds.records[r].id + "'; rerun the 'fingerprint' subcommand");
    }
    if (it->second.size() != nbits) {
      fail(ErrorCode::kBadWidth, "fingerprint width " + std::to_string(it->second.size()) +
                                     " does not match fingerprint.nbits");
    }
    for (std::size_t b = 0; b < nbits; ++b) {
      if (it->second.test(b)) m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(b)) = 1.0;
    }
  }
  return m;
}

std::vector<std::size_t> Pipeline::load_split(const Dataset& ds, Artifacts& a, int subset) const {
  const std::string path = split_path();
  require_artifact(path, "split");
  a.inputs.push_back(path);
  const std::string raw = text::read_file(path);
  std::istringstream in(raw);
  std::string line;
  std::getline(in, line);
  const auto header = text::split_csv_line(line);
  if (header.size() != 2 || header[0] != "id" || header[1] != "subset") {
    fail(ErrorCode::kCorruptFile, "'" + path + "' must have header id,subset");
  }
  std::unordered_map<std::string, int> assignment;
  while (std::getline(in, line)) {
    if (text::trim(line).empty()) continue;
    const auto f = text::split_csv_line(line);
    if (f.size() != 2) fail(ErrorCode::kCorruptFile, "malformed row in '" + path + "'");
    int s = -1;
    for (int k = 0; k < 3; ++k) {
      if (f[1] == subset_name(static_cast<Subset>(k))) s = k;
    }
    if (s < 0) fail(ErrorCode::kCorruptFile, "unknown subset '" + f[1] + "' in '" + path + "'");
    assignment[f[0]] = s;
  }
  std::vector<std::size_t> out;
  for (std::size_t r = 0; r < ds.size(); ++r) {
    auto it = assignment.find(ds.records[r].id);
    if (it == assignment.end()) {
      fail(ErrorCode::kMissingArtifact,
           "split has no entry for '" + ds.records[r].id + "'; rerun the 'split' subcommand");
    }
    if (it->second == subset) out.push_back(r);
  }
  return out;
}

void Pipeline::write_manifest(std::string_view subcommand, const Artifacts& a) const {
  const std::string path = manifest_path();
  json manifest = json::object();
  if (fs::exists(path)) {
    try {
      manifest = json::parse(text::read_file(path));
      if (!manifest.is_object()) manifest = json::object();
    } catch (const json::exception&) {
      manifest = json::object();
    }
  }
  auto digests = [](const std::vector<std::string>& paths) {
    json j = json::object();
    for (const auto& p : paths) {
      if (fs::exists(p)) j[p] = sha256_hex(text::read_file(p));
    }
    return j;
  };
  const std::string config_text = config_.to_json().dump();
  manifest["version"] = kVersion;
  manifest["steps"][std::string(subcommand)] = {{"seed", config_.seed},
                                                 {"threads", threads_},
                                                 {"config", config_.to_json()},
                                                 {"config_sha256", sha256_hex(config_text)},
                                                 {"inputs", digests(a.inputs)},
                                                 {"outputs", digests(a.outputs)}};
  write_json(path, manifest);
}

void Pipeline::run_fingerprint(Artifacts& a) {
  const std::string path = resolve_input(config_.paths.dataset);
  a.inputs.push_back(path);
  const Dataset ds = load_pk_dataset(path);
  const auto& fc = config_.fingerprint;
  std::string out = "id,ecfp\n";
  std::size_t bits = 0;
  for (const auto& rec : ds.records) {
    Fingerprint fp;
    if (fc.use_precomputed) {
      if (rec.ecfp.empty()) {
        fail(ErrorCode::kMissingColumn, "record '" + rec.id + "' has no precomputed ecfp");
      }
      fp = Fingerprint::from_string(rec.ecfp);
      if (fp.size() != fc.nbits) {
        fail(ErrorCode::kBadWidth, "precomputed ecfp of '" + rec.id + "' has " +
                                       std::to_string(fp.size()) + " bits");
      }
    } else {
      fp = ecfp_from_smiles(rec.smiles, fc.radius, fc.nbits);
    }
    bits += fp.set_count();
    out += text::csv_field(rec.id) + "," + fp.to_string() + "\n";
  }
  const std::string out_path = fingerprints_path();
  text::write_file(ensure_parent(out_path), out);
  a.outputs.push_back(out_path);
  log("fingerprinted " + std::to_string(ds.size()) + " molecules, mean " +
      text::format_double(ds.size() ? static_cast<double>(bits) / static_cast<double>(ds.size()) : 0.0) +
      " bits set");
}

void Pipeline::run_split(Artifacts& a) {
  const Dataset ds = load_normalized_dataset(a);
  const std::uint64_t seed = derive_seed(config_.seed, "split");
  const SplitAssignment split =
      config_.split.method == "random"
          ? random_split(ds, seed)
          : mdfiswd_split(ds, DistanceWeights{config_.split.w1, config_.split.w2}, seed);
  const auto labels = split.labels(ds.size());
  std::string out = "id,subset\n";
  for (std::size_t r = 0; r < ds.size(); ++r) {
    out += text::csv_field(ds.records[r].id) + "," + std::string(subset_name(labels[r])) + "\n";
  }
  const std::string out_path = split_path();
  text::write_file(ensure_parent(out_path), out);
  a.outputs.push_back(out_path);

  json report;
  report["method"] = config_.split.method;
  report["w1"] = config_.split.w1;
  report["w2"] = config_.split.w2;
  report["seed"] = seed;
  report["sizes"] = {{"train", split.train.size()}, {"val", split.validation.size()}, {"test", split.test.size()}};
  report["subset_error"] = json::object();
  log("split " + std::to_string(ds.size()) + " records: train " + std::to_string(split.train.size()) +
      ", val " + std::to_string(split.validation.size()) + ", test " + std::to_string(split.test.size()));
  for (std::size_t t = 0; t < kNumTasks; ++t) {
    const std::string name(task_name(t));
    try {
      const double se = subset_error(ds, split, t, config_.split.se_groups);
      report["subset_error"][name] = se;
      log("  SE " + name + " = " + text::format_double(se));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kEmptySubsetForTask) throw;
      report["subset_error"][name] = nullptr;
      log("  SE " + name + " undefined: " + e.what());
    }
  }
  const std::string report_path = (fs::path(out_dir_) / config_.paths.report_dir / "split_report.json").string();
  write_json(report_path, report);
  a.outputs.push_back(report_path);
}

void Pipeline::run_pretrain(Artifacts& a) {
  if (config_.paths.bioactivity.empty()) {
    fail(ErrorCode::kMissingArtifact, "paths.bioactivity is not configured");
  }
  const std::string path = resolve_input(config_.paths.bioactivity);
  if (!fs::exists(path)) fail(ErrorCode::kMissingArtifact, "bioactivity file '" + path + "' not found");
  a.inputs.push_back(path);
  const auto& fc = config_.fingerprint;
  const BioactivityTable table = load_bioactivity(path, fc.radius, fc.nbits);
  log("bioactivity: " + std::to_string(table.rows_read) + " rows, " +
      std::to_string(table.molecule_count()) + " molecules, " + std::to_string(table.targets.size()) +
      " targets, " + std::to_string(table.positives) + " positives");

  std::vector<std::size_t> order(table.molecule_count());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::mt19937_64 rng(derive_seed(config_.seed, "pretrain.split"));
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng() % i]);
  const auto n_val = static_cast<std::size_t>(
      std::floor(config_.pretrain_validation_fraction * static_cast<double>(order.size())));
  std::vector<std::size_t> val(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_val));
  std::vector<std::size_t> trn(order.begin() + static_cast<std::ptrdiff_t>(n_val), order.end());
  std::sort(val.begin(), val.end());
  std::sort(trn.begin(), trn.end());

  const NetworkConfig& nc = config_.pretrain;
  std::vector<std::size_t> hidden = nc.layers;
  hidden.push_back(nc.task_layer);
  const LayerSpec spec = make_spec(fc.nbits, hidden, table.targets.size(), nc.activations);
  NetworkModel model = init_network(spec, derive_seed(config_.seed, "pretrain.init"), nc.adam());
  model.outputs = table.targets;
  BioactivityBatchSource train_source(table, trn);
  const auto cfg = train_config(nc, nc.epochs, derive_seed(config_.seed, "pretrain.shuffle"),
                                WeightedBinaryLoss{nc.pos_neg_weights[0], nc.pos_neg_weights[1]});
  const TrainingHistory history = train(model, train_source, cfg);
  for (const auto& e : history) {
    log("pretrain epoch " + std::to_string(e.epoch) + " loss " + text::format_double(e.train_loss));
  }

  auto subset_recall = [&](const std::vector<std::size_t>& mols) -> json {
    if (mols.empty()) return nullptr;
    BioactivityBatchSource src(table, mols);
    std::vector<double> p, l;
    constexpr std::size_t kChunk = 256;
    Batch b;
    std::vector<std::size_t> rows;
    for (std::size_t start = 0; start < mols.size(); start += kChunk) {
      rows.clear();
      for (std::size_t i = start; i < std::min(mols.size(), start + kChunk); ++i) rows.push_back(i);
      src.fill(rows, b);
      const Matrix pred = forward(model, b.inputs);
      for (Eigen::Index i = 0; i < pred.rows(); ++i) {
        for (Eigen::Index t = 0; t < pred.cols(); ++t) {
          if (b.mask(i, t) == 0.0) continue;
          p.push_back(pred(i, t));
          l.push_back(b.targets(i, t));
        }
      }
    }
    try {
      return recall(p, l);
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kNoPositives || e.code() == ErrorCode::kEmptyInput) return nullptr;
      throw;
    }
  };
  json report;
  report["targets"] = table.targets.size();
  report["molecules"] = {{"train", trn.size()}, {"val", val.size()}};
  report["recall"] = {{"train", subset_recall(trn)}, {"val", subset_recall(val)}};
  report["history"] = history_to_json(history);
  const std::string out_path = pretrained_path();
  save_model(model, ensure_parent(out_path));
  a.outputs.push_back(out_path);
  const std::string report_path = (fs::path(out_dir_) / config_.paths.report_dir / "pretrain_report.json").string();
  write_json(report_path, report);
  a.outputs.push_back(report_path);
  log("pretrain recall train " + report["recall"]["train"].dump() + ", val " + report["recall"]["val"].dump());
}

void Pipeline::run_train(Artifacts& a) {
  const Dataset ds = load_normalized_dataset(a);
  const Matrix fps = load_fingerprints(ds, a);
  const auto trn = load_split(ds, a, 0);
  const auto val = load_split(ds, a, 1);
  const NetworkConfig& nc = config_.multitask;
  const LayerSpec spec = make_spec(config_.fingerprint.nbits, nc.layers, kNumTasks, nc.activations);
  NetworkModel model = init_network(spec, derive_seed(config_.seed, "multitask.init"), nc.adam());
  model.outputs = task_names(all_tasks());
  DenseBatchSource source(make_batch(ds, fps, trn, all_tasks()));
  const Batch validation = make_batch(ds, fps, val, all_tasks());
  const auto cfg = train_config(
      nc, nc.epochs, derive_seed(config_.seed, "multitask.shuffle"),
      MultitaskLoss{std::vector<double>(nc.task_weights.begin(), nc.task_weights.end())});
  const TrainingHistory history = train(model, source, cfg, val.empty() ? nullptr : &validation);
  if (!history.empty()) {
    log("multitask: " + std::to_string(history.size()) + " epochs, final loss " +
        text::format_double(history.back().train_loss));
  }
  const std::string out_path = multitask_path();
  save_model(model, ensure_parent(out_path));
  a.outputs.push_back(out_path);
  const std::string report_path =
      (fs::path(out_dir_) / config_.paths.report_dir / "multitask_history.json").string();
  write_json(report_path, history_to_json(history));
  a.outputs.push_back(report_path);
}

void Pipeline::run_transfer(Artifacts& a) {
  const std::string pre_path = pretrained_path();
  require_artifact(pre_path, "pretrain");
  a.inputs.push_back(pre_path);
  const NetworkModel pretrained = load_model(pre_path);
  if (pretrained.spec.input_width() != config_.fingerprint.nbits) {
    fail(ErrorCode::kIncompatiblePretrained,
         "pretrained input width " + std::to_string(pretrained.spec.input_width()) +
             " does not match fingerprint.nbits");
  }
  const Dataset ds = load_normalized_dataset(a);
  const Matrix fps = load_fingerprints(ds, a);
  const auto trn = load_split(ds, a, 0);
  const auto val = load_split(ds, a, 1);
  const NetworkConfig& nc = config_.transfer;

  struct Result {
    TrainingHistory history;
    std::exception_ptr error;
  };
  std::vector<Result> results(config_.members.size());
  auto run_member = [&](std::size_t i) {
    try {
      const auto& mc = config_.members[i];
      std::vector<std::size_t> tasks;
      std::vector<double> weights;
      for (const auto& t : mc.tasks) {
        tasks.push_back(*task_from_name(t));
        weights.push_back(nc.task_weights[tasks.back()]);
      }
      NetworkModel model =
          transfer_feature_layers(pretrained, mc.task_layer, tasks.size(),
                                  derive_seed(config_.seed, "transfer.init." + mc.name), config_.freeze_features);
      model.adam.config = nc.adam();
      model.outputs = task_names(tasks);
      DenseBatchSource source(make_batch(ds, fps, trn, tasks));
      const Batch validation = make_batch(ds, fps, val, tasks);
      const auto cfg = train_config(nc, mc.epochs, derive_seed(config_.seed, "transfer.shuffle." + mc.name),
                                    MultitaskLoss{weights});
      results[i].history = train(model, source, cfg, val.empty() ? nullptr : &validation);
      save_model(model, ensure_parent(member_path(mc.name)));
    } catch (...) {
      results[i].error = std::current_exception();
    }
  };
  const std::size_t workers = std::min(threads_, config_.members.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < config_.members.size(); ++i) run_member(i);
  } else {
    std::mutex mu;
    std::size_t next = 0;
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (;;) {
          std::size_t i;
          {
            std::lock_guard<std::mutex> lock(mu);
            if (next >= config_.members.size()) return;
            i = next++;
          }
          run_member(i);
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (const auto& r : results) {
    if (r.error) std::rethrow_exception(r.error);
  }
  json report = json::object();
  for (std::size_t i = 0; i < config_.members.size(); ++i) {
    const auto& mc = config_.members[i];
    a.outputs.push_back(member_path(mc.name));
    report[mc.name] = history_to_json(results[i].history);
    if (!results[i].history.empty()) {
      log("member " + mc.name + ": " + std::to_string(results[i].history.size()) + " epochs, final loss " +
          text::format_double(results[i].history.back().train_loss));
    }
  }
  const std::string report_path =
      (fs::path(out_dir_) / config_.paths.report_dir / "transfer_history.json").string();
  write_json(report_path, report);
  a.outputs.push_back(report_path);
}

void Pipeline::run_consensus(Artifacts& a) {
  const Dataset ds = load_normalized_dataset(a);
  const Matrix fps = load_fingerprints(ds, a);
  const auto val = load_split(ds, a, 1);
  std::vector<ConsensusMember> members;
  std::vector<std::string> files;
  for (const auto& mc : config_.members) {
    const std::string path = member_path(mc.name);
    require_artifact(path, "transfer");
    a.inputs.push_back(path);
    ConsensusMember m;
    m.name = mc.name;
    m.model = load_model(path);
    m.output_tasks = output_tasks_of(m.model);
    members.push_back(std::move(m));
    files.push_back(fs::path(path).filename().string());
  }
  Matrix val_inputs(static_cast<Eigen::Index>(val.size()), fps.cols());
  for (std::size_t i = 0; i < val.size(); ++i) {
    val_inputs.row(static_cast<Eigen::Index>(i)) = fps.row(static_cast<Eigen::Index>(val[i]));
  }
  const ConsensusModel consensus = build_consensus(std::move(members), val_inputs, ds.subset(val));
  for (std::size_t t = 0; t < kNumTasks; ++t) {
    const std::size_t m = consensus.selection[t];
    const auto& s = *consensus.validation[m][t];
    log("consensus " + std::string(task_name(t)) + " <- " + consensus.members[m].name + " (val acc " +
        text::format_double(s.accuracy) + "%, MAE " + text::format_double(s.mae) + ")");
  }
  const std::string out_path = consensus_path();
  save_consensus_manifest(consensus, files, ensure_parent(out_path));
  a.outputs.push_back(out_path);
}

void Pipeline::run_evaluate(Artifacts& a) {
  const Dataset ds = load_normalized_dataset(a);
  const Matrix fps = load_fingerprints(ds, a);
  std::array<std::vector<std::size_t>, 3> subsets;
  for (int s = 0; s < 3; ++s) subsets[static_cast<std::size_t>(s)] = load_split(ds, a, s);

  std::vector<std::pair<std::string, Matrix>> predictions;
  if (fs::exists(multitask_path())) {
    a.inputs.push_back(multitask_path());
    predictions.emplace_back("multitask", task_predictions(load_model(multitask_path()), fps));
  }
  if (fs::exists(consensus_path())) {
    const ConsensusModel consensus = load_consensus(consensus_path());
    a.inputs.push_back(consensus_path());
    for (const auto& m : consensus.members) {
      predictions.emplace_back("deeppharm_" + m.name, task_predictions(m.model, fps));
    }
    predictions.emplace_back("consensus", consensus.predict(fps));
  }
  if (predictions.empty()) {
    fail(ErrorCode::kMissingArtifact, "no trained model found; run 'train' or 'consensus' first");
  }

  std::vector<ModelReport> reports;
  for (const auto& [name, pred] : predictions) {
    ModelReport rep;
    rep.model = name;
    for (std::size_t s = 0; s < 3; ++s) {
      const auto& idx = subsets[s];
      if (idx.empty()) continue;
      const Dataset slice = ds.subset(idx);
      Matrix p(static_cast<Eigen::Index>(idx.size()), static_cast<Eigen::Index>(kNumTasks));
      for (std::size_t i = 0; i < idx.size(); ++i) {
        p.row(static_cast<Eigen::Index>(i)) = pred.row(static_cast<Eigen::Index>(idx[i]));
      }
      std::vector<std::size_t> tasks;
      for (std::size_t t = 0; t < kNumTasks; ++t) {
        if (slice.present_count(t) > 0 && !std::isnan(pred(0, static_cast<Eigen::Index>(t)))) {
          tasks.push_back(t);
        }
      }
      rep.subsets[s] = evaluate(p, slice, tasks);
    }
    reports.push_back(std::move(rep));
  }
  const NormalizationSpec norm{config_.divisors};
  write_json(report_json_path(), report_to_json(reports, norm));
  const std::string table = report_to_text(reports, norm);
  text::write_file(ensure_parent(report_text_path()), table);
  a.outputs.push_back(report_json_path());
  a.outputs.push_back(report_text_path());
  std::istringstream lines(table);
  for (std::string line; std::getline(lines, line);) log(line);
}

void Pipeline::run_predict(Artifacts& a) {
  const std::string path = resolve_input(config_.paths.dataset);
  const Dataset ds = load_pk_dataset(path);
  a.inputs.push_back(path);
  const Matrix fps = load_fingerprints(ds, a);
  Matrix pred;
  if (fs::exists(consensus_path())) {
    a.inputs.push_back(consensus_path());
    pred = load_consensus(consensus_path()).predict(fps);
  } else if (fs::exists(multitask_path())) {
    a.inputs.push_back(multitask_path());
    pred = task_predictions(load_model(multitask_path()), fps);
  } else {
    fail(ErrorCode::kMissingArtifact, "no trained model found; run 'train' or 'consensus' first");
  }
  const NormalizationSpec norm{config_.divisors};
  std::string out = "id";
  for (std::size_t t = 0; t < kNumTasks; ++t) out += "," + std::string(task_name(t));
  out += "\n";
  for (std::size_t r = 0; r < ds.size(); ++r) {
    out += text::csv_field(ds.records[r].id);
    for (std::size_t t = 0; t < kNumTasks; ++t) {
      const double v = pred(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(t));
      out += ",";
      if (!std::isnan(v)) out += text::format_double(norm.denormalize(t, v));
    }
    out += "\n";
  }
  text::write_file(ensure_parent(predictions_path()), out);
  a.outputs.push_back(predictions_path());
  log("wrote predictions for " + std::to_string(ds.size()) + " molecules");
}

}  // namespace deeppharm
