#include "deeppharm/deeppharm.h"

#include <cstring>
#include <filesystem>
#include <new>
#include <string>

#include "core/data_model.hpp"
#include "core/error.hpp"
#include "core/fingerprint.hpp"
#include "core/metrics.hpp"
#include "core/neural.hpp"
#include "core/pipeline.hpp"
#include "core/splitter.hpp"
#include "core/transfer.hpp"

struct dp_dataset {
  deeppharm::Dataset ds;
};

struct dp_split {
  deeppharm::SplitAssignment split;
};

struct dp_model {
  deeppharm::NetworkModel model;
};

struct dp_pipeline {
  explicit dp_pipeline(deeppharm::Pipeline p) : pipeline(std::move(p)) {}
  deeppharm::Pipeline pipeline;
};

namespace {

thread_local std::string g_last_error;

template <class F>
dp_status guard(F&& f) {
  try {
    f();
    g_last_error.clear();
    return DP_OK;
  } catch (const deeppharm::Error& e) {
    g_last_error = e.what();
    return static_cast<dp_status>(static_cast<int>(e.code()));
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return DP_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DP_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown failure";
    return DP_ERR_INTERNAL;
  }
}

void need(const void* p, const char* what) {
  if (p == nullptr) {
    deeppharm::fail(deeppharm::ErrorCode::kInvalidArgument, std::string(what) + " is null");
  }
}

std::size_t task_index(int task) {
  if (task < 0 || task >= DP_NUM_TASKS) {
    deeppharm::fail(deeppharm::ErrorCode::kInvalidArgument, "task index out of range");
  }
  return static_cast<std::size_t>(task);
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out == nullptr) throw std::bad_alloc();
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* dp_version(void) { return "1.0.0"; }

const char* dp_status_name(dp_status status) {
  static thread_local std::string name;
  if (status == DP_OK) return "Ok";
  if (status == DP_ERR_INTERNAL) return "Internal";
  name = deeppharm::error_code_name(static_cast<deeppharm::ErrorCode>(status));
  return name.c_str();
}

const char* dp_last_error(void) { return g_last_error.c_str(); }

void dp_string_free(char* s) { std::free(s); }

dp_status dp_ecfp(const char* smiles, int radius, size_t nbits, uint8_t* bits_out) {
  return guard([&] {
    need(smiles, "smiles");
    need(bits_out, "bits_out");
    const auto fp = deeppharm::ecfp_from_smiles(smiles, radius, nbits);
    for (std::size_t i = 0; i < nbits; ++i) bits_out[i] = fp.test(i) ? 1 : 0;
  });
}

dp_status dp_dataset_load(const char* path, dp_dataset** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    auto ds = std::make_unique<dp_dataset>();
    ds->ds = deeppharm::load_pk_dataset(path);
    *out = ds.release();
  });
}

void dp_dataset_free(dp_dataset* ds) { delete ds; }

size_t dp_dataset_size(const dp_dataset* ds) { return ds ? ds->ds.size() : 0; }

dp_status dp_dataset_normalize(dp_dataset* ds, const double* divisors) {
  return guard([&] {
    need(ds, "dataset");
    deeppharm::NormalizationSpec spec;
    if (divisors) std::copy(divisors, divisors + DP_NUM_TASKS, spec.divisors.begin());
    ds->ds = deeppharm::normalize_targets(ds->ds, spec);
  });
}

dp_status dp_dataset_label(const dp_dataset* ds, size_t row, int task, double* value, int* present) {
  return guard([&] {
    need(ds, "dataset");
    need(value, "value");
    need(present, "present");
    const std::size_t t = task_index(task);
    if (row >= ds->ds.size()) deeppharm::fail(deeppharm::ErrorCode::kInvalidArgument, "row out of range");
    const auto& rec = ds->ds.records[row];
    *present = rec.mask[t] ? 1 : 0;
    *value = rec.mask[t] ? rec.labels[t] : 0.0;
  });
}

dp_status dp_dataset_save(const dp_dataset* ds, const char* path) {
  return guard([&] {
    need(ds, "dataset");
    need(path, "path");
    deeppharm::save_pk_dataset(ds->ds, path);
  });
}

dp_status dp_split_mdfiswd(const dp_dataset* ds, double w1, double w2, uint64_t seed, dp_split** out) {
  return guard([&] {
    need(ds, "dataset");
    need(out, "out");
    *out = nullptr;
    auto s = std::make_unique<dp_split>();
    s->split = deeppharm::mdfiswd_split(ds->ds, deeppharm::DistanceWeights{w1, w2}, seed);
    *out = s.release();
  });
}

dp_status dp_split_random(const dp_dataset* ds, uint64_t seed, dp_split** out) {
  return guard([&] {
    need(ds, "dataset");
    need(out, "out");
    *out = nullptr;
    auto s = std::make_unique<dp_split>();
    s->split = deeppharm::random_split(ds->ds, seed);
    *out = s.release();
  });
}

void dp_split_free(dp_split* split) { delete split; }

size_t dp_split_count(const dp_split* split, int subset) {
  if (!split || subset < 0 || subset > 2) return 0;
  return split->split.indices(static_cast<deeppharm::Subset>(subset)).size();
}

dp_status dp_split_labels(const dp_split* split, size_t n, int* labels_out) {
  return guard([&] {
    need(split, "split");
    need(labels_out, "labels_out");
    const auto& s = split->split;
    if (n != s.train.size() + s.validation.size() + s.test.size()) {
      deeppharm::fail(deeppharm::ErrorCode::kShapeMismatch, "n does not match the split size");
    }
    const auto labels = s.labels(n);
    for (std::size_t i = 0; i < n; ++i) labels_out[i] = static_cast<int>(labels[i]);
  });
}

dp_status dp_subset_error(const dp_dataset* ds, const dp_split* split, int task, int ngroups, double* out) {
  return guard([&] {
    need(ds, "dataset");
    need(split, "split");
    need(out, "out");
    *out = deeppharm::subset_error(ds->ds, split->split, task_index(task), ngroups);
  });
}

dp_status dp_model_init(const size_t* sizes, size_t count, uint64_t seed, dp_model** out) {
  return guard([&] {
    need(sizes, "sizes");
    need(out, "out");
    *out = nullptr;
    auto m = std::make_unique<dp_model>();
    m->model = deeppharm::init_network(
        deeppharm::LayerSpec::dense(std::vector<std::size_t>(sizes, sizes + count)), seed);
    *out = m.release();
  });
}

dp_status dp_model_load(const char* path, dp_model** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = nullptr;
    auto m = std::make_unique<dp_model>();
    m->model = deeppharm::load_model(path);
    *out = m.release();
  });
}

dp_status dp_model_save(const dp_model* model, const char* path) {
  return guard([&] {
    need(model, "model");
    need(path, "path");
    deeppharm::save_model(model->model, path);
  });
}

void dp_model_free(dp_model* model) { delete model; }

size_t dp_model_input_width(const dp_model* model) { return model ? model->model.spec.input_width() : 0; }
size_t dp_model_output_width(const dp_model* model) { return model ? model->model.spec.output_width() : 0; }
size_t dp_model_layer_count(const dp_model* model) { return model ? model->model.layer_count() : 0; }

dp_status dp_model_forward(const dp_model* model, const double* inputs, size_t rows, double* outputs) {
  return guard([&] {
    need(model, "model");
    need(inputs, "inputs");
    need(outputs, "outputs");
    using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const auto in = static_cast<Eigen::Index>(model->model.spec.input_width());
    const auto width = static_cast<Eigen::Index>(model->model.spec.output_width());
    const auto n = static_cast<Eigen::Index>(rows);
    const deeppharm::Matrix x = Eigen::Map<const RowMajor>(inputs, n, in);
    Eigen::Map<RowMajor>(outputs, n, width) = deeppharm::forward(model->model, x);
  });
}

dp_status dp_model_transfer(const dp_model* pretrained, size_t task_layer, size_t out_width, uint64_t seed,
                            int freeze_features, dp_model** out) {
  return guard([&] {
    need(pretrained, "pretrained");
    need(out, "out");
    *out = nullptr;
    auto m = std::make_unique<dp_model>();
    m->model = deeppharm::transfer_feature_layers(pretrained->model, task_layer, out_width, seed,
                                                  freeze_features != 0);
    *out = m.release();
  });
}

dp_status dp_accuracy_at(const double* pred, const double* label, size_t n, double threshold, double* out) {
  return guard([&] {
    need(out, "out");
    if (n > 0) {
      need(pred, "pred");
      need(label, "label");
    }
    *out = deeppharm::accuracy_at({pred, n}, {label, n}, threshold);
  });
}

dp_status dp_mae(const double* pred, const double* label, size_t n, double* out) {
  return guard([&] {
    need(out, "out");
    if (n > 0) {
      need(pred, "pred");
      need(label, "label");
    }
    *out = deeppharm::mae({pred, n}, {label, n});
  });
}

dp_status dp_recall(const double* pred, const double* label, size_t n, double cutoff, double* out) {
  return guard([&] {
    need(out, "out");
    if (n > 0) {
      need(pred, "pred");
      need(label, "label");
    }
    *out = deeppharm::recall({pred, n}, {label, n}, cutoff);
  });
}

dp_status dp_default_config(char** json_out) {
  return guard([&] {
    need(json_out, "json_out");
    *json_out = copy_string(deeppharm::default_config_json());
  });
}

dp_status dp_pipeline_create(const char* config_path, const char* out_dir, dp_pipeline** out) {
  return guard([&] {
    need(out_dir, "out_dir");
    need(out, "out");
    *out = nullptr;
    deeppharm::PipelineConfig config = deeppharm::PipelineConfig::defaults();
    std::string config_dir = ".";
    if (config_path != nullptr) {
      config = deeppharm::PipelineConfig::load(config_path);
      const auto parent = std::filesystem::path(config_path).parent_path();
      if (!parent.empty()) config_dir = parent.string();
    }
    *out = new dp_pipeline(deeppharm::Pipeline(std::move(config), out_dir, config_dir));
  });
}

void dp_pipeline_free(dp_pipeline* p) { delete p; }

dp_status dp_pipeline_set_seed(dp_pipeline* p, uint64_t seed) {
  return guard([&] {
    need(p, "pipeline");
    p->pipeline.set_seed(seed);
  });
}

dp_status dp_pipeline_set_threads(dp_pipeline* p, size_t threads) {
  return guard([&] {
    need(p, "pipeline");
    p->pipeline.set_threads(threads);
  });
}

dp_status dp_pipeline_set_log(dp_pipeline* p, dp_log_fn fn, void* user) {
  return guard([&] {
    need(p, "pipeline");
    if (fn == nullptr) {
      p->pipeline.set_log(nullptr);
      return;
    }
    p->pipeline.set_log([fn, user](std::string_view line) {
      const std::string s(line);
      fn(s.c_str(), user);
    });
  });
}

dp_status dp_pipeline_run(dp_pipeline* p, const char* subcommand) {
  return guard([&] {
    need(p, "pipeline");
    need(subcommand, "subcommand");
    p->pipeline.run(subcommand);
  });
}

}  // extern "C"
