// Exercises the shared library through its C header only.
#include <gtest/gtest.h>

#include <cstdio>
#include <cstring>
#include <filesystem>
#include <string>
#include <vector>

#include "deeppharm/deeppharm.h"

namespace fs = std::filesystem;

namespace {

const std::string kFixtures = FIXTURE_DIR;

}  // namespace

TEST(CApi, VersionAndStatusNames) {
  EXPECT_STREQ(dp_version(), "1.0.0");
  EXPECT_STREQ(dp_status_name(DP_OK), "Ok");
  EXPECT_STREQ(dp_status_name(DP_ERR_CONFIG), "ConfigError");
  EXPECT_STREQ(dp_status_name(DP_ERR_MISSING_ARTIFACT), "MissingArtifact");
}

TEST(CApi, FingerprintAndErrors) {
  std::vector<uint8_t> bits(1024);
  ASSERT_EQ(dp_ecfp("C", 2, 1024, bits.data()), DP_OK);
  int on = 0;
  for (auto b : bits) on += b;
  EXPECT_EQ(on, 1);
  EXPECT_EQ(dp_ecfp("C(", 2, 1024, bits.data()), DP_ERR_UNBALANCED_BRANCH);
  EXPECT_NE(std::strlen(dp_last_error()), 0u);
  EXPECT_EQ(dp_ecfp("C", 2, 100, bits.data()), DP_ERR_BAD_WIDTH);
  EXPECT_EQ(dp_ecfp(nullptr, 2, 1024, bits.data()), DP_ERR_INVALID_ARGUMENT);
}

TEST(CApi, DatasetSplitAndError) {
  dp_dataset* ds = nullptr;
  EXPECT_EQ(dp_dataset_load("/nonexistent.csv", &ds), DP_ERR_IO);
  ASSERT_EQ(dp_dataset_load((kFixtures + "/pk_dataset.csv").c_str(), &ds), DP_OK);
  const size_t n = dp_dataset_size(ds);
  EXPECT_EQ(n, 300u);
  dp_split* split = nullptr;
  EXPECT_EQ(dp_split_mdfiswd(ds, 0.7, 0.3, 0, &split), DP_ERR_NOT_NORMALIZED);
  ASSERT_EQ(dp_dataset_normalize(ds, nullptr), DP_OK);
  EXPECT_EQ(dp_dataset_normalize(ds, nullptr), DP_ERR_ALREADY_NORMALIZED);
  double v = -1;
  int present = 0;
  ASSERT_EQ(dp_dataset_label(ds, 0, DP_TASK_PPBR, &v, &present), DP_OK);
  EXPECT_EQ(present, 1);
  EXPECT_NEAR(v, 0.46804, 1e-12);

  ASSERT_EQ(dp_split_mdfiswd(ds, 0.7, 0.3, 0, &split), DP_OK);
  EXPECT_EQ(dp_split_count(split, DP_SUBSET_TRAIN), 180u);
  EXPECT_EQ(dp_split_count(split, DP_SUBSET_VAL), 60u);
  EXPECT_EQ(dp_split_count(split, DP_SUBSET_TEST), 60u);
  std::vector<int> labels(n);
  ASSERT_EQ(dp_split_labels(split, n, labels.data()), DP_OK);
  double se = -1;
  ASSERT_EQ(dp_subset_error(ds, split, DP_TASK_HL, 10, &se), DP_OK);
  EXPECT_GE(se, 0.0);
  EXPECT_EQ(dp_subset_error(ds, split, DP_TASK_HL, 1, &se), DP_ERR_BAD_GROUP_COUNT);
  dp_split_free(split);

  const std::string out = (fs::temp_directory_path() / "deeppharm_capi_ds.csv").string();
  EXPECT_EQ(dp_dataset_save(ds, out.c_str()), DP_OK);
  dp_dataset_free(ds);
}

TEST(CApi, ModelLifecycle) {
  const size_t sizes[] = {6, 5, 4, 3};
  dp_model* m = nullptr;
  ASSERT_EQ(dp_model_init(sizes, 4, 9, &m), DP_OK);
  EXPECT_EQ(dp_model_input_width(m), 6u);
  EXPECT_EQ(dp_model_output_width(m), 3u);
  EXPECT_EQ(dp_model_layer_count(m), 3u);
  std::vector<double> x(2 * 6, 0.25), y(2 * 3), z(2 * 3);
  ASSERT_EQ(dp_model_forward(m, x.data(), 2, y.data()), DP_OK);
  for (double v : y) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
  const std::string path = (fs::temp_directory_path() / "deeppharm_capi_model.json").string();
  ASSERT_EQ(dp_model_save(m, path.c_str()), DP_OK);
  dp_model* r = nullptr;
  ASSERT_EQ(dp_model_load(path.c_str(), &r), DP_OK);
  ASSERT_EQ(dp_model_forward(r, x.data(), 2, z.data()), DP_OK);
  EXPECT_EQ(y, z);

  dp_model* t = nullptr;
  ASSERT_EQ(dp_model_transfer(m, 7, 4, 1, 1, &t), DP_OK);
  EXPECT_EQ(dp_model_output_width(t), 4u);
  dp_model* bad = nullptr;
  const size_t shallow[] = {6, 3};
  ASSERT_EQ(dp_model_init(shallow, 2, 1, &bad), DP_OK);
  dp_model* fails = nullptr;
  EXPECT_EQ(dp_model_transfer(bad, 7, 4, 1, 0, &fails), DP_ERR_INCOMPATIBLE_PRETRAINED);
  EXPECT_EQ(fails, nullptr);
  const size_t empty[] = {6};
  EXPECT_EQ(dp_model_init(empty, 1, 1, &fails), DP_ERR_BAD_SPEC);
  dp_model_free(m);
  dp_model_free(r);
  dp_model_free(t);
  dp_model_free(bad);
  dp_model_free(nullptr);
}

TEST(CApi, Metrics) {
  const double p[] = {0.1, 0.5, 0.9, 0.3}, l[] = {0.15, 0.7, 0.9, 0.0};
  double out = 0;
  ASSERT_EQ(dp_accuracy_at(p, l, 4, 0.1, &out), DP_OK);
  EXPECT_DOUBLE_EQ(out, 50.0);
  ASSERT_EQ(dp_mae(p, l, 4, &out), DP_OK);
  EXPECT_NEAR(out, 0.1375, 1e-15);
  const double bl[] = {1, 1, 1, 0};
  ASSERT_EQ(dp_recall(p, bl, 4, 0.5, &out), DP_OK);
  EXPECT_NEAR(out, 2.0 / 3.0, 1e-15);
  const double zeros[] = {0, 0, 0, 0};
  EXPECT_EQ(dp_recall(p, zeros, 4, 0.5, &out), DP_ERR_NO_POSITIVES);
}

TEST(CApi, PipelineErrorsAndConfig) {
  char* json = nullptr;
  ASSERT_EQ(dp_default_config(&json), DP_OK);
  EXPECT_NE(std::strstr(json, "\"multitask\""), nullptr);
  dp_string_free(json);

  const fs::path bad = fs::temp_directory_path() / "deeppharm_capi_bad.json";
  std::FILE* f = std::fopen(bad.c_str(), "w");
  std::fputs("{\"unknown\": 1}", f);
  std::fclose(f);
  dp_pipeline* p = nullptr;
  EXPECT_EQ(dp_pipeline_create(bad.c_str(), "/tmp/x", &p), DP_ERR_CONFIG);

  const fs::path out = fs::temp_directory_path() / "deeppharm_capi_run";
  fs::remove_all(out);
  ASSERT_EQ(dp_pipeline_create((kFixtures + "/smoke_config.json").c_str(), out.c_str(), &p), DP_OK);
  int lines = 0;
  dp_pipeline_set_log(p, [](const char*, void* user) { ++*static_cast<int*>(user); }, &lines);
  EXPECT_EQ(dp_pipeline_run(p, "evaluate"), DP_ERR_MISSING_ARTIFACT);
  EXPECT_EQ(dp_pipeline_run(p, "nonsense"), DP_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(dp_pipeline_set_seed(p, 11), DP_OK);
  EXPECT_EQ(dp_pipeline_set_threads(p, 2), DP_OK);
  ASSERT_EQ(dp_pipeline_run(p, "split"), DP_OK);
  EXPECT_GT(lines, 0);
  EXPECT_TRUE(fs::exists(out / "split.csv"));
  dp_pipeline_free(p);
}
