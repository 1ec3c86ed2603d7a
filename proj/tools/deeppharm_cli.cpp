// Command-line driver for the pharmacokinetic pipeline. Talks to the library
// only through the C API.

#include <cstdint>
#include <cstdio>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "deeppharm/deeppharm.h"

namespace {

struct Options {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out = "out";
  std::size_t threads = 1;
  bool emit_default = false;
};

void print_line(const char* line, void*) {
  std::fputs(line, stdout);
  std::fputc('\n', stdout);
  std::fflush(stdout);
}

int report(dp_status status) {
  std::fprintf(stderr, "error [%s]: %s\n", dp_status_name(status), dp_last_error());
  return status == DP_ERR_CONFIG || status == DP_ERR_INVALID_ARGUMENT ? 2 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"deeppharm: pharmacokinetic property prediction with transfer and multitask learning"};
  Options opt;
  app.add_option("--config", opt.config, "JSON configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", opt.seed, "master random seed (overrides the config)");
  app.add_option("--out", opt.out, "artifact directory")->capture_default_str();
  app.add_option("--threads", opt.threads, "worker threads for transfer members")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  app.add_flag("--emit-default-config", opt.emit_default, "print the default configuration and exit");
  app.fallthrough();

  const char* descriptions[][2] = {
      {"fingerprint", "compute ECFP bit strings for the dataset"},
      {"split", "assign records to train/val/test"},
      {"pretrain", "train the bioactivity network"},
      {"train", "train the multitask network from scratch"},
      {"transfer", "fine-tune pretrained feature layers for each member"},
      {"consensus", "pick the best member per task on validation"},
      {"evaluate", "write the accuracy/MAE report"},
      {"predict", "write denormalized predictions"},
  };
  for (const auto& d : descriptions) app.add_subcommand(d[0], d[1]);
  app.require_subcommand(0, 1);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  if (opt.emit_default) {
    char* json = nullptr;
    if (dp_status s = dp_default_config(&json); s != DP_OK) return report(s);
    std::fputs(json, stdout);
    dp_string_free(json);
    return 0;
  }
  if (app.get_subcommands().empty()) {
    std::fputs(app.help().c_str(), stderr);
    return 2;
  }
  const std::string subcommand = app.get_subcommands().front()->get_name();

  dp_pipeline* pipeline = nullptr;
  dp_status s = dp_pipeline_create(opt.config.empty() ? nullptr : opt.config.c_str(), opt.out.c_str(),
                                   &pipeline);
  if (s != DP_OK) return report(s);
  if (opt.seed) s = dp_pipeline_set_seed(pipeline, *opt.seed);
  if (s == DP_OK) s = dp_pipeline_set_threads(pipeline, opt.threads);
  if (s == DP_OK) s = dp_pipeline_set_log(pipeline, print_line, nullptr);
  if (s == DP_OK) s = dp_pipeline_run(pipeline, subcommand.c_str());
  dp_pipeline_free(pipeline);
  return s == DP_OK ? 0 : report(s);
}
