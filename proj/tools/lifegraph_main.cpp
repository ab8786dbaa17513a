#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "lifepattern/errors.hpp"
#include "lifepattern/parallel.hpp"
#include "lifepattern/pipeline.hpp"

namespace {

enum ExitCode { kOk = 0, kConfig = 1, kMissing = 2, kInvariant = 3 };

int fail(int code, std::string_view kind, std::string_view stage, std::string_view what) {
  std::string msg(what);
  for (auto& c : msg)
    if (c == '\n') c = ' ';
  std::cerr << "lifegraph: error=" << kind << " stage=" << stage << " reason=" << msg << '\n';
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  using namespace lifepattern;

  CLI::App app{"Life-pattern clustering from GPS trajectories via metagraph embedding"};
  std::string stage_arg;
  std::string config_path;
  std::string output_dir;
  int threads = 0;
  app.add_option("stage", stage_arg,
                 "synth | extract-stays | detect-places | build-graph | factorize | cluster | analyze | "
                 "compare-baseline | pipeline")
      ->required();
  app.add_option("--config", config_path, "Sectioned key = value config file")->required();
  app.add_option("--threads", threads, "Worker thread cap (0 = all cores); results do not depend on it")
      ->check(CLI::NonNegativeNumber);
  app.add_option("--output-dir", output_dir, "Overrides output_dir from the config");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return kConfig;
  }

  const auto stage = parse_stage(stage_arg);
  if (!stage) return fail(kConfig, "config", stage_arg, "unknown stage");

  try {
    set_thread_count(threads);
    auto cfg = load_config(config_path);
    if (!output_dir.empty()) cfg.output_dir = output_dir;
    run_stage(*stage, cfg);
  } catch (const ConfigError& e) {
    return fail(kConfig, "config", stage_arg, e.what());
  } catch (const MissingArtifactError& e) {
    return fail(kMissing, "missing-artifact", stage_arg, e.what());
  } catch (const InputError& e) {
    return fail(kMissing, "bad-artifact", stage_arg, e.what());
  } catch (const InvariantError& e) {
    return fail(kInvariant, "invariant", stage_arg, e.what());
  } catch (const std::exception& e) {
    return fail(kInvariant, "internal", stage_arg, e.what());
  }
  return kOk;
}
