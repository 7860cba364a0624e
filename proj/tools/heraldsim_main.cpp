#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "heraldsim/errors.hpp"
#include "heraldsim/runner.hpp"

namespace hr = heraldsim::runner;

int main(int argc, char** argv) {
  CLI::App app{"Heralded cat-state simulation under detector timing jitter"};
  app.set_version_flag("--version", HERALDSIM_VERSION);

  std::string command;
  std::string config_path;
  std::string manifest_path;
  std::string out_dir;
  std::uint64_t seed = hr::kDefaultSeed;
  std::vector<std::string> overrides;
  unsigned jobs = 1;

  app.add_option("command", command,
                 "modes | sweep | synthesize | tomography | reproduce-fig3c | reproduce-fig4 | end2end | validate | "
                 "rerun")
      ->required();
  app.add_option("-c,--config", config_path, "config file (key = value with [sections])");
  app.add_option("-m,--manifest", manifest_path, "manifest.json of an earlier run (required by rerun)");
  app.add_option("-o,--out", out_dir, "output directory (default $HERALDSIM_OUT_ROOT/<command>)");
  auto* seed_opt = app.add_option("-s,--seed", seed, "master random seed");
  app.add_option("--set", overrides, "override one key, section.key=value (repeatable)");
  app.add_option("-j,--jobs", jobs, "worker threads")->check(CLI::Range(1u, 1024u));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : hr::kExitConfig;
  }

  hr::ExperimentSpec spec;
  try {
    if (command == "rerun") {
      if (manifest_path.empty()) throw heraldsim::ConfigError("rerun needs --manifest");
    } else {
      spec.command = hr::command_from_string(command);
    }
  } catch (const heraldsim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return hr::kExitConfig;
  }
  if (!config_path.empty()) spec.config_path = config_path;
  if (!manifest_path.empty()) spec.manifest_path = manifest_path;
  spec.output_dir = out_dir;
  if (seed_opt->count() > 0) spec.seed = seed;
  spec.overrides = overrides;
  spec.jobs = jobs;
  return hr::run_and_report(spec, std::cout, std::cerr);
}
