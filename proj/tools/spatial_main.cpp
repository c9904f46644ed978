#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "spatial/pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Spatial statistics batch pipelines"};
  app.require_subcommand(1, 1);

  spatial::RunOptions opts;
  std::uint64_t seed = 0;
  for (const char* name : {"variogram", "krige", "car", "simulate-pp", "csr-test", "cokrige", "vecchia-krige", "kalman"}) {
    auto* sub = app.add_subcommand(name);
    sub->add_option("--config", opts.config, "key = value config file")->required();
    sub->add_option("--out", opts.out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "overrides the config seed");
    sub->add_option("--threads", opts.threads, "worker threads (SPATIAL_THREADS wins)");
  }
  CLI11_PARSE(app, argc, argv);

  auto* sub = app.get_subcommands().front();
  opts.command = sub->get_name();
  if (sub->count("--seed")) opts.seed = seed;
  if (const char* env = std::getenv("SPATIAL_THREADS")) {
    try {
      opts.threads = std::stoi(env);
    } catch (const std::exception&) {
      std::cerr << "error: SPATIAL_THREADS must be an integer\n";
      return 2;
    }
  }

  const auto result = spatial::run(opts);
  if (result.code != spatial::ExitCode::Ok) {
    std::cerr << "error: " << result.message << "\n";
  } else {
    for (const auto& f : result.written) std::cout << (opts.out_dir / f).string() << "\n";
  }
  return static_cast<int>(result.code);
}
