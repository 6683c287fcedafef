#include <CLI11.hpp>
#include <iostream>

#include "rearrange/cli.hpp"
#include "rearrange/errors.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Convex rearrangement of sampled random fields"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir = "out";
  int threads = 1;
  long long seed = -1;

  auto add_run_flags = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "flat key=value experiment file")->required();
    cmd->add_option("--out", out_dir, "output directory");
    cmd->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
    cmd->add_option("--seed", seed, "master seed (overrides the config)")->check(CLI::NonNegativeNumber);
  };
  auto* simulate = app.add_subcommand("simulate", "write field samples");
  auto* rearr = app.add_subcommand("rearrange", "write gradient clouds and rearrangements");
  auto* verify = app.add_subcommand("verify", "write convergence reports");
  add_run_flags(simulate);
  add_run_flags(rearr);
  add_run_flags(verify);
  auto* report = app.add_subcommand("report", "summarize the reports under a directory");
  std::string report_dir = "out";
  report->add_option("dir", report_dir, "directory holding reports");
  report->add_option("--out", report_dir, "directory holding reports");

  CLI11_PARSE(app, argc, argv);

  try {
    if (report->parsed()) return rearrange::cmd_report(report_dir, std::cout);
    rearrange::ExperimentConfig config = rearrange::load_config(config_path);
    if (seed >= 0) config.master_seed = static_cast<std::uint64_t>(seed);
    rearrange::RunOptions options;
    options.out = out_dir;
    options.threads = threads;
    if (simulate->parsed()) return rearrange::cmd_simulate(config, options);
    if (rearr->parsed()) return rearrange::cmd_rearrange(config, options);
    const int failed = rearrange::cmd_verify(config, options);
    std::cout << config.experiment() << ": " << failed << " failed criteria\n";
    return failed;
  } catch (const rearrange::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 125;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 125;
  }
}
