#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "rearrange/diagnostics.hpp"
#include "rearrange/gradients.hpp"

namespace rearrange {

/// Flat key=value experiment description. Keys:
///   model       brownian | fbm | levy | chentsov | additive   (or builtin=sawtooth)
///   alpha       fBm exponent in (0,2)
///   dim         field dimension (levy, chentsov)
///   germ        standard-1d | standard-2d | rotated-2d
///   levels      comma-separated n, each >= 2
///   schedule    catalog | paper | sigma | none | power:<c>:<beta>
///   seeds       number of replicates (>= 1)
///   master_seed base seed
///   spec        limit spec name (see limit_catalog)
///   subsample   atoms kept for 2-D transport solves (0 = all)
///   tol         transport mass tolerance
///   threshold.<metric>  override a verify threshold (cf, ks, curve, cov, cloud)
struct ExperimentConfig {
  std::string model = "brownian";
  double alpha = 1.0;
  int dim = 1;
  std::string germ;
  std::vector<int> levels{64};
  std::string schedule = "catalog";
  int seeds = 1;
  std::uint64_t master_seed = 1;
  std::string spec;
  std::size_t subsample = 500;
  double tol = 1e-9;
  std::map<std::string, double> thresholds;
  std::map<std::string, std::string> entries;  // as parsed, for hashing

  std::string hash() const;
  std::string germ_name() const;
  std::string spec_name() const;
  std::string experiment() const;
  RenormalizationSchedule make_schedule() const;
  double threshold(const std::string& metric) const;
};

ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);

struct RunOptions {
  std::filesystem::path out = "out";
  int threads = 1;
};

/// Runs fn(0..count-1) on up to `threads` workers; rethrows the first failure
/// by index.
void parallel_for(std::size_t count, int threads, const std::function<void(std::size_t)>& fn);

/// Sample files, one per (n, replicate). Returns 0.
int cmd_simulate(const ExperimentConfig& config, const RunOptions& options);
/// Cloud and rearrangement files per (n, replicate). Returns 0.
int cmd_rearrange(const ExperimentConfig& config, const RunOptions& options);
/// Convergence reports; returns the number of failed criteria.
int cmd_verify(const ExperimentConfig& config, const RunOptions& options);
/// Summary table of every report under `dir`; returns the number of failures (<= 125).
int cmd_report(const std::filesystem::path& dir, std::ostream& table);

/// The reports cmd_verify writes, without touching the file system.
std::vector<ConvergenceReport> verify_reports(const ExperimentConfig& config, int threads);

}  // namespace rearrange
