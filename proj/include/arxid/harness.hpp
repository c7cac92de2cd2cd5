#pragma once

#include "arxid/active_loop.hpp"
#include "arxid/errors.hpp"
#include "arxid/json_io.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace arxid {

/// Validation failure in a configuration file, tagged with the offending
/// field.
class ConfigError : public InvalidParameter {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : InvalidParameter(field + ": " + message), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

struct ExperimentConfig {
  ARXParams system = paper_system();
  std::string system_source = "paper";
  double gamma = 10.0;
  Schedule schedule;  // T0 = 200, k0 = 10, 4 episodes, 50 warm-up samples
  std::vector<std::uint64_t> seeds;  // base seed 0, 20 runs unless given
  std::vector<std::string> strategies = {"random", "active", "multi-eig"};
  SolverOptions solver;
  /// The random baseline keeps running to this multiple of the active
  /// horizon so that crossover ratios above 1 can be measured.
  double reference_horizon = 2.0;
  double reference_step = 0.05;  // spacing of the extended grid, relative to the horizon
  std::string output_dir = "archive";
  bool store_inputs = false;
  std::vector<std::string> notes;  // defaults that were applied

  void validate() const;
};

ExperimentConfig parse_config(const json& j, const std::string& base_dir = ".");
ExperimentConfig load_config(const std::string& path);
/// Parses back to the same experiment; provenance (notes, system source) is
/// left to the manifest.
json config_to_json(const ExperimentConfig& cfg);

struct SummaryRow {
  std::string strategy;
  std::int64_t T = 0;
  int runs = 0;
  double median = 0.0;
  double p25 = 0.0;
  double p75 = 0.0;
  double energy_ratio = 0.0;  // mean over runs of total energy / (gamma^2 samples)
  bool extension = false;     // beyond the shared checkpoint grid
};

struct SummaryTable {
  std::vector<SummaryRow> rows;

  std::vector<std::string> strategies() const;
  std::vector<SummaryRow> series(const std::string& strategy) const;
};

struct ExperimentResult {
  std::string archive;
  SummaryTable summary;
  int completed = 0;
  int quarantined = 0;
};

/// Runs every strategy on every seed and writes the archive:
///   manifest.json     config, seeds, counts, quarantine list
///   episodes.jsonl    one record per episode
///   episodes.csv      strategy,run,seed,episode,kind,T,length,error,energy,gap
///   checkpoints.csv   strategy,run,seed,T,error,extension
///   summary.csv       see write_summary_csv
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// Linear-interpolation percentile (q in [0, 1]).
double percentile(std::vector<double> values, double q);

SummaryTable summarize(const std::string& archive_dir);

/// strategy,T,runs,median,p25,p75,energy_ratio,extension
void write_summary_csv(const SummaryTable& table, const std::string& path);
SummaryTable read_summary_csv(const std::string& path);

/// Log-log error curves with interquartile bands as SVG, plus the plotted
/// numbers as CSV next to it (same stem, .csv).
void emit_figure(const SummaryTable& table, const std::string& svg_path);

struct Crossover {
  double ratio = 0.0;
  bool reached = true;  // false: reference never matched within its horizon
  double horizon_ratio = 0.0;  // reference horizon / target final T
  std::int64_t target_T = 0;
  double target_error = 0.0;
  std::string text() const;
};

/// Smallest r such that the reference median at r T matches the target median
/// at its final shared checkpoint T. The reference median curve is made
/// monotone (running minimum) and interpolated linearly in log-log.
Crossover crossover_metric(const SummaryTable& table, const std::string& reference, const std::string& target);

}  // namespace arxid
