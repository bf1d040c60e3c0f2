// Experiment runner: sparsity x rank phase grids for the blur and Gaussian
// masks, the EDA event-count sweep, and heatmap rendering.
//
// Every trial seed is a pure function of (master_seed, support size, rank,
// trial), and records are written in canonical (s, r, t) order, so outputs
// do not depend on the number of worker threads.
#pragma once

#include "msep/core.hpp"
#include "msep/solver.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace msep {

enum class ExperimentKind { phase_blur, phase_gaussian, eda };
enum class GammaRule { inv_sqrt_m, inv_sqrt_n, explicit_value };

std::string to_string(ExperimentKind k);
ExperimentKind parse_experiment_kind(std::string_view name);
std::string to_string(GammaRule g);
GammaRule parse_gamma_rule(std::string_view name);

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::phase_blur;
  Index m = 100, n = 100, p = 100;
  std::vector<double> sparsity_levels{0.01, 0.03, 0.06, 0.09, 0.12,
                                      0.15, 0.18, 0.21, 0.24, 0.27, 0.30};
  std::vector<Index> ranks{1, 4, 7, 10, 13, 16, 19, 22, 25, 28};
  std::vector<Index> event_counts{4, 6, 8, 10, 12, 14, 16, 18, 20, 22, 24, 26, 28, 30};
  Index trials = 8;
  GammaRule gamma_rule = GammaRule::inv_sqrt_m;
  double gamma = 0.1;  ///< used when gamma_rule is explicit_value
  SolverConfig solver;
  std::uint64_t master_seed = 0;
  std::filesystem::path out_dir;
  int parallelism = 1;
  // Sparse value range; the EDA event amplitudes use the same knobs.
  double value_low = 1.0;
  double value_high = 2.0;
  // EDA only.
  double tonic_amplitude = 1.0;
  double tonic_modulation = 0.5;
  double noise_sigma = 0.01;
  /// Wall-clock seconds are written to the CSV only when enabled; otherwise
  /// the column holds 0 and the CSV is a pure function of the config.
  bool record_timing = false;
  bool write_files = true;

  void validate() const;
  double resolved_gamma() const;
};

ExperimentConfig experiment_config_from_json(const nlohmann::json& j,
                                             ExperimentConfig base = {});
nlohmann::json to_json(const ExperimentConfig& config);

/// Per-trial seed: master_seed XOR hash(s, r, t).
std::uint64_t trial_seed(std::uint64_t master_seed, Index s, Index r, Index t);

struct TrialRecord {
  double sparsity_fraction = 0.0;  ///< event count for EDA sweeps
  Index rank = 0;
  Index trial = 0;
  std::uint64_t seed = 0;
  double err_S = 0.0;
  double err_L = 0.0;
  std::string status;
  Index iters = 0;
  double seconds = 0.0;
};

struct CellSummary {
  double sparsity_fraction = 0.0;
  Index rank = 0;
  double mean_err_S = 0.0;
  double mean_err_L = 0.0;
  Index trials = 0;
  Index failures = 0;  ///< trials whose status is not "converged"
};

struct GridResult {
  std::vector<TrialRecord> records;  ///< canonical (s, r, t) order
  std::vector<CellSummary> cells;
  nlohmann::json metadata;
  double wall_seconds = 0.0;

  const CellSummary& cell(double sparsity_fraction, Index rank) const;
};

GridResult run_phase_experiment(const ExperimentConfig& config);
GridResult run_eda_experiment(const ExperimentConfig& config);
GridResult run_experiment(const ExperimentConfig& config);

/// grid.csv header: sparsity_fraction,rank,trial,seed,err_S,err_L,status,iters,seconds
void write_grid_csv(std::ostream& out, const std::vector<TrialRecord>& records);
void write_summary_csv(std::ostream& out, const std::vector<CellSummary>& cells);
/// curve.csv header: event_count,trial,seed,err_X,err_T,status,iters,seconds
void write_curve_csv(std::ostream& out, const std::vector<TrialRecord>& records);

std::vector<TrialRecord> read_grid_csv(std::istream& in);
std::vector<CellSummary> summarize(const std::vector<TrialRecord>& records);

enum class HeatmapField { err_S, err_L };
HeatmapField parse_heatmap_field(std::string_view name);

/// Binary PPM, one pixel per cell; x = sparsity ascending, y = rank ascending
/// from the bottom row up. Gray level round(255 * clamp(err, 0, 1)); cells
/// with a NaN mean are drawn pure red.
std::string render_heatmap(const std::vector<TrialRecord>& records, HeatmapField field);
void render_heatmap(const std::filesystem::path& grid_csv, HeatmapField field,
                    const std::filesystem::path& out_image);

}  // namespace msep
