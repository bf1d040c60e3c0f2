// Random instance generators: random sparsity model, random orthogonal
// low-rank models, and the synthetic EDA components.
#pragma once

#include "msep/core.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>

namespace msep {

struct SparseModelSpec {
  Index p = 0;
  Index n = 0;
  Index s = 0;  ///< support size
  double value_low = 1.0;
  double value_high = 2.0;
  std::uint64_t seed = 0;
};

/// Exactly s nonzeros on a uniformly random support (partial Fisher-Yates
/// over column-major entry indices); values i.i.d. uniform.
Matrix random_sparse(const SparseModelSpec& spec);

enum class LowRankModel { orthogonal, right_side_orthogonal };

struct LowRankModelSpec {
  Index m = 0;
  Index n = 0;
  Index r = 1;
  LowRankModel model = LowRankModel::orthogonal;
  /// Empty selects the default sigma_i = sqrt(m n / r).
  Vector singular_values;
  std::uint64_t seed = 0;
  std::optional<Matrix> U_input;  ///< required by right_side_orthogonal
};

struct LowRankSample {
  Matrix L;
  SvdFactors factors;
};

LowRankSample random_low_rank(const LowRankModelSpec& spec);

/// Column-major reshape of v_k = amplitude (1 + modulation sin(2 pi k / (m n))).
Matrix eda_tonic(Index m, Index n, double amplitude, double modulation = 0.5);

Matrix gaussian_noise(Index m, Index n, double sigma, std::uint64_t seed);

struct DegreeTailReport {
  Index p = 0, n = 0, s = 0, trials = 0;
  double row_threshold = 0.0;   ///< (s/p) log p
  double col_threshold = 0.0;   ///< (s/n) log n
  double row_frequency = 0.0;   ///< fraction of trials with d_r >= threshold
  double col_frequency = 0.0;
  double row_bound = 0.0;       ///< p^{-n r / (p (2 - r))}
  double col_bound = 0.0;       ///< n^{-p r / (n (2 - r))}
  double row_slack = 0.0;       ///< 3 binomial standard deviations at the bound
  double col_slack = 0.0;
  bool row_violation = false;
  bool col_violation = false;
};

/// Monte-Carlo check of the max-degree tail bounds for the random sparsity
/// model. Trial t uses seed + t, so the parallel path matches the serial one.
DegreeTailReport degree_tail_check(Index p, Index n, Index s, Index trials,
                                   std::uint64_t seed,
                                   Exec exec = Exec::parallel);

/// Writes S0.csv, L0.csv, M0.csv and spec.json into dir.
void save_instance(const std::filesystem::path& dir, const Matrix& S0, const Matrix& L0,
                   const Matrix& M0, const nlohmann::json& spec);

}  // namespace msep
