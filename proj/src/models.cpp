#include "msep/models.hpp"

#include "msep/linalg_util.hpp"
#include "msep/rng.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <vector>

namespace msep {

Matrix random_sparse(const SparseModelSpec& spec) {
  if (spec.p < 1 || spec.n < 1) throw InvalidArgument("random_sparse: p, n >= 1");
  const Index total = spec.p * spec.n;
  if (spec.s < 0 || spec.s > total)
    throw InvalidArgument("random_sparse: support size " + std::to_string(spec.s) +
                          " outside [0, " + std::to_string(total) + "]");
  if (!(spec.value_low <= spec.value_high))
    throw InvalidArgument("random_sparse: value_low > value_high");

  Rng rng(spec.seed);
  std::vector<Index> idx(static_cast<std::size_t>(total));
  std::iota(idx.begin(), idx.end(), Index{0});
  for (Index k = 0; k < spec.s; ++k) {
    const auto pick = k + static_cast<Index>(rng.below(std::uint64_t(total - k)));
    std::swap(idx[k], idx[pick]);
  }
  Matrix s = Matrix::Zero(spec.p, spec.n);
  for (Index k = 0; k < spec.s; ++k) {
    const Index flat = idx[k];
    s(flat % spec.p, flat / spec.p) = rng.uniform(spec.value_low, spec.value_high);
  }
  return s;
}

LowRankSample random_low_rank(const LowRankModelSpec& spec) {
  if (spec.m < 1 || spec.n < 1) throw InvalidArgument("random_low_rank: m, n >= 1");
  if (spec.r < 1 || spec.r > std::min(spec.m, spec.n))
    throw InvalidArgument("random_low_rank: rank outside [1, min(m, n)]");
  Vector sigma = spec.singular_values;
  if (sigma.size() == 0) {
    sigma = Vector::Constant(spec.r, std::sqrt(double(spec.m * spec.n) / double(spec.r)));
  } else if (sigma.size() != spec.r || !(sigma.array() > 0.0).all()) {
    throw InvalidArgument("random_low_rank: need r positive singular values");
  }

  Rng rng(spec.seed);
  Matrix u;
  if (spec.model == LowRankModel::right_side_orthogonal) {
    if (!spec.U_input) throw InvalidArgument("random_low_rank: right-side model needs U");
    u = *spec.U_input;
    if (u.rows() != spec.m || u.cols() != spec.r)
      throw InvalidArgument("random_low_rank: U_input must be m x r");
    const double defect =
        (u.transpose() * u - Matrix::Identity(spec.r, spec.r)).cwiseAbs().maxCoeff();
    if (defect > 1e-8)
      throw InvalidArgument("random_low_rank: U_input columns are not orthonormal");
  } else {
    u = haar_orthonormal(spec.m, spec.r, rng);
  }
  Matrix v = haar_orthonormal(spec.n, spec.r, rng);

  // Keep factors sorted so they double as a reduced SVD.
  std::vector<Index> order(static_cast<std::size_t>(spec.r));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return sigma(a) > sigma(b); });
  SvdFactors f{Matrix(spec.m, spec.r), Vector(spec.r), Matrix(spec.n, spec.r)};
  for (Index k = 0; k < spec.r; ++k) {
    f.U.col(k) = u.col(order[k]);
    f.V.col(k) = v.col(order[k]);
    f.singular_values(k) = sigma(order[k]);
  }
  return {f.reconstruct(), std::move(f)};
}

Matrix eda_tonic(Index m, Index n, double amplitude, double modulation) {
  if (m < 1 || n < 1) throw InvalidArgument("eda_tonic: m, n >= 1");
  Matrix t(m, n);
  const double total = double(m * n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < m; ++i) {
      const double k = double(j * m + i);
      t(i, j) = amplitude *
                (1.0 + modulation * std::sin(2.0 * std::numbers::pi * k / total));
    }
  return t;
}

Matrix gaussian_noise(Index m, Index n, double sigma, std::uint64_t seed) {
  if (!(sigma >= 0.0)) throw InvalidArgument("gaussian_noise: sigma < 0");
  Rng rng(seed);
  return gaussian_matrix(m, n, rng, sigma);
}

DegreeTailReport degree_tail_check(Index p, Index n, Index s, Index trials,
                                   std::uint64_t seed, Exec exec) {
  if (trials < 1) throw InvalidArgument("degree_tail_check: trials >= 1");
  DegreeTailReport rep;
  rep.p = p;
  rep.n = n;
  rep.s = s;
  rep.trials = trials;
  rep.row_threshold = double(s) / double(p) * std::log(double(p));
  rep.col_threshold = double(s) / double(n) * std::log(double(n));

  long long row_hits = 0;
  long long col_hits = 0;
  const bool par = exec == Exec::parallel;
#pragma omp parallel for schedule(static) reduction(+ : row_hits, col_hits) if (par)
  for (Index t = 0; t < trials; ++t) {
    SparseModelSpec spec{p, n, s, 1.0, 2.0, seed + std::uint64_t(t)};
    const DegreeStats st = degree_stats(random_sparse(spec));
    if (double(st.d_r) >= rep.row_threshold) ++row_hits;
    if (double(st.d_c) >= rep.col_threshold) ++col_hits;
  }

  rep.row_frequency = double(row_hits) / double(trials);
  rep.col_frequency = double(col_hits) / double(trials);
  const double ratio = double(s) / double(p * n);
  rep.row_bound = std::pow(double(p), -double(n) * ratio / (double(p) * (2.0 - ratio)));
  rep.col_bound = std::pow(double(n), -double(p) * ratio / (double(n) * (2.0 - ratio)));
  auto slack = [trials](double b) {
    const double q = std::clamp(b, 0.0, 1.0);
    return 3.0 * std::sqrt(q * (1.0 - q) / double(trials));
  };
  rep.row_slack = slack(rep.row_bound);
  rep.col_slack = slack(rep.col_bound);
  rep.row_violation = rep.row_frequency > rep.row_bound + rep.row_slack;
  rep.col_violation = rep.col_frequency > rep.col_bound + rep.col_slack;
  return rep;
}

void save_instance(const std::filesystem::path& dir, const Matrix& S0, const Matrix& L0,
                   const Matrix& M0, const nlohmann::json& spec) {
  std::filesystem::create_directories(dir);
  write_matrix_csv(dir / "S0.csv", S0);
  write_matrix_csv(dir / "L0.csv", L0);
  write_matrix_csv(dir / "M0.csv", M0);
  std::ofstream(dir / "spec.json") << spec.dump(2) << '\n';
}

}  // namespace msep
