// Recoverability quantities for masked separation: the restricted infinity
// norm constant delta, interval bounds on mu_G(S) and xi_G(L), incoherence
// statistics, the theorem verdict and the admissible gamma window.
#pragma once

#include "msep/core.hpp"

#include <json.hpp>

#include <optional>
#include <utility>
#include <vector>

namespace msep {

/// max over rows i of the sum of the d largest |P_ij|, P = I - G^T G.
/// Equals max_{|T| <= d} ||P_T||_mi.
double rinp_delta_exact(const Matrix& G, Index d, Exec exec = Exec::parallel);

/// Brute force max over all column subsets |T| = d of ||P_T||_mi.
/// Exponential; intended as a test oracle for small p.
double rinp_delta_bruteforce(const Matrix& G, Index d);

/// RINP constant for a given support pattern: max over columns j of S and
/// rows i of sum_{k in supp(s_j)} |P_ik|. Never exceeds
/// rinp_delta_exact(G, d_c(S)).
double rinp_delta_support(const Matrix& G, const SupportSet& omega);

/// Kernel-basis bound for masks with ||H|| ||H^+|| = 1: top-d sum of
/// w_j = sum_k |v_jk| ||v_k||_inf.
double rinp_delta_kernel_bound(const std::vector<Vector>& kernel_basis, Index d);

/// Unit kernel basis of H (right singular vectors beyond the numerical rank).
std::vector<Vector> kernel_basis(const Matrix& H, double rank_tol = kDefaultRankTol);

struct MuBounds {
  double lower = 0.0;
  double upper = 0.0;
  std::optional<double> exact;
};

struct MuOptions {
  Index enumerate_cap = 20;  ///< exact enumeration when |Omega| <= cap
  Index samples = 256;       ///< random sign patterns for the lower bound
  std::uint64_t seed = 0;
  Exec exec = Exec::parallel;
};

/// mu_G(S) = max ||G A|| over A in Omega(S), ||A||_inf <= 1.
/// upper = ||G|| d(S); exact by enumerating sign vertices (one sign fixed);
/// lower = best random or structured vertex.
MuBounds mu_bounds(const Matrix& G, const SupportSet& omega,
                   const MuOptions& options = {});

/// Exhaustive vertex enumeration. Kept separate so the OpenMP kernel can be
/// checked against the serial path.
double mu_exact_enumerate(const Matrix& G, const SupportSet& omega,
                          Exec exec = Exec::parallel);

struct IncoherenceStats {
  double alpha = 0.0;      ///< max column norm of G
  double beta_U_G = 0.0;   ///< max_i ||P_U g_i||
  double beta_V = 0.0;     ///< max_j ||P_V e_j||
  double inc = 0.0;        ///< beta_U_G + alpha * beta_V
};

IncoherenceStats incoherence_stats(const Matrix& G, const SvdFactors& factors);

struct XiBounds {
  double lower = 0.0;
  double upper = 0.0;
};

/// xi_G(L) = max ||G^T B||_inf over B in T(L), ||B|| <= 1.
/// upper = inc(L, G). lower = best feasible B among structured candidates
/// and `samples` normalized projections P_T(Z) of seeded Gaussians.
XiBounds xi_bounds(const Matrix& G, const SvdFactors& factors, Index samples,
                   std::uint64_t seed, Exec exec = Exec::parallel);

struct GammaInterval {
  double lo = 0.0;
  double hi = 0.0;  ///< +infinity when u == 0
  double midpoint() const;
};

/// Window (lo, hi) for gamma, present iff u e < (1 - 3 delta) / 6.
std::optional<GammaInterval> gamma_interval(double u, double e, double delta);

/// True iff delta < 1/3 and mu xi < (1 - 3 delta) / 6.
bool theorem_verdict(double delta, double mu_upper, double xi_upper);

struct TransversalityOptions {
  double tol = 1e-8;
  Index max_dimension = 5000;
};

/// Whether G Omega(S) and T(L) intersect only at 0: orthonormal bases of both
/// are stacked and the smallest singular value compared against tol.
bool transversality_check(const Matrix& G, const SupportSet& omega,
                          const SvdFactors& factors,
                          const TransversalityOptions& options = {});

/// smallest singular value of the stacked bases; 0 when a basis is rank
/// deficient. Exposed for reporting.
double transversality_margin(const Matrix& G, const SupportSet& omega,
                             const SvdFactors& factors, Index max_dimension = 5000);

struct DiagnosticsReport {
  double delta = 0.0;
  Index d_used = 0;
  double delta_support = 0.0;
  double mu_lower = 0.0;
  double mu_upper = 0.0;
  std::optional<double> mu_exact;
  double xi_lower = 0.0;
  double xi_upper = 0.0;
  double alpha = 0.0;
  double beta_U_G = 0.0;
  double beta_V = 0.0;
  double inc = 0.0;
  double spectral_norm_G = 0.0;
  bool theorem_ok = false;
  /// Same test evaluated on the lower bounds; not a certificate.
  bool theorem_ok_optimistic = false;
  std::optional<GammaInterval> gamma_interval;
  std::optional<bool> transversal;
};

struct DiagnoseOptions {
  MuOptions mu;
  Index xi_samples = 64;
  std::uint64_t xi_seed = 0;
  TransversalityOptions transversality;
  bool check_transversality = true;
};

/// Full report for (G, Omega(S0), factors of L0).
DiagnosticsReport diagnose(const Matrix& G, const SupportSet& omega,
                           const SvdFactors& factors,
                           const DiagnoseOptions& options = {});

nlohmann::json to_json(const DiagnosticsReport& report);

}  // namespace msep
