// Convex masked separation:
//   minimize gamma ||S||_1 + ||L||_*  subject to  L + H S = M0
// solved by ADMM with a linearized (or inner-FISTA) S-step, plus the
// pseudoinverse reduction for invertible H and KKT residual reporting.
#pragma once

#include "msep/core.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace msep {

enum class SolverMethod { linearized_admm, admm_inner_fista, pinv_baseline };

std::string to_string(SolverMethod m);
SolverMethod parse_solver_method(std::string_view name);

struct SolverConfig {
  double gamma = 0.1;
  double rho = 1.0;
  double step_scale = 0.99;  ///< eta = ||H||^2 / step_scale
  Index max_iter = 2000;
  double tol_primal = 1e-7;
  double tol_change = 1e-7;
  SolverMethod method = SolverMethod::linearized_admm;
  Index inner_iters = 20;
  bool record_history = false;
  /// Condition-number guard for the pseudoinverse reduction.
  double max_condition = 1e12;

  void validate() const;
};

enum class SolverStatus { converged, max_iter, diverged };
std::string to_string(SolverStatus s);

struct IterationRecord {
  double primal_residual;
  double objective;
};

struct SolverResult {
  Matrix S_hat;
  Matrix L_hat;
  Matrix dual;  ///< scaled dual W
  double rho = 1.0;
  Index iterations = 0;
  double primal_residual = 0.0;
  double objective = 0.0;
  SolverStatus status = SolverStatus::max_iter;
  /// Set when H is column-rank deficient; S_hat is then one of possibly
  /// many minimizers sharing H S_hat.
  bool non_unique = false;
  std::vector<IterationRecord> history;

  /// Q = -rho W. With the update order used here the L-step gives
  /// -rho W in the subdifferential of ||L||_* at convergence.
  Matrix certificate_dual() const { return -rho * dual; }
};

nlohmann::json to_json(const SolverConfig& config);
nlohmann::json to_json(const SolverResult& result);

SolverResult solve_masked_separation(const Matrix& M0, const Matrix& H,
                                     const SolverConfig& config);

/// Solves S + Y = H^{-1} M0 with the identity-mask solver, then L = H Y.
SolverResult solve_via_pinv(const Matrix& M0, const Matrix& H,
                            const SolverConfig& config);

/// Dispatches on config.method.
SolverResult solve(const Matrix& M0, const Matrix& H, const SolverConfig& config);

double separation_objective(const Matrix& S, const Matrix& L, double gamma);

struct KktResiduals {
  double sparse_support = 0.0;   ///< ||P_Omega(H^T Q) - gamma sign(S)||_inf
  double sparse_offsupport = 0.0;///< max(0, ||P_Omega^perp(H^T Q)||_inf - gamma)
  double lowrank_tangent = 0.0;  ///< ||P_T(Q) - U V^T||_F
  double lowrank_normal = 0.0;   ///< max(0, ||P_T^perp(Q)|| - 1)
  double max() const;
};

/// Optimality residuals at the candidate (S_hat, L_hat) using Q = -rho W.
KktResiduals kkt_report(const SolverResult& result, const Matrix& H, double gamma,
                        const SupportSet& omega, const SvdFactors& factors);
/// Same residuals for an explicit Q and S.
KktResiduals kkt_residuals(const Matrix& Q, const Matrix& S, const Matrix& H,
                           double gamma, const SupportSet& omega,
                           const SvdFactors& factors);

/// ||estimate - truth||_F / ||truth||_F; ||estimate||_F when truth = 0.
double relative_error(const Matrix& truth, const Matrix& estimate);

struct RelativeError {
  double value = 0.0;
  bool degenerate_denominator = false;  ///< truth was 0; value is ||estimate||_F
};
RelativeError relative_error_detail(const Matrix& truth, const Matrix& estimate);

}  // namespace msep
