#include "msep/solver.hpp"

#include <Eigen/LU>
#include <Eigen/SVD>

#include <cmath>
#include <sstream>

namespace msep {

std::string to_string(SolverMethod m) {
  switch (m) {
    case SolverMethod::linearized_admm: return "linearized_admm";
    case SolverMethod::admm_inner_fista: return "admm_inner_fista";
    case SolverMethod::pinv_baseline: return "pinv_baseline";
  }
  return "linearized_admm";
}

SolverMethod parse_solver_method(std::string_view name) {
  if (name == "linearized_admm") return SolverMethod::linearized_admm;
  if (name == "admm_inner_fista") return SolverMethod::admm_inner_fista;
  if (name == "pinv_baseline") return SolverMethod::pinv_baseline;
  throw InvalidArgument("unknown solver method: " + std::string(name));
}

std::string to_string(SolverStatus s) {
  switch (s) {
    case SolverStatus::converged: return "converged";
    case SolverStatus::max_iter: return "max_iter";
    case SolverStatus::diverged: return "diverged";
  }
  return "max_iter";
}

void SolverConfig::validate() const {
  if (!(gamma > 0.0)) throw InvalidArgument("solver: gamma must be positive");
  if (!(rho > 0.0)) throw InvalidArgument("solver: rho must be positive");
  if (!(step_scale > 0.0 && step_scale <= 1.0))
    throw InvalidArgument("solver: step_scale must lie in (0, 1]");
  if (max_iter < 1) throw InvalidArgument("solver: max_iter must be >= 1");
  if (!(tol_primal > 0.0) || !(tol_change > 0.0))
    throw InvalidArgument("solver: tolerances must be positive");
  if (method == SolverMethod::admm_inner_fista && inner_iters < 1)
    throw InvalidArgument("solver: inner_iters must be >= 1");
}

double separation_objective(const Matrix& S, const Matrix& L, double gamma) {
  return gamma * S.cwiseAbs().sum() + nuclear_norm(L);
}

namespace {

struct Thresholded {
  Matrix value;
  double nuclear = 0.0;
};

Thresholded svt_with_norm(const Matrix& a, double tau) {
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  Index k = 0;
  while (k < s.size() && s(k) > tau) ++k;
  if (k == 0) return {Matrix::Zero(a.rows(), a.cols()), 0.0};
  const Vector shrunk = s.head(k).array() - tau;
  return {svd.matrixU().leftCols(k) * shrunk.asDiagonal() *
              svd.matrixV().leftCols(k).transpose(),
          shrunk.sum()};
}

bool column_rank_deficient(const Matrix& H) {
  if (H.rows() < H.cols()) return true;
  const Vector s = singular_values(H);
  return s.size() == 0 || s(s.size() - 1) < 1e-8 * s(0);
}

}  // namespace

SolverResult solve_masked_separation(const Matrix& M0, const Matrix& H,
                                     const SolverConfig& config) {
  config.validate();
  if (H.rows() != M0.rows()) {
    std::ostringstream os;
    os << "solve: M0 is " << M0.rows() << "x" << M0.cols() << " but H is "
       << H.rows() << "x" << H.cols();
    throw InvalidArgument(os.str());
  }
  require_finite(M0, "solve: M0");
  require_finite(H, "solve: H");

  const Index p = H.cols();
  const Index n = M0.cols();
  const Matrix Ht = H.transpose();
  const double h_norm = spectral_norm(H);
  const double eta = std::max(h_norm * h_norm, 1e-300) / config.step_scale;
  const double rho = config.rho;
  const double scale = std::max(1.0, M0.norm());

  SolverResult res;
  res.rho = rho;
  res.S_hat = Matrix::Zero(p, n);
  res.L_hat = Matrix::Zero(M0.rows(), n);
  res.dual = Matrix::Zero(M0.rows(), n);
  res.non_unique = column_rank_deficient(H);

  Matrix& S = res.S_hat;
  Matrix& L = res.L_hat;
  Matrix& W = res.dual;
  Matrix HS = Matrix::Zero(M0.rows(), n);

  const double l1_step = config.gamma / (rho * eta);

  for (Index it = 1; it <= config.max_iter; ++it) {
    const Matrix S_prev = S;
    const Matrix L_prev = L;

    Thresholded lstep = svt_with_norm(M0 - HS - W, 1.0 / rho);
    L = std::move(lstep.value);

    const Matrix offset = L - M0 + W;
    if (config.method == SolverMethod::admm_inner_fista) {
      // min gamma ||S||_1 + rho/2 ||H S + offset||_F^2 by accelerated
      // proximal gradient, warm-started at the previous S.
      Matrix x = S;
      Matrix y = S;
      double t = 1.0;
      for (Index k = 0; k < config.inner_iters; ++k) {
        const Matrix grad = Ht * (H * y + offset);
        const Matrix x_next = soft_threshold(y - grad / eta, l1_step);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        y = x_next + ((t - 1.0) / t_next) * (x_next - x);
        x = x_next;
        t = t_next;
      }
      S = std::move(x);
    } else {
      S = soft_threshold(S - (Ht * (HS + offset)) / eta, l1_step);
    }
    HS.noalias() = H * S;

    const Matrix residual = HS + L - M0;
    W += residual;

    res.iterations = it;
    res.primal_residual = residual.norm() / scale;
    const double change =
        std::max((S - S_prev).norm(), (L - L_prev).norm()) / scale;

    if (!std::isfinite(res.primal_residual) || !std::isfinite(change) ||
        !std::isfinite(lstep.nuclear)) {
      S = S_prev;
      L = L_prev;
      res.status = SolverStatus::diverged;
      break;
    }
    if (config.record_history) {
      res.history.push_back(
          {res.primal_residual, config.gamma * S.cwiseAbs().sum() + lstep.nuclear});
    }
    if (res.primal_residual <= config.tol_primal && change <= config.tol_change) {
      res.status = SolverStatus::converged;
      break;
    }
  }
  if (res.status != SolverStatus::diverged) {
    res.objective = separation_objective(S, L, config.gamma);
  } else {
    res.objective = std::numeric_limits<double>::quiet_NaN();
  }
  return res;
}

SolverResult solve_via_pinv(const Matrix& M0, const Matrix& H,
                            const SolverConfig& config) {
  config.validate();
  if (H.rows() != H.cols())
    throw InvalidArgument("solve_via_pinv: H must be square, got " +
                          std::to_string(H.rows()) + "x" + std::to_string(H.cols()));
  if (H.rows() != M0.rows()) throw InvalidArgument("solve_via_pinv: M0 rows != H rows");
  const Vector s = singular_values(H);
  const double cond = s(s.size() - 1) > 0.0 ? s(0) / s(s.size() - 1)
                                            : std::numeric_limits<double>::infinity();
  if (!(cond <= config.max_condition)) {
    std::ostringstream os;
    os << "solve_via_pinv: H is ill-conditioned (condition estimate " << cond << ")";
    throw InvalidArgument(os.str());
  }
  const Matrix reduced = H.partialPivLu().solve(M0);
  SolverConfig inner = config;
  if (inner.method == SolverMethod::pinv_baseline)
    inner.method = SolverMethod::linearized_admm;
  const Index p = H.cols();
  SolverResult res =
      solve_masked_separation(reduced, Matrix::Identity(p, p), inner);
  res.L_hat = H * res.L_hat;
  res.non_unique = false;
  if (res.status != SolverStatus::diverged) {
    res.objective = separation_objective(res.S_hat, res.L_hat, config.gamma);
    res.primal_residual =
        (H * res.S_hat + res.L_hat - M0).norm() / std::max(1.0, M0.norm());
  }
  return res;
}

SolverResult solve(const Matrix& M0, const Matrix& H, const SolverConfig& config) {
  if (config.method == SolverMethod::pinv_baseline)
    return solve_via_pinv(M0, H, config);
  return solve_masked_separation(M0, H, config);
}

double KktResiduals::max() const {
  return std::max({sparse_support, sparse_offsupport, lowrank_tangent, lowrank_normal});
}

KktResiduals kkt_residuals(const Matrix& Q, const Matrix& S, const Matrix& H,
                           double gamma, const SupportSet& omega,
                           const SvdFactors& factors) {
  const Matrix HtQ = H.transpose() * Q;
  require_same_shape(HtQ, S, "kkt_residuals: H^T Q vs S");
  KktResiduals r;
  const Matrix on = support_project(HtQ - gamma * sign(S), omega);
  r.sparse_support = on.size() ? on.cwiseAbs().maxCoeff() : 0.0;
  const Matrix off = support_project(HtQ, omega, true);
  r.sparse_offsupport =
      std::max(0.0, (off.size() ? off.cwiseAbs().maxCoeff() : 0.0) - gamma);
  const Matrix uv = factors.rank() > 0 ? factors.polar()
                                       : Matrix::Zero(Q.rows(), Q.cols());
  r.lowrank_tangent = (tangent_project(factors, Q) - uv).norm();
  r.lowrank_normal = std::max(0.0, spectral_norm(tangent_project(factors, Q, true)) - 1.0);
  return r;
}

KktResiduals kkt_report(const SolverResult& result, const Matrix& H, double gamma,
                        const SupportSet& omega, const SvdFactors& factors) {
  return kkt_residuals(result.certificate_dual(), result.S_hat, H, gamma, omega,
                       factors);
}

RelativeError relative_error_detail(const Matrix& truth, const Matrix& estimate) {
  require_same_shape(truth, estimate, "relative_error");
  const double denom = truth.norm();
  const double diff = (estimate - truth).norm();
  if (denom == 0.0) return {diff, true};
  return {diff / denom, false};
}

double relative_error(const Matrix& truth, const Matrix& estimate) {
  return relative_error_detail(truth, estimate).value;
}

nlohmann::json to_json(const SolverConfig& c) {
  return {{"gamma", c.gamma},
          {"rho", c.rho},
          {"step_scale", c.step_scale},
          {"max_iter", c.max_iter},
          {"tol_primal", c.tol_primal},
          {"tol_change", c.tol_change},
          {"method", to_string(c.method)},
          {"inner_iters", c.inner_iters},
          {"record_history", c.record_history}};
}

nlohmann::json to_json(const SolverResult& r) {
  nlohmann::json j{{"status", to_string(r.status)},
                   {"iterations", r.iterations},
                   {"primal_residual", r.primal_residual},
                   {"objective", std::isfinite(r.objective) ? nlohmann::json(r.objective)
                                                            : nlohmann::json(nullptr)},
                   {"non_unique", r.non_unique}};
  if (!r.history.empty()) {
    auto& h = j["history"] = nlohmann::json::array();
    for (const auto& rec : r.history) h.push_back({rec.primal_residual, rec.objective});
  }
  return j;
}

}  // namespace msep
