#include "msep/certificate.hpp"

#include "msep/linalg_util.hpp"

#include <Eigen/QR>

#include <cmath>
#include <sstream>

namespace msep {

namespace {

Matrix unvec(const Vector& v, Index rows, Index cols) {
  return Eigen::Map<const Matrix>(v.data(), rows, cols);
}

}  // namespace

void refresh_conditions(Certificate& c, const Matrix& G, const Matrix& S0,
                        const SvdFactors& f) {
  const SupportSet omega = SupportSet::of(S0);
  const Matrix uv = f.rank() ? f.polar() : Matrix::Zero(G.rows(), S0.cols());
  c.Q = G * c.Q_omega + c.Q_T;
  c.eps_omega = c.Q_omega - c.gamma * sign(S0);
  c.eps_T = c.Q_T - uv;
  c.cond_a_residual = (tangent_project(f, c.Q) - uv).norm();
  c.cond_b_value = spectral_norm(tangent_project(f, c.Q, true));
  const Matrix gtq = G.transpose() * c.Q;
  const Matrix on = support_project(gtq - c.gamma * sign(S0), omega);
  c.cond_c_residual = on.size() ? on.cwiseAbs().maxCoeff() : 0.0;
  const Matrix off = support_project(gtq, omega, true);
  c.cond_d_value = off.size() ? off.cwiseAbs().maxCoeff() : 0.0;
}

Certificate construct_certificate(const Matrix& G, const Matrix& S0,
                                  const SvdFactors& f, double gamma,
                                  Index size_guard) {
  if (!(gamma > 0.0)) throw InvalidArgument("construct_certificate: gamma must be > 0");
  if (G.cols() != S0.rows())
    throw InvalidArgument("construct_certificate: G columns != S0 rows");
  const Index m = G.rows();
  const Index n = S0.cols();
  if (f.rank() > 0 && (f.U.rows() != m || f.V.rows() != n))
    throw InvalidArgument("construct_certificate: factors do not match m x n");

  const SupportSet omega = SupportSet::of(S0);
  const Index card = omega.cardinality();
  const Index r = f.rank();
  const Index dim_t = r * (m + n - r);
  if (card + dim_t > size_guard) {
    std::ostringstream os;
    os << "construct_certificate: " << card + dim_t << " unknowns exceed guard "
       << size_guard;
    throw InvalidArgument(os.str());
  }

  // Unknowns z = [x; y]: Q_omega entries on Omega and coordinates of Q_T in an
  // orthonormal basis B of T. With A = [vec(G E_k)], vec(Q) = A x + B y and
  // the two constraint blocks are A^T vec(Q) and B^T vec(Q).
  const Matrix A = support_image_basis(G, omega);
  const Matrix B = tangent_space_basis(f);
  Matrix stacked(m * n, card + dim_t);
  stacked << A, B;
  const auto entries = omega.entries();
  Vector rhs(card + dim_t);
  for (Index k = 0; k < card; ++k) {
    const auto [i, j] = entries[std::size_t(k)];
    rhs(k) = gamma * ((S0(i, j) > 0.0) - (S0(i, j) < 0.0));
  }
  if (dim_t > 0) {
    const Matrix uv = f.polar();
    rhs.tail(dim_t) = B.transpose() * Eigen::Map<const Vector>(uv.data(), m * n);
  }

  Certificate cert;
  cert.gamma = gamma;
  if (card + dim_t == 0) {
    cert.Q_omega = Matrix::Zero(G.cols(), n);
    cert.Q_T = Matrix::Zero(m, n);
    refresh_conditions(cert, G, S0, f);
    return cert;
  }

  const Matrix gram = stacked.transpose() * stacked;
  Eigen::CompleteOrthogonalDecomposition<Matrix> cod(gram);
  cod.setThreshold(1e-12);
  const Vector z = cod.solve(rhs);
  cert.solve_residual = (gram * z - rhs).norm() / std::max(1.0, rhs.norm());
  if (!z.allFinite() || cert.solve_residual > 1e-8) {
    std::ostringstream os;
    os << "construct_certificate: inconsistent system (least-squares residual "
       << cert.solve_residual
       << "); G Omega and T likely intersect nontrivially";
    throw CertificateError(os.str(), cert.solve_residual);
  }

  cert.Q_omega = Matrix::Zero(G.cols(), n);
  for (Index k = 0; k < card; ++k) {
    const auto [i, j] = entries[std::size_t(k)];
    cert.Q_omega(i, j) = z(k);
  }
  cert.Q_T = dim_t > 0 ? unvec(B * z.tail(dim_t), m, n) : Matrix::Zero(m, n);
  refresh_conditions(cert, G, S0, f);
  return cert;
}

// Judges the stored condition values; refresh_conditions recomputes them.
CertificateVerdict check_certificate(const Certificate& cert, const Matrix&,
                                     const Matrix&, const SvdFactors&,
                                     double strict_margin) {
  CertificateVerdict v;
  if (!(cert.cond_a_residual <= 1e-8)) {
    v.reason = "condition (a): P_T(Q) != U V^T";
  } else if (!(cert.cond_b_value <= 1.0 - strict_margin)) {
    v.reason = "condition (b): ||P_T^perp(Q)|| not below 1";
  } else if (!(cert.cond_c_residual <= 1e-8)) {
    v.reason = "condition (c): P_Omega(G^T Q) != gamma sign(S0)";
  } else if (!(cert.cond_d_value <= cert.gamma * (1.0 - strict_margin))) {
    v.reason = "condition (d): ||P_Omega^perp(G^T Q)||_inf not below gamma";
  } else {
    v.ok = true;
  }
  return v;
}

std::vector<GammaScanRow> certificate_gamma_scan(const Matrix& G, const Matrix& S0,
                                                 const SvdFactors& f,
                                                 const std::vector<double>& gammas,
                                                 double strict_margin, Exec exec) {
  for (double g : gammas)
    if (!(g > 0.0)) throw InvalidArgument("certificate_gamma_scan: gamma must be > 0");
  std::vector<GammaScanRow> rows(gammas.size());
  const auto count = static_cast<long long>(gammas.size());
  const bool par = exec == Exec::parallel;
#pragma omp parallel for schedule(dynamic) if (par)
  for (long long k = 0; k < count; ++k) {
    GammaScanRow& row = rows[std::size_t(k)];
    row.gamma = gammas[std::size_t(k)];
    try {
      const Certificate c = construct_certificate(G, S0, f, row.gamma);
      const CertificateVerdict v = check_certificate(c, G, S0, f, strict_margin);
      row.constructed = true;
      row.passed = v.ok;
      row.reason = v.reason;
      row.cond_b_value = c.cond_b_value;
      row.cond_d_value = c.cond_d_value;
    } catch (const CertificateError& e) {
      row.reason = e.what();
    }
  }
  return rows;
}

nlohmann::json to_json(const Certificate& c, const CertificateVerdict& v) {
  return {{"gamma", c.gamma},
          {"ok", v.ok},
          {"reason", v.reason},
          {"cond_a_residual", c.cond_a_residual},
          {"cond_b_value", c.cond_b_value},
          {"cond_c_residual", c.cond_c_residual},
          {"cond_d_value", c.cond_d_value},
          {"solve_residual", c.solve_residual},
          {"eps_omega_inf", c.eps_omega.size() ? c.eps_omega.cwiseAbs().maxCoeff() : 0.0},
          {"eps_T_spectral", spectral_norm(c.eps_T)}};
}

}  // namespace msep
