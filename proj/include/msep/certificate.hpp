// Dual certificates for exact recovery.
//
// Q is sought in G Omega + T as Q = G Q_omega + Q_T with
//   P_Omega(G^T Q) = gamma sign(S0)   and   P_T(Q) = U V^T,
// a square linear system in the |Omega| + dim T unknowns. Recovery is
// certified when additionally ||P_T^perp(Q)|| < 1 and
// ||P_Omega^perp(G^T Q)||_inf < gamma.
#pragma once

#include "msep/core.hpp"

#include <json.hpp>

#include <optional>
#include <string>
#include <vector>

namespace msep {

struct Certificate {
  Matrix Q;
  Matrix Q_omega;  ///< p x n, supported on Omega
  Matrix Q_T;      ///< m x n, in T
  Matrix eps_omega;
  Matrix eps_T;
  double cond_a_residual = 0.0;  ///< ||P_T(Q) - U V^T||_F
  double cond_b_value = 0.0;     ///< ||P_T^perp(Q)||
  double cond_c_residual = 0.0;  ///< ||P_Omega(G^T Q) - gamma sign(S0)||_inf
  double cond_d_value = 0.0;     ///< ||P_Omega^perp(G^T Q)||_inf
  double gamma = 0.0;
  double solve_residual = 0.0;   ///< residual of the linear system
};

/// Raised when the certificate system is singular or inconsistent.
class CertificateError : public std::runtime_error {
 public:
  CertificateError(const std::string& what, double residual)
      : std::runtime_error(what), residual_(residual) {}
  double residual() const noexcept { return residual_; }

 private:
  double residual_;
};

Certificate construct_certificate(const Matrix& G, const Matrix& S0,
                                  const SvdFactors& factors, double gamma,
                                  Index size_guard = 5000);

/// Recomputes the four condition values from Q_omega and Q_T.
void refresh_conditions(Certificate& cert, const Matrix& G, const Matrix& S0,
                        const SvdFactors& factors);

struct CertificateVerdict {
  bool ok = false;
  std::string reason;  ///< empty when ok
};

CertificateVerdict check_certificate(const Certificate& cert, const Matrix& G,
                                     const Matrix& S0, const SvdFactors& factors,
                                     double strict_margin = 1e-6);

struct GammaScanRow {
  double gamma = 0.0;
  bool constructed = false;
  bool passed = false;
  std::string reason;
  double cond_b_value = 0.0;
  double cond_d_value = 0.0;
};

std::vector<GammaScanRow> certificate_gamma_scan(const Matrix& G, const Matrix& S0,
                                                 const SvdFactors& factors,
                                                 const std::vector<double>& gammas,
                                                 double strict_margin = 1e-6,
                                                 Exec exec = Exec::parallel);

nlohmann::json to_json(const Certificate& cert, const CertificateVerdict& verdict);

}  // namespace msep
