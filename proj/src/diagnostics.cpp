#include "msep/diagnostics.hpp"

#include "msep/linalg_util.hpp"
#include "msep/rng.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace msep {

namespace {

Matrix rinp_residual(const Matrix& G) {
  return Matrix::Identity(G.cols(), G.cols()) - G.transpose() * G;
}

void require_d(const Matrix& G, Index d, const char* who) {
  if (d < 1 || d > G.cols()) {
    std::ostringstream os;
    os << who << ": d = " << d << " outside [1, " << G.cols() << "]";
    throw InvalidArgument(os.str());
  }
}

}  // namespace

double rinp_delta_exact(const Matrix& G, Index d, Exec exec) {
  require_d(G, d, "rinp_delta_exact");
  require_finite(G, "rinp_delta_exact");
  const Matrix abs_p = rinp_residual(G).cwiseAbs();
  const Index p = abs_p.rows();
  double best = 0.0;
  const bool par = exec == Exec::parallel;
#pragma omp parallel for schedule(static) reduction(max : best) if (par)
  for (Index i = 0; i < p; ++i) {
    // P is symmetric, so column i holds row i contiguously.
    best = std::max(best, top_d_sum(abs_p.col(i), d));
  }
  return best;
}

double rinp_delta_bruteforce(const Matrix& G, Index d) {
  require_d(G, d, "rinp_delta_bruteforce");
  const Matrix abs_p = rinp_residual(G).cwiseAbs();
  const Index p = abs_p.rows();
  std::vector<bool> pick(static_cast<std::size_t>(p), false);
  std::fill(pick.begin(), pick.begin() + d, true);
  double best = 0.0;
  do {
    double row_max = 0.0;
    for (Index i = 0; i < p; ++i) {
      double sum = 0.0;
      for (Index j = 0; j < p; ++j)
        if (pick[std::size_t(j)]) sum += abs_p(i, j);
      row_max = std::max(row_max, sum);
    }
    best = std::max(best, row_max);
  } while (std::prev_permutation(pick.begin(), pick.end()));
  return best;
}

double rinp_delta_support(const Matrix& G, const SupportSet& omega) {
  if (G.cols() != omega.rows())
    throw InvalidArgument("rinp_delta_support: G columns != support rows");
  const Matrix abs_p = rinp_residual(G).cwiseAbs();
  double best = 0.0;
  for (Index j = 0; j < omega.cols(); ++j) {
    Vector acc = Vector::Zero(abs_p.rows());
    bool any = false;
    for (Index k = 0; k < omega.rows(); ++k)
      if (omega.contains(k, j)) {
        acc += abs_p.col(k);
        any = true;
      }
    if (any) best = std::max(best, acc.maxCoeff());
  }
  return best;
}

double rinp_delta_kernel_bound(const std::vector<Vector>& basis, Index d) {
  if (basis.empty()) return 0.0;
  const Index p = basis.front().size();
  if (d < 1 || d > p)
    throw InvalidArgument("rinp_delta_kernel_bound: d outside [1, p]");
  Vector w = Vector::Zero(p);
  for (const Vector& v : basis) {
    if (v.size() != p)
      throw InvalidArgument("rinp_delta_kernel_bound: vectors differ in length");
    if (std::abs(v.norm() - 1.0) > 1e-8)
      throw InvalidArgument("rinp_delta_kernel_bound: basis vector is not unit norm");
    w += v.cwiseAbs() * v.cwiseAbs().maxCoeff();
  }
  return top_d_sum(w, d);
}

std::vector<Vector> kernel_basis(const Matrix& H, double rank_tol) {
  Eigen::BDCSVD<Matrix> svd(H, Eigen::ComputeFullV);
  const Vector& s = svd.singularValues();
  Index k = 0;
  if (s.size() > 0 && s(0) > 0.0)
    while (k < s.size() && s(k) >= rank_tol * s(0)) ++k;
  std::vector<Vector> out;
  for (Index j = k; j < H.cols(); ++j) out.emplace_back(svd.matrixV().col(j));
  return out;
}

namespace {

// G A for the vertex A = sum_t signs_t E_{entries_t}, restricted to the
// columns touched by Omega (the others are zero and do not affect ||.||).
struct VertexImage {
  const Matrix& G;
  std::vector<std::pair<Index, Index>> entries;  // (row of A, compact column)
  Index active_cols = 0;

  VertexImage(const Matrix& g, const SupportSet& omega) : G(g) {
    std::vector<Index> compact(std::size_t(omega.cols()), -1);
    for (auto [i, j] : omega.entries()) {
      if (compact[std::size_t(j)] < 0) compact[std::size_t(j)] = active_cols++;
      entries.emplace_back(i, compact[std::size_t(j)]);
    }
  }

  template <typename SignFn>
  double norm(SignFn&& sign_of) const {
    Matrix ga = Matrix::Zero(G.rows(), active_cols);
    for (std::size_t t = 0; t < entries.size(); ++t)
      ga.col(entries[t].second) += sign_of(t) * G.col(entries[t].first);
    return spectral_norm_gram(ga);
  }
};

}  // namespace

double mu_exact_enumerate(const Matrix& G, const SupportSet& omega, Exec exec) {
  if (G.cols() != omega.rows())
    throw InvalidArgument("mu_exact_enumerate: G columns != support rows");
  const VertexImage image(G, omega);
  const auto k = image.entries.size();
  if (k == 0) return 0.0;
  if (k > 62) throw InvalidArgument("mu_exact_enumerate: support too large");
  // ||G A|| = ||G (-A)||, so the first sign is fixed to +1.
  const long long patterns = 1LL << (k - 1);
  double best = 0.0;
  const bool par = exec == Exec::parallel;
#pragma omp parallel for schedule(static) reduction(max : best) if (par)
  for (long long bits = 0; bits < patterns; ++bits) {
    const double v = image.norm([bits](std::size_t t) {
      return (t == 0 || !((bits >> (t - 1)) & 1LL)) ? 1.0 : -1.0;
    });
    best = std::max(best, v);
  }
  return best;
}

MuBounds mu_bounds(const Matrix& G, const SupportSet& omega,
                   const MuOptions& options) {
  if (G.cols() != omega.rows())
    throw InvalidArgument("mu_bounds: G columns != support rows");
  if (options.enumerate_cap < 0) throw InvalidArgument("mu_bounds: enumerate_cap < 0");
  MuBounds out;
  const Index card = omega.cardinality();
  if (card == 0) {
    out.exact = 0.0;
    return out;
  }
  out.upper = spectral_norm(G) * double(degree_stats(omega).d);

  const VertexImage image(G, omega);
  double lower = image.norm([](std::size_t) { return 1.0; });
  const bool par = options.exec == Exec::parallel;
#pragma omp parallel for schedule(static) reduction(max : lower) if (par)
  for (Index s = 0; s < options.samples; ++s) {
    Rng rng(combine_seed(options.seed, std::uint64_t(s)));
    std::vector<double> signs(image.entries.size());
    for (double& v : signs) v = rng.rademacher();
    lower = std::max(lower, image.norm([&](std::size_t t) { return signs[t]; }));
  }
  out.lower = lower;
  if (card <= options.enumerate_cap) {
    out.exact = mu_exact_enumerate(G, omega, options.exec);
    out.lower = std::min(out.lower, *out.exact);
  }
  return out;
}

IncoherenceStats incoherence_stats(const Matrix& G, const SvdFactors& f) {
  if (f.rank() > 0 && f.U.rows() != G.rows())
    throw InvalidArgument("incoherence_stats: U rows != G rows");
  IncoherenceStats st;
  st.alpha = G.cols() ? G.colwise().norm().maxCoeff() : 0.0;
  st.beta_U_G = max_projected_column_norm(f.U, G);
  st.beta_V = (f.rank() > 0 && f.V.rows() > 0) ? f.V.rowwise().norm().maxCoeff() : 0.0;
  st.inc = st.beta_U_G + st.alpha * st.beta_V;
  return st;
}

XiBounds xi_bounds(const Matrix& G, const SvdFactors& f, Index samples,
                   std::uint64_t seed, Exec exec) {
  if (samples < 1) throw InvalidArgument("xi_bounds: samples >= 1");
  if (f.U.rows() != G.rows())
    throw InvalidArgument("xi_bounds: factors do not match G");
  XiBounds out;
  if (f.rank() == 0) return out;
  const IncoherenceStats st = incoherence_stats(G, f);
  out.upper = st.inc;

  const Matrix Gt = G.transpose();
  const Index m = f.U.rows();
  const Index n = f.V.rows();
  auto value = [&](const Matrix& b) { return (Gt * b).cwiseAbs().maxCoeff(); };

  // Structured feasible points: U V^T, a rank-one B aligned with the column
  // of G most inside Ran(U), and one aligned with the longest column of G and
  // the most coherent direction of V. Each has unit spectral norm and lies in T.
  double lower = value(f.polar() / spectral_norm(f.polar()));
  {
    const Matrix proj = f.U.transpose() * G;
    Index i_best = 0;
    proj.colwise().norm().maxCoeff(&i_best);
    Vector u = f.U * proj.col(i_best);
    if (u.norm() > 0.0) {
      u.normalize();
      lower = std::max(lower, value(u * Vector::Unit(n, 0).transpose()));
    }
    Index g_best = 0;
    G.colwise().norm().maxCoeff(&g_best);
    Index j_best = 0;
    f.V.rowwise().norm().maxCoeff(&j_best);
    Vector y = f.V * f.V.row(j_best).transpose();
    Vector x = G.col(g_best);
    if (y.norm() > 0.0 && x.norm() > 0.0) {
      y.normalize();
      x.normalize();
      lower = std::max(lower, value(x * y.transpose()));
    }
  }

  bool failed = false;
  const bool par = exec == Exec::parallel;
#pragma omp parallel for schedule(static) reduction(max : lower) reduction(|| : failed) if (par)
  for (Index s = 0; s < samples; ++s) {
    Rng rng(combine_seed(seed, std::uint64_t(s)));
    bool ok = false;
    for (int attempt = 0; attempt < 100 && !ok; ++attempt) {
      const Matrix b = tangent_project(f, gaussian_matrix(m, n, rng));
      const double nb = spectral_norm(b);
      if (nb > 0.0 && std::isfinite(nb)) {
        lower = std::max(lower, value(b / nb));
        ok = true;
      }
    }
    if (!ok) failed = true;
  }
  if (failed) throw std::runtime_error("xi_bounds: degenerate P_T(Z) after 100 draws");
  out.lower = lower;
  return out;
}

double GammaInterval::midpoint() const {
  if (std::isinf(hi)) return lo > 0.0 ? 2.0 * lo : 1.0;
  return 0.5 * (lo + hi);
}

std::optional<GammaInterval> gamma_interval(double u, double e, double delta) {
  if (!(u >= 0.0) || !(e >= 0.0))
    throw InvalidArgument("gamma_interval: u and e must be nonnegative");
  if (!(delta >= 0.0) || !(delta < 1.0 / 3.0))
    throw InvalidArgument("gamma_interval: requires 0 <= delta < 1/3");
  if (!(u * e < (1.0 - 3.0 * delta) / 6.0)) return std::nullopt;
  GammaInterval g;
  g.lo = (1.0 + delta) * e / (1.0 - 3.0 * delta - 4.0 * u * e);
  g.hi = u == 0.0 ? std::numeric_limits<double>::infinity()
                  : (1.0 - delta - 3.0 * u * e) / u;
  return g;
}

bool theorem_verdict(double delta, double mu_upper, double xi_upper) {
  if (!(delta < 1.0 / 3.0)) return false;
  return mu_upper * xi_upper < (1.0 - 3.0 * delta) / 6.0;
}

double transversality_margin(const Matrix& G, const SupportSet& omega,
                             const SvdFactors& f, Index max_dimension) {
  const Index card = omega.cardinality();
  const Index r = f.rank();
  const Index m = G.rows();
  const Index n = omega.cols();
  const Index dim_t = r * (m + n - r);
  if (card + dim_t > max_dimension) {
    std::ostringstream os;
    os << "transversality_check: |Omega| + dim T = " << card << " + " << dim_t
       << " exceeds " << max_dimension;
    throw InvalidArgument(os.str());
  }
  if (card == 0 || r == 0) return 1.0;
  if (f.U.rows() != m || f.V.rows() != n)
    throw InvalidArgument("transversality_check: factors do not match");
  if (card + dim_t > m * n) return 0.0;
  const Matrix range = orthonormal_range(support_image_basis(G, omega));
  if (range.cols() == 0) return 1.0;
  Matrix stacked(m * n, range.cols() + dim_t);
  stacked << range, tangent_space_basis(f);
  const Vector s = singular_values(stacked);
  return s(s.size() - 1);
}

bool transversality_check(const Matrix& G, const SupportSet& omega,
                          const SvdFactors& f, const TransversalityOptions& opt) {
  return transversality_margin(G, omega, f, opt.max_dimension) > opt.tol;
}

DiagnosticsReport diagnose(const Matrix& G, const SupportSet& omega,
                           const SvdFactors& f, const DiagnoseOptions& opt) {
  require_finite(G, "diagnose");
  DiagnosticsReport rep;
  const DegreeStats deg = degree_stats(omega);
  rep.d_used = deg.d_c;
  rep.delta = deg.d_c > 0 ? rinp_delta_exact(G, deg.d_c, opt.mu.exec) : 0.0;
  rep.delta_support = rinp_delta_support(G, omega);

  const MuBounds mu = mu_bounds(G, omega, opt.mu);
  rep.mu_lower = mu.lower;
  rep.mu_upper = mu.upper;
  rep.mu_exact = mu.exact;

  const IncoherenceStats st = incoherence_stats(G, f);
  rep.alpha = st.alpha;
  rep.beta_U_G = st.beta_U_G;
  rep.beta_V = st.beta_V;
  rep.inc = st.inc;
  rep.spectral_norm_G = spectral_norm(G);
  if (f.rank() > 0) {
    const XiBounds xi = xi_bounds(G, f, opt.xi_samples, opt.xi_seed, opt.mu.exec);
    rep.xi_lower = xi.lower;
    rep.xi_upper = xi.upper;
  }

  // Certified inputs: the support-exact delta and exact mu when enumerated
  // are themselves upper bounds on the quantities the theorem uses.
  const double delta_cert = std::min(rep.delta, rep.delta_support);
  const double mu_cert = mu.exact ? std::min(*mu.exact, mu.upper) : mu.upper;
  rep.theorem_ok = theorem_verdict(delta_cert, mu_cert, rep.xi_upper);
  rep.theorem_ok_optimistic = theorem_verdict(delta_cert, rep.mu_lower, rep.xi_lower);
  if (rep.theorem_ok)
    rep.gamma_interval = gamma_interval(mu_cert, rep.xi_upper, delta_cert);

  if (opt.check_transversality) {
    const Index dim = omega.cardinality() + f.rank() * (G.rows() + omega.cols() - f.rank());
    if (dim <= opt.transversality.max_dimension)
      rep.transversal = transversality_check(G, omega, f, opt.transversality);
  }
  return rep;
}

nlohmann::json to_json(const DiagnosticsReport& r) {
  nlohmann::json j;
  j["delta"] = r.delta;
  j["d_used"] = r.d_used;
  j["delta_support"] = r.delta_support;
  j["mu_lower"] = r.mu_lower;
  j["mu_upper"] = r.mu_upper;
  j["mu_exact"] = r.mu_exact ? nlohmann::json(*r.mu_exact) : nlohmann::json(nullptr);
  j["xi_lower"] = r.xi_lower;
  j["xi_upper"] = r.xi_upper;
  j["alpha"] = r.alpha;
  j["beta_U_G"] = r.beta_U_G;
  j["beta_V"] = r.beta_V;
  j["inc"] = r.inc;
  j["spectral_norm_G"] = r.spectral_norm_G;
  j["theorem_ok"] = r.theorem_ok;
  j["theorem_ok_optimistic_unverified"] = r.theorem_ok_optimistic;
  if (r.gamma_interval) {
    j["gamma_lo"] = r.gamma_interval->lo;
    j["gamma_hi"] = std::isinf(r.gamma_interval->hi) ? nlohmann::json("inf")
                                                     : nlohmann::json(r.gamma_interval->hi);
  } else {
    j["gamma_lo"] = nullptr;
    j["gamma_hi"] = nullptr;
  }
  j["transversal"] = r.transversal ? nlohmann::json(*r.transversal) : nlohmann::json(nullptr);
  return j;
}

}  // namespace msep
