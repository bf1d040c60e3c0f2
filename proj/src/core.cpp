#include "msep/core.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace msep {

bool all_finite(const Matrix& a) { return a.allFinite(); }

void require_finite(const Matrix& a, std::string_view what) {
  if (!a.allFinite())
    throw InvalidArgument(std::string(what) + ": non-finite entry");
}

void require_same_shape(const Matrix& a, const Matrix& b,
                        std::string_view what) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    std::ostringstream os;
    os << what << ": shape mismatch " << a.rows() << "x" << a.cols() << " vs "
       << b.rows() << "x" << b.cols();
    throw InvalidArgument(os.str());
  }
}

Matrix SvdFactors::reconstruct() const {
  return U * singular_values.asDiagonal() * V.transpose();
}

Matrix SvdFactors::polar() const { return U * V.transpose(); }

SvdFactors SvdFactors::empty(Index rows, Index cols) {
  return {Matrix(rows, 0), Vector(0), Matrix(cols, 0)};
}

SvdFactors reduced_svd(const Matrix& a, double rank_tol) {
  require_finite(a, "reduced_svd");
  if (!(rank_tol >= 0.0)) throw InvalidArgument("reduced_svd: rank_tol < 0");
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  Index k = 0;
  if (s.size() > 0 && s(0) > 0.0) {
    const double cutoff = rank_tol * s(0);
    while (k < s.size() && s(k) > 0.0 && s(k) >= cutoff) ++k;
  }
  return {svd.matrixU().leftCols(k), s.head(k), svd.matrixV().leftCols(k)};
}

Vector singular_values(const Matrix& a) {
  require_finite(a, "singular_values");
  Eigen::BDCSVD<Matrix> svd(a);
  return svd.singularValues();
}

NormKind parse_norm_kind(std::string_view name) {
  if (name == "nuclear") return NormKind::nuclear;
  if (name == "spectral") return NormKind::spectral;
  if (name == "inf_entry") return NormKind::inf_entry;
  if (name == "one_entry") return NormKind::one_entry;
  if (name == "mi") return NormKind::mi;
  if (name == "frobenius") return NormKind::frobenius;
  throw InvalidArgument("unknown norm kind: " + std::string(name));
}

double spectral_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return singular_values(a)(0);
}

double nuclear_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return singular_values(a).sum();
}

double mi_norm(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  return a.cwiseAbs().rowwise().sum().maxCoeff();
}

double norm(const Matrix& a, NormKind kind) {
  require_finite(a, "norm");
  switch (kind) {
    case NormKind::nuclear: return nuclear_norm(a);
    case NormKind::spectral: return spectral_norm(a);
    case NormKind::inf_entry: return a.size() ? a.cwiseAbs().maxCoeff() : 0.0;
    case NormKind::one_entry: return a.cwiseAbs().sum();
    case NormKind::mi: return mi_norm(a);
    case NormKind::frobenius: return a.norm();
  }
  throw InvalidArgument("unknown norm kind");
}

Matrix sign(const Matrix& a) {
  return a.unaryExpr([](double v) { return double((v > 0.0) - (v < 0.0)); });
}

Matrix soft_threshold(const Matrix& a, double tau) {
  if (!(tau >= 0.0)) throw InvalidArgument("soft_threshold: tau < 0");
  return a.unaryExpr([tau](double v) {
    const double mag = std::abs(v) - tau;
    if (mag <= 0.0) return 0.0;
    return v > 0.0 ? mag : -mag;
  });
}

Matrix singular_value_threshold(const Matrix& a, double tau) {
  if (!(tau >= 0.0))
    throw InvalidArgument("singular_value_threshold: tau < 0");
  require_finite(a, "singular_value_threshold");
  if (tau == 0.0) return a;
  Eigen::BDCSVD<Matrix> svd(a, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const Vector& s = svd.singularValues();
  Index k = 0;
  while (k < s.size() && s(k) > tau) ++k;
  if (k == 0) return Matrix::Zero(a.rows(), a.cols());
  const Vector shrunk = s.head(k).array() - tau;
  return svd.matrixU().leftCols(k) * shrunk.asDiagonal() *
         svd.matrixV().leftCols(k).transpose();
}

Matrix tangent_project(const SvdFactors& f, const Matrix& x, bool complement) {
  if (f.U.rows() != x.rows() || f.V.rows() != x.cols())
    throw InvalidArgument("tangent_project: factors do not match X");
  if (f.rank() == 0) {
    return complement ? x : Matrix::Zero(x.rows(), x.cols());
  }
  // (I - UU^T) X (I - VV^T)
  const Matrix ux = f.U * (f.U.transpose() * x);
  const Matrix left = x - ux;
  const Matrix perp = left - (left * f.V) * f.V.transpose();
  if (complement) return perp;
  return x - perp;
}

SupportSet SupportSet::of(const Matrix& s, double zero_tol) {
  return SupportSet(Mask(s.array().abs() > zero_tol));
}

SupportSet SupportSet::full(Index rows, Index cols) {
  return SupportSet(Mask::Constant(rows, cols, true));
}

std::vector<std::pair<Index, Index>> SupportSet::entries() const {
  std::vector<std::pair<Index, Index>> out;
  out.reserve(static_cast<std::size_t>(cardinality()));
  for (Index j = 0; j < cols(); ++j)
    for (Index i = 0; i < rows(); ++i)
      if (mask_(i, j)) out.emplace_back(i, j);
  return out;
}

Matrix support_project(const Matrix& x, const SupportSet& omega,
                       bool complement) {
  if (x.rows() != omega.rows() || x.cols() != omega.cols())
    throw InvalidArgument("support_project: shape mismatch");
  if (complement) return omega.mask().select(Matrix::Zero(x.rows(), x.cols()), x);
  return omega.mask().select(x, Matrix::Zero(x.rows(), x.cols()));
}

Matrix pseudoinverse(const Matrix& h, double rank_tol) {
  const SvdFactors f = reduced_svd(h, rank_tol);
  return f.V * f.singular_values.cwiseInverse().asDiagonal() * f.U.transpose();
}

DegreeStats degree_stats(const SupportSet& omega) {
  DegreeStats st;
  if (omega.rows() == 0 || omega.cols() == 0) return st;
  const auto counts = omega.mask().cast<Index>();
  st.d_r = counts.rowwise().sum().maxCoeff();
  st.d_c = counts.colwise().sum().maxCoeff();
  st.d = std::max(st.d_r, st.d_c);
  return st;
}

DegreeStats degree_stats(const Matrix& s, double zero_tol) {
  if (!(zero_tol >= 0.0)) throw InvalidArgument("degree_stats: zero_tol < 0");
  return degree_stats(SupportSet::of(s, zero_tol));
}

double inner(const Matrix& a, const Matrix& b) {
  require_same_shape(a, b, "inner");
  return (a.array() * b.array()).sum();
}

Matrix read_matrix_csv(std::istream& in) {
  std::vector<double> values;
  Index cols = -1;
  Index rows = 0;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    Index count = 0;
    const char* p = line.data();
    const char* end = p + line.size();
    while (true) {
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      if (p < end && *p == '+') ++p;
      double v = 0.0;
      auto [next, ec] = std::from_chars(p, end, v);
      if (ec != std::errc() || !std::isfinite(v))
        throw ParseError("non-numeric field " + std::to_string(count + 1), lineno);
      values.push_back(v);
      ++count;
      p = next;
      while (p < end && (*p == ' ' || *p == '\t')) ++p;
      if (p == end) break;
      if (*p != ',')
        throw ParseError("non-numeric field " + std::to_string(count), lineno);
      ++p;
    }
    if (cols < 0) {
      cols = count;
    } else if (count != cols) {
      throw ParseError("ragged row: expected " + std::to_string(cols) +
                           " fields, got " + std::to_string(count),
                       lineno);
    }
    ++rows;
  }
  if (rows == 0) throw ParseError("empty matrix file", lineno);
  Matrix a(rows, cols);
  for (Index i = 0; i < rows; ++i)
    for (Index j = 0; j < cols; ++j) a(i, j) = values[i * cols + j];
  return a;
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open " + path.string());
  return read_matrix_csv(in);
}

void write_matrix_csv(std::ostream& out, const Matrix& a) {
  char buf[64];
  for (Index i = 0; i < a.rows(); ++i) {
    for (Index j = 0; j < a.cols(); ++j) {
      if (j) out << ',';
      auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, a(i, j));
      out.write(buf, ptr - buf);
    }
    out << '\n';
  }
}

void write_matrix_csv(const std::filesystem::path& path, const Matrix& a) {
  std::ofstream out(path);
  if (!out) throw InvalidArgument("cannot write " + path.string());
  write_matrix_csv(out, a);
}

}  // namespace msep
