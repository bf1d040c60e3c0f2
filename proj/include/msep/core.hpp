// Dense-matrix primitives shared by every module: norms, reduced SVD,
// tangent-space and support projections, proximal operators.
#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>
#include <iosfwd>

namespace msep {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

/// Raised when a numeric argument or matrix shape violates a precondition.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by readers of malformed input files. Carries the 1-based line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(what + " (line " + std::to_string(line) + ")"),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Execution policy for kernels that have an OpenMP variant. The serial path
/// is the reference; parallel results are bit-identical to it.
enum class Exec { serial, parallel };

bool all_finite(const Matrix& a);
void require_finite(const Matrix& a, std::string_view what);
void require_same_shape(const Matrix& a, const Matrix& b, std::string_view what);

/// Reduced SVD A = U diag(sigma) V^T keeping singular values
/// >= rank_tol * sigma_max. U and V have orthonormal columns.
struct SvdFactors {
  Matrix U;
  Vector singular_values;
  Matrix V;

  Index rank() const noexcept { return singular_values.size(); }
  Index rows() const noexcept { return U.rows(); }
  Index cols() const noexcept { return V.rows(); }
  Matrix reconstruct() const;
  /// U V^T, the sign part of the polar decomposition.
  Matrix polar() const;
  static SvdFactors empty(Index rows, Index cols);
};

inline constexpr double kDefaultRankTol = 1e-10;

SvdFactors reduced_svd(const Matrix& a, double rank_tol = kDefaultRankTol);

/// Full singular spectrum, nonincreasing, length min(rows, cols).
Vector singular_values(const Matrix& a);

enum class NormKind { nuclear, spectral, inf_entry, one_entry, mi, frobenius };

NormKind parse_norm_kind(std::string_view name);
double norm(const Matrix& a, NormKind kind);
double spectral_norm(const Matrix& a);
double nuclear_norm(const Matrix& a);
/// Operator norm induced by the vector infinity norm: max absolute row sum.
double mi_norm(const Matrix& a);

/// Entrywise sign with sign(0) = 0.
Matrix sign(const Matrix& a);

/// Entrywise sign(a) max(|a| - tau, 0).
Matrix soft_threshold(const Matrix& a, double tau);

/// U max(Sigma - tau, 0) V^T, the proximal map of tau * nuclear norm.
Matrix singular_value_threshold(const Matrix& a, double tau);

/// Projection onto the tangent space T at a matrix with the given factors,
/// or onto its orthogonal complement. Uses the cached factors only.
Matrix tangent_project(const SvdFactors& factors, const Matrix& x,
                       bool complement = false);

/// Boolean support pattern of a p x n matrix.
class SupportSet {
 public:
  using Mask = Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic>;

  SupportSet() = default;
  SupportSet(Index rows, Index cols) : mask_(Mask::Constant(rows, cols, false)) {}
  explicit SupportSet(Mask mask) : mask_(std::move(mask)) {}

  /// Entries with |s_ij| > zero_tol.
  static SupportSet of(const Matrix& s, double zero_tol = 0.0);
  static SupportSet full(Index rows, Index cols);

  Index rows() const noexcept { return mask_.rows(); }
  Index cols() const noexcept { return mask_.cols(); }
  Index cardinality() const { return mask_.count(); }
  bool contains(Index i, Index j) const { return mask_(i, j); }
  void insert(Index i, Index j) { mask_(i, j) = true; }
  const Mask& mask() const noexcept { return mask_; }

  /// Support entries in column-major order.
  std::vector<std::pair<Index, Index>> entries() const;

 private:
  Mask mask_;
};

Matrix support_project(const Matrix& x, const SupportSet& omega,
                       bool complement = false);

/// Moore-Penrose pseudoinverse V Sigma^{-1} U^T on retained singular values.
Matrix pseudoinverse(const Matrix& h, double rank_tol = kDefaultRankTol);

struct DegreeStats {
  Index d_r = 0;  ///< max nonzeros in any row
  Index d_c = 0;  ///< max nonzeros in any column
  Index d = 0;    ///< max(d_r, d_c)
};

DegreeStats degree_stats(const Matrix& s, double zero_tol = 0.0);
DegreeStats degree_stats(const SupportSet& omega);

/// Frobenius inner product Tr(A^T B).
double inner(const Matrix& a, const Matrix& b);

// Matrix CSV: rows of comma-separated decimal literals, no header.
Matrix read_matrix_csv(std::istream& in);
Matrix read_matrix_csv(const std::filesystem::path& path);
/// Writes with 17 significant digits so values round-trip exactly.
void write_matrix_csv(std::ostream& out, const Matrix& a);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& a);

}  // namespace msep
