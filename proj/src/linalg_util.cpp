#include "msep/linalg_util.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <functional>

namespace msep {

Matrix gaussian_matrix(Index rows, Index cols, Rng& rng, double sd) {
  Matrix a(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) a(i, j) = sd * rng.normal();
  return a;
}

Matrix haar_orthonormal(Index rows, Index cols, Rng& rng) {
  if (cols > rows) throw InvalidArgument("haar_orthonormal: cols > rows");
  const Matrix g = gaussian_matrix(rows, cols, rng);
  Eigen::HouseholderQR<Matrix> qr(g);
  Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
  const Matrix& r = qr.matrixQR();
  for (Index j = 0; j < cols; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

Matrix orthonormal_complement(const Matrix& u) {
  const Index m = u.rows();
  const Index r = u.cols();
  if (r == 0) return Matrix::Identity(m, m);
  Eigen::HouseholderQR<Matrix> qr(u);
  const Matrix full = qr.householderQ() * Matrix::Identity(m, m);
  return full.rightCols(m - r);
}

Matrix orthonormal_range(const Matrix& a, double rel_tol) {
  if (a.cols() == 0) return Matrix(a.rows(), 0);
  return reduced_svd(a, rel_tol).U;
}

double spectral_norm_gram(const Matrix& a) {
  if (a.size() == 0) return 0.0;
  const Matrix gram = a.rows() <= a.cols() ? Matrix(a * a.transpose())
                                           : Matrix(a.transpose() * a);
  Eigen::SelfAdjointEigenSolver<Matrix> es(gram, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

double max_projected_column_norm(const Matrix& u, const Matrix& cols) {
  if (cols.cols() == 0 || u.cols() == 0) return 0.0;
  return (u.transpose() * cols).colwise().norm().maxCoeff();
}

double top_d_sum(Vector values, Index d) {
  const Index k = std::min<Index>(d, values.size());
  if (k <= 0) return 0.0;
  double* begin = values.data();
  std::partial_sort(begin, begin + k, begin + values.size(),
                    std::greater<double>());
  double sum = 0.0;
  for (Index i = 0; i < k; ++i) sum += begin[i];
  return sum;
}

}  // namespace msep

namespace msep {

Matrix tangent_space_basis(const SvdFactors& f) {
  const Index m = f.U.rows();
  const Index n = f.V.rows();
  const Index r = f.rank();
  const Index dim = r * (m + n - r);
  Matrix basis = Matrix::Zero(m * n, dim);
  if (r == 0) return basis;
  Index col = 0;
  for (Index a = 0; a < r; ++a)
    for (Index j = 0; j < n; ++j, ++col)
      basis.col(col).segment(j * m, m) = f.U.col(a);
  const Matrix w = orthonormal_complement(f.U);
  for (Index b = 0; b < w.cols(); ++b)
    for (Index c = 0; c < r; ++c, ++col)
      for (Index j = 0; j < n; ++j)
        basis.col(col).segment(j * m, m) = f.V(j, c) * w.col(b);
  return basis;
}

Matrix support_image_basis(const Matrix& G, const SupportSet& omega) {
  const Index m = G.rows();
  const Index n = omega.cols();
  if (G.cols() != omega.rows())
    throw InvalidArgument("support_image_basis: G columns != support rows");
  const auto entries = omega.entries();
  Matrix out = Matrix::Zero(m * n, Index(entries.size()));
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto [i, j] = entries[k];
    out.col(Index(k)).segment(j * m, m) = G.col(i);
  }
  return out;
}

}  // namespace msep
