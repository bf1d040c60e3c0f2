// Random-matrix and small dense helpers used across modules.
#pragma once

#include "msep/core.hpp"
#include "msep/rng.hpp"

namespace msep {

/// i.i.d. N(0, sd^2), filled column by column.
Matrix gaussian_matrix(Index rows, Index cols, Rng& rng, double sd = 1.0);

/// Orthonormal columns uniformly distributed on the Stiefel manifold:
/// QR of a Gaussian matrix with the signs of diag(R) folded into Q.
Matrix haar_orthonormal(Index rows, Index cols, Rng& rng);

/// Orthonormal basis of the complement of Ran(U), U with orthonormal columns.
Matrix orthonormal_complement(const Matrix& u);

/// Orthonormal basis of Ran(A) with rank decided at rel_tol * sigma_max.
Matrix orthonormal_range(const Matrix& a, double rel_tol = 1e-10);

/// Largest singular value via the smaller Gram matrix; cheaper than an SVD.
double spectral_norm_gram(const Matrix& a);

/// Max over columns of ||U^T x||_2 for x ranging over the columns of `cols`.
double max_projected_column_norm(const Matrix& u, const Matrix& cols);

/// Orthonormal basis of the tangent space T at a matrix with these factors,
/// as vec (column-major) columns: {u_a e_j^T} then {w_b v_c^T}, w_b spanning
/// Ran(U)^perp. Dimension r (m + n - r).
Matrix tangent_space_basis(const SvdFactors& factors);

/// Columns vec(G E_ij) for (i, j) in Omega, column-major order of Omega.
Matrix support_image_basis(const Matrix& G, const SupportSet& omega);

/// Sum of the d largest entries of a nonnegative vector.
double top_d_sum(Vector values, Index d);

}  // namespace msep
