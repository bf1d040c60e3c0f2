// Mask families H and the column scalings G = H D.
#pragma once

#include "msep/core.hpp"

#include <map>
#include <optional>
#include <string>

namespace msep {

enum class MaskFamily {
  identity,
  blur_circulant,
  gaussian,
  eda_convolution,
  orthogonal_columns,
  custom
};

std::string to_string(MaskFamily f);
MaskFamily parse_mask_family(std::string_view name);

struct Mask {
  Matrix H;
  MaskFamily family = MaskFamily::custom;
  std::map<std::string, double> params;
  std::optional<std::uint64_t> seed;

  Index rows() const { return H.rows(); }
  Index cols() const { return H.cols(); }

  std::optional<SvdFactors> cached_svd;

  /// Computes and stores the reduced SVD of H.
  void cache_svd();
  /// Cached factors when present, otherwise computed on the fly.
  SvdFactors svd() const;
};

Mask build_identity(Index n);

/// Polar factor of the circulant with first row [1, 1, 0, ..., 0]. For even
/// p every nonzero singular value is 1 and the kernel is spanned by the
/// alternating vector (1, -1, ..., 1, -1).
Mask build_blur_mask(Index p);

/// i.i.d. N(0, 1/m) entries, filled column by column from the seeded stream.
Mask build_gaussian_mask(Index m, Index p, std::uint64_t seed);

struct EdaKernelParams {
  double tau1 = 2.0;
  double tau2 = 0.75;
  double rate = 4.0;      ///< samples per second
  double window = 40.0;   ///< seconds; kernel length = rate * window
  Index m = 240;          ///< rows kept from the full convolution
  Index p = 160;          ///< event positions (columns)
};

/// Samples f(t) = 2 (exp(-t/tau1) - exp(-t/tau2)) at t = k / rate.
Vector eda_kernel(const EdaKernelParams& params = {});

/// Central m x p block of the banded convolution matrix whose column j is the
/// kernel shifted down by j. Rows dropped from the top: floor((L - m) / 2).
Mask build_eda_mask(const EdaKernelParams& params = {});

/// Q diag(column_scales) with Q the orthonormal factor of a seeded Gaussian.
Mask build_orthogonal_columns_mask(Index m, Index p, const Vector& column_scales,
                                   std::uint64_t seed);

enum class ScalingMode { spectral, column_norm, custom };

struct ColumnScaling {
  Vector diag;  ///< diagonal of D, strictly positive
  ScalingMode mode = ScalingMode::custom;
};

struct ScaledMask {
  Matrix G;
  ColumnScaling D;
};

ScalingMode parse_scaling_mode(std::string_view name);

/// spectral: D = I / ||H||. column_norm: d_i = 1 / ||h_i||_2.
/// custom: the supplied diagonal.
ScaledMask scale_columns(const Mask& mask, ScalingMode mode,
                         const std::optional<Vector>& custom = std::nullopt);

/// Writes H as CSV and a `<path>.json` sidecar with family, params and seed.
void save_mask(const Mask& mask, const std::filesystem::path& path);
/// Reads H from CSV; the family is recorded as custom.
Mask load_mask(const std::filesystem::path& path);

}  // namespace msep
