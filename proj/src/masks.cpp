#include "msep/masks.hpp"

#include "msep/linalg_util.hpp"
#include "msep/rng.hpp"

#include <json.hpp>

#include <cmath>
#include <fstream>

namespace msep {

std::string to_string(MaskFamily f) {
  switch (f) {
    case MaskFamily::identity: return "identity";
    case MaskFamily::blur_circulant: return "blur_circulant";
    case MaskFamily::gaussian: return "gaussian";
    case MaskFamily::eda_convolution: return "eda_convolution";
    case MaskFamily::orthogonal_columns: return "orthogonal_columns";
    case MaskFamily::custom: return "custom";
  }
  return "custom";
}

MaskFamily parse_mask_family(std::string_view name) {
  for (auto f : {MaskFamily::identity, MaskFamily::blur_circulant,
                 MaskFamily::gaussian, MaskFamily::eda_convolution,
                 MaskFamily::orthogonal_columns, MaskFamily::custom})
    if (to_string(f) == name) return f;
  if (name == "blur") return MaskFamily::blur_circulant;
  if (name == "eda") return MaskFamily::eda_convolution;
  throw InvalidArgument("unknown mask family: " + std::string(name));
}

void Mask::cache_svd() { cached_svd = reduced_svd(H); }

SvdFactors Mask::svd() const {
  return cached_svd ? *cached_svd : reduced_svd(H);
}

Mask build_identity(Index n) {
  if (n < 1) throw InvalidArgument("build_identity: n < 1");
  Mask mask;
  mask.H = Matrix::Identity(n, n);
  mask.family = MaskFamily::identity;
  mask.params["n"] = double(n);
  return mask;
}

Mask build_blur_mask(Index p) {
  if (p < 2 || p % 2 != 0)
    throw InvalidArgument("build_blur_mask: p must be even and >= 2, got " +
                          std::to_string(p));
  Matrix circulant = Matrix::Zero(p, p);
  for (Index i = 0; i < p; ++i) {
    circulant(i, i) = 1.0;
    circulant(i, (i + 1) % p) = 1.0;
  }
  // Dropping the zero singular value leaves the rank p-1 polar factor.
  const SvdFactors f = reduced_svd(circulant);
  Mask mask;
  mask.H = f.polar();
  mask.family = MaskFamily::blur_circulant;
  mask.params["p"] = double(p);
  return mask;
}

Mask build_gaussian_mask(Index m, Index p, std::uint64_t seed) {
  if (m < 1 || p < 1) throw InvalidArgument("build_gaussian_mask: m, p >= 1");
  Rng rng(seed);
  const double sd = 1.0 / std::sqrt(double(m));
  Mask mask;
  mask.H = gaussian_matrix(m, p, rng, sd);
  mask.family = MaskFamily::gaussian;
  mask.params["m"] = double(m);
  mask.params["p"] = double(p);
  mask.seed = seed;
  return mask;
}

Vector eda_kernel(const EdaKernelParams& params) {
  if (!(params.tau1 > params.tau2) || !(params.tau2 > 0.0))
    throw InvalidArgument("eda kernel: requires tau1 > tau2 > 0");
  if (!(params.rate > 0.0) || !(params.window > 0.0))
    throw InvalidArgument("eda kernel: rate and window must be positive");
  const auto length = static_cast<Index>(std::llround(params.rate * params.window));
  Vector h(length);
  for (Index k = 0; k < length; ++k) {
    const double t = double(k) / params.rate;
    h(k) = 2.0 * (std::exp(-t / params.tau1) - std::exp(-t / params.tau2));
  }
  return h;
}

Mask build_eda_mask(const EdaKernelParams& params) {
  const Vector h = eda_kernel(params);
  const Index k = h.size();
  const Index p = params.p;
  const Index full_rows = k + p - 1;
  if (params.m < 1 || params.m > full_rows || p < 1)
    throw InvalidArgument("build_eda_mask: m must lie in [1, kernel + p - 1]");
  const Index offset = (full_rows - params.m) / 2;
  Mask mask;
  mask.H = Matrix::Zero(params.m, p);
  for (Index j = 0; j < p; ++j)
    for (Index t = 0; t < k; ++t) {
      const Index row = j + t - offset;
      if (row >= 0 && row < params.m) mask.H(row, j) = h(t);
    }
  mask.family = MaskFamily::eda_convolution;
  mask.params = {{"tau1", params.tau1}, {"tau2", params.tau2},
                 {"rate", params.rate}, {"window", params.window},
                 {"m", double(params.m)}, {"p", double(p)},
                 {"row_offset", double(offset)}};
  return mask;
}

Mask build_orthogonal_columns_mask(Index m, Index p, const Vector& column_scales,
                                   std::uint64_t seed) {
  if (m < p)
    throw InvalidArgument("build_orthogonal_columns_mask: requires m >= p");
  if (column_scales.size() != p || !(column_scales.array() > 0.0).all())
    throw InvalidArgument(
        "build_orthogonal_columns_mask: need p positive column scales");
  Rng rng(seed);
  Mask mask;
  mask.H = haar_orthonormal(m, p, rng) * column_scales.asDiagonal();
  mask.family = MaskFamily::orthogonal_columns;
  mask.params["m"] = double(m);
  mask.params["p"] = double(p);
  for (Index i = 0; i < p; ++i)
    mask.params["scale_" + std::to_string(i)] = column_scales(i);
  mask.seed = seed;
  return mask;
}

ScalingMode parse_scaling_mode(std::string_view name) {
  if (name == "spectral") return ScalingMode::spectral;
  if (name == "column_norm") return ScalingMode::column_norm;
  if (name == "custom") return ScalingMode::custom;
  throw InvalidArgument("unknown scaling mode: " + std::string(name));
}

ScaledMask scale_columns(const Mask& mask, ScalingMode mode,
                         const std::optional<Vector>& custom) {
  const Index p = mask.cols();
  ColumnScaling d;
  d.mode = mode;
  switch (mode) {
    case ScalingMode::spectral: {
      const double s = spectral_norm(mask.H);
      if (!(s > 0.0)) throw InvalidArgument("scale_columns: H is zero");
      d.diag = Vector::Constant(p, 1.0 / s);
      break;
    }
    case ScalingMode::column_norm: {
      d.diag.resize(p);
      for (Index i = 0; i < p; ++i) {
        const double c = mask.H.col(i).norm();
        if (!(c > 0.0))
          throw InvalidArgument("scale_columns: zero column " + std::to_string(i));
        d.diag(i) = 1.0 / c;
      }
      break;
    }
    case ScalingMode::custom: {
      if (!custom || custom->size() != p || !(custom->array() > 0.0).all())
        throw InvalidArgument("scale_columns: custom diagonal must be positive");
      d.diag = *custom;
      break;
    }
  }
  return {mask.H * d.diag.asDiagonal(), std::move(d)};
}

void save_mask(const Mask& mask, const std::filesystem::path& path) {
  write_matrix_csv(path, mask.H);
  nlohmann::json meta;
  meta["family"] = to_string(mask.family);
  meta["params"] = mask.params;
  if (mask.seed)
    meta["seed"] = *mask.seed;
  else
    meta["seed"] = nullptr;
  std::ofstream out(path.string() + ".json");
  out << meta.dump(2) << '\n';
}

Mask load_mask(const std::filesystem::path& path) {
  Mask mask;
  mask.H = read_matrix_csv(path);
  mask.family = MaskFamily::custom;
  return mask;
}

}  // namespace msep
