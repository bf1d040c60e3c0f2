#include "msep/models.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace msep;

TEST(RandomSparse, CountsAndRanges) {
  EXPECT_EQ(random_sparse({4, 5, 0, 1, 2, 1}), Matrix::Zero(4, 5));
  const Matrix full = random_sparse({3, 4, 12, 1, 2, 2});
  EXPECT_TRUE((full.array() >= 1.0).all() && (full.array() <= 2.0).all());
  const Matrix s = random_sparse({100, 100, 300, 1, 2, 3});
  EXPECT_EQ(SupportSet::of(s).cardinality(), 300);
  EXPECT_THROW(random_sparse({2, 2, 5, 1, 2, 0}), InvalidArgument);
}

TEST(RandomSparse, MarginalInclusionIsUniform) {
  const Index p = 6, n = 5, s = 7, draws = 20000;
  Matrix freq = Matrix::Zero(p, n);
  for (Index t = 0; t < draws; ++t)
    freq += SupportSet::of(random_sparse({p, n, s, 1, 2, std::uint64_t(1000 + t)}))
                .mask()
                .cast<double>()
                .matrix();
  freq /= double(draws);
  const double q = double(s) / double(p * n);
  const double sd = std::sqrt(q * (1 - q) / double(draws));
  EXPECT_LE((freq.array() - q).abs().maxCoeff(), 4.0 * sd);
}

TEST(RandomSparse, Deterministic) {
  EXPECT_EQ(random_sparse({10, 10, 20, 1, 2, 5}), random_sparse({10, 10, 20, 1, 2, 5}));
}

TEST(RandomLowRank, RankOneUnitNuclear) {
  LowRankModelSpec spec;
  spec.m = 6;
  spec.n = 5;
  spec.r = 1;
  spec.singular_values = Vector::Ones(1);
  spec.seed = 3;
  const auto out = random_low_rank(spec);
  EXPECT_NEAR(nuclear_norm(out.L), 1.0, 1e-12);
  EXPECT_EQ(reduced_svd(out.L).rank(), 1);
}

TEST(RandomLowRank, FullRankRecoversSpectrum) {
  LowRankModelSpec spec;
  spec.m = 5;
  spec.n = 4;
  spec.r = 4;
  spec.singular_values = (Vector(4) << 1.0, 4.0, 2.5, 0.5).finished();
  spec.seed = 8;
  const auto out = random_low_rank(spec);
  const Vector s = singular_values(out.L);
  const Vector want = (Vector(4) << 4.0, 2.5, 1.0, 0.5).finished();
  EXPECT_LE((s - want).cwiseAbs().maxCoeff(), 1e-8);
  const auto& f = out.factors;
  EXPECT_LE((f.U.transpose() * f.U - Matrix::Identity(4, 4)).norm(), 1e-10);
  EXPECT_LE((f.V.transpose() * f.V - Matrix::Identity(4, 4)).norm(), 1e-10);
  EXPECT_NEAR(nuclear_norm(out.L), 8.0, 1e-8);
}

TEST(RandomLowRank, DefaultSingularValues) {
  LowRankModelSpec spec;
  spec.m = 20;
  spec.n = 10;
  spec.r = 2;
  spec.seed = 1;
  const Vector s = random_low_rank(spec).factors.singular_values;
  EXPECT_NEAR(s(0), 10.0, 1e-12);
  EXPECT_NEAR(s(1), 10.0, 1e-12);
}

TEST(RandomLowRank, RightSideModelWithFixedU) {
  LowRankModelSpec spec;
  spec.m = 4;
  spec.n = 3;
  spec.r = 1;
  spec.model = LowRankModel::right_side_orthogonal;
  spec.U_input = Matrix::Zero(4, 1);
  (*spec.U_input)(0, 0) = 1.0;
  spec.seed = 2;
  const Matrix L = random_low_rank(spec).L;
  EXPECT_GT(L.row(0).norm(), 0.0);
  EXPECT_EQ(L.bottomRows(3), Matrix::Zero(3, 3));

  spec.U_input = Matrix::Ones(4, 1);
  EXPECT_THROW(random_low_rank(spec), InvalidArgument);
  spec.U_input.reset();
  EXPECT_THROW(random_low_rank(spec), InvalidArgument);
}

TEST(RandomLowRank, RejectsBadRank) {
  LowRankModelSpec spec;
  spec.m = 3;
  spec.n = 3;
  spec.r = 4;
  EXPECT_THROW(random_low_rank(spec), InvalidArgument);
}

TEST(EdaTonic, NearlyRankOne) {
  const Vector s = singular_values(eda_tonic(240, 50, 1.0));
  EXPECT_LT(s(1) / s(0), 0.05);
  EXPECT_EQ(eda_tonic(4, 3, 0.0), Matrix::Zero(4, 3));
  EXPECT_EQ(reduced_svd(eda_tonic(10, 6, 2.0, 0.0)).rank(), 1);
}

TEST(EdaTonic, ColumnMajorReshape) {
  const Matrix t = eda_tonic(3, 2, 1.0);
  const double total = 6.0;
  EXPECT_DOUBLE_EQ(t(1, 1), 1.0 + 0.5 * std::sin(2.0 * std::numbers::pi * 4.0 / total));
}

TEST(GaussianNoise, Moments) {
  EXPECT_EQ(gaussian_noise(3, 3, 0.0, 1), Matrix::Zero(3, 3));
  const Matrix e = gaussian_noise(200, 200, 0.01, 4);
  const double mean = e.mean();
  const double sd = std::sqrt((e.array() - mean).square().sum() / double(e.size() - 1));
  EXPECT_NEAR(sd, 0.01, 0.0005);
  EXPECT_EQ(e, gaussian_noise(200, 200, 0.01, 4));
  EXPECT_THROW(gaussian_noise(2, 2, -1.0, 0), InvalidArgument);
}

// d_r = n < n log p once p > e, so "events certain" only holds for p = n = 2.
TEST(DegreeTail, FullSupport) {
  const auto tiny = degree_tail_check(2, 2, 4, 10, 1);
  EXPECT_EQ(tiny.row_frequency, 1.0);
  EXPECT_EQ(tiny.col_frequency, 1.0);
  const auto wide = degree_tail_check(10, 10, 100, 10, 1);
  EXPECT_EQ(wide.row_frequency, 0.0);
  EXPECT_EQ(wide.col_frequency, 0.0);
}

TEST(DegreeTail, SingleEntry) {
  // d_r = d_c = 1 and the thresholds are log(p)/p, log(n)/n, both <= 1.
  const auto rep = degree_tail_check(5, 7, 1, 20, 3);
  EXPECT_EQ(rep.row_frequency, 1.0);
  EXPECT_EQ(rep.col_frequency, 1.0);
}

TEST(DegreeTail, SerialMatchesParallel) {
  const auto a = degree_tail_check(30, 20, 60, 200, 9, Exec::serial);
  const auto b = degree_tail_check(30, 20, 60, 200, 9, Exec::parallel);
  EXPECT_EQ(a.row_frequency, b.row_frequency);
  EXPECT_EQ(a.col_frequency, b.col_frequency);
}

TEST(Instance, SavesTriplet) {
  const auto dir = std::filesystem::temp_directory_path() / "msep_test_instance";
  const Matrix s = random_sparse({3, 2, 2, 1, 2, 1});
  save_instance(dir, s, Matrix::Ones(3, 2), s + Matrix::Ones(3, 2), {{"seed", 1}});
  EXPECT_EQ(read_matrix_csv(dir / "S0.csv"), s);
  EXPECT_TRUE(std::filesystem::exists(dir / "spec.json"));
}
