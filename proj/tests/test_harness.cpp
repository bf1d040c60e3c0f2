#include "msep/harness.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace msep;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::filesystem::path fresh_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("msep_harness_" + name);
  std::filesystem::remove_all(dir);
  return dir;
}

ExperimentConfig smoke_config(ExperimentKind kind) {
  ExperimentConfig c;
  c.experiment = kind;
  c.m = c.n = c.p = 12;
  c.sparsity_levels = {0.02, 0.1};
  c.ranks = {1, 3};
  c.trials = 1;
  c.master_seed = 7;
  c.write_files = false;
  return c;
}

TrialRecord record(double frac, Index rank, double err_s, double err_l) {
  TrialRecord r;
  r.sparsity_fraction = frac;
  r.rank = rank;
  r.err_S = err_s;
  r.err_L = err_l;
  r.status = "converged";
  return r;
}

}  // namespace

TEST(Harness, SmokeGridHasFourCells) {
  const auto g = run_phase_experiment(smoke_config(ExperimentKind::phase_blur));
  EXPECT_EQ(g.cells.size(), 4u);
  EXPECT_EQ(g.records.size(), 4u);
  for (const auto& c : g.cells) EXPECT_EQ(c.trials, 1);
  EXPECT_LE(g.cell(0.02, 1).mean_err_S, g.cell(0.1, 3).mean_err_S);
}

TEST(Harness, RecordsInCanonicalOrder) {
  auto c = smoke_config(ExperimentKind::phase_gaussian);
  c.trials = 2;
  const auto g = run_phase_experiment(c);
  std::size_t k = 0;
  for (double f : c.sparsity_levels)
    for (Index r : c.ranks)
      for (Index t = 0; t < c.trials; ++t, ++k) {
        EXPECT_EQ(g.records[k].sparsity_fraction, f);
        EXPECT_EQ(g.records[k].rank, r);
        EXPECT_EQ(g.records[k].trial, t);
      }
}

TEST(Harness, ReplayIsBitIdenticalAcrossWorkerCounts) {
  auto c = smoke_config(ExperimentKind::phase_gaussian);
  c.trials = 2;
  c.write_files = true;
  c.out_dir = fresh_dir("replay_a");
  c.parallelism = 1;
  run_phase_experiment(c);
  auto d = c;
  d.out_dir = fresh_dir("replay_b");
  d.parallelism = 3;
  run_phase_experiment(d);
  for (const char* f : {"grid.csv", "grid_summary.csv", "heatmap_err_S.ppm", "heatmap_err_L.ppm"})
    EXPECT_EQ(slurp(c.out_dir / f), slurp(d.out_dir / f)) << f;
  EXPECT_TRUE(std::filesystem::exists(c.out_dir / "run.json"));
}

TEST(Harness, TrialSeedDependsOnlyOnKey) {
  EXPECT_EQ(trial_seed(5, 10, 2, 1), trial_seed(5, 10, 2, 1));
  EXPECT_NE(trial_seed(5, 10, 2, 1), trial_seed(5, 10, 2, 0));
  EXPECT_NE(trial_seed(5, 10, 2, 1), trial_seed(5, 2, 10, 1));
  EXPECT_EQ(trial_seed(5, 10, 2, 1) ^ 5, trial_seed(6, 10, 2, 1) ^ 6);
}

TEST(Harness, StoredMeansMatchTrialColumns) {
  auto c = smoke_config(ExperimentKind::phase_blur);
  c.trials = 3;
  const auto g = run_phase_experiment(c);
  std::stringstream ss;
  write_grid_csv(ss, g.records);
  const auto back = read_grid_csv(ss);
  ASSERT_EQ(back.size(), g.records.size());
  const auto again = summarize(back);
  ASSERT_EQ(again.size(), g.cells.size());
  for (std::size_t i = 0; i < again.size(); ++i) {
    EXPECT_NEAR(again[i].mean_err_S, g.cells[i].mean_err_S, 1e-12);
    EXPECT_NEAR(again[i].mean_err_L, g.cells[i].mean_err_L, 1e-12);
    EXPECT_EQ(again[i].trials, 3);
  }
}

TEST(Harness, SolverFailuresBecomeRows) {
  auto c = smoke_config(ExperimentKind::phase_gaussian);
  c.solver.max_iter = 1;
  const auto g = run_phase_experiment(c);
  EXPECT_EQ(g.records.size(), 4u);
  for (const auto& r : g.records) EXPECT_EQ(r.status, "max_iter");
  for (const auto& cell : g.cells) EXPECT_EQ(cell.failures, 1);
}

TEST(Harness, ConfigValidation) {
  auto c = smoke_config(ExperimentKind::phase_blur);
  c.sparsity_levels = {};
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = smoke_config(ExperimentKind::phase_blur);
  c.sparsity_levels = {1.5};
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = smoke_config(ExperimentKind::phase_blur);
  c.trials = 0;
  EXPECT_THROW(c.validate(), InvalidArgument);
  c = smoke_config(ExperimentKind::phase_blur);
  c.m = 13;
  EXPECT_THROW(c.validate(), InvalidArgument);
}

TEST(Harness, ConfigFromJson) {
  const auto c = experiment_config_from_json(
      nlohmann::json{{"experiment", "phase_gaussian"},
                     {"m", 30},
                     {"n", 20},
                     {"p", 25},
                     {"ranks", {1, 2}},
                     {"trials", 3},
                     {"gamma_rule", "explicit"},
                     {"gamma", 0.25},
                     {"solver", {{"max_iter", 77}}}});
  EXPECT_EQ(c.experiment, ExperimentKind::phase_gaussian);
  EXPECT_EQ(c.m, 30);
  EXPECT_EQ(c.ranks, (std::vector<Index>{1, 2}));
  EXPECT_EQ(c.solver.max_iter, 77);
  EXPECT_EQ(c.resolved_gamma(), 0.25);
  const auto e = experiment_config_from_json({{"experiment", "eda"}});
  EXPECT_EQ(e.m, 240);
  EXPECT_EQ(e.p, 160);
  EXPECT_EQ(e.n, 50);
  EXPECT_EQ(e.event_counts.size(), 14u);
  EXPECT_NEAR(e.resolved_gamma(), 1.0 / std::sqrt(50.0), 1e-15);
  EXPECT_THROW(experiment_config_from_json({{"experiment", "nope"}}), InvalidArgument);
}

TEST(Harness, FullScaleDefaults) {
  const ExperimentConfig c;
  EXPECT_EQ(c.m, 100);
  EXPECT_EQ(c.ranks.size(), 10u);
  EXPECT_EQ(c.ranks.front(), 1);
  EXPECT_EQ(c.ranks.back(), 28);
  EXPECT_EQ(c.sparsity_levels.front(), 0.01);
  EXPECT_EQ(c.sparsity_levels.back(), 0.30);
  EXPECT_EQ(c.trials, 8);
  EXPECT_NEAR(c.resolved_gamma(), 0.1, 1e-15);
}

TEST(Eda, NoiselessRunBeatsNoisyRun) {
  auto c = experiment_config_from_json({{"experiment", "eda"}});
  c.event_counts = {4};
  c.trials = 1;
  c.write_files = false;
  c.solver.max_iter = 600;
  const auto noisy = run_eda_experiment(c);
  c.noise_sigma = 0.0;
  const auto clean = run_eda_experiment(c);
  EXPECT_LT(clean.records[0].err_S, noisy.records[0].err_S);
}

TEST(Eda, NoiseOnlyGivesNearZeroSparsePart) {
  auto c = experiment_config_from_json({{"experiment", "eda"}});
  c.event_counts = {0};
  c.trials = 1;
  c.write_files = true;
  c.out_dir = fresh_dir("eda_noise");
  c.solver.max_iter = 600;
  const auto g = run_eda_experiment(c);
  // truth is 0, so err_S is ||S_hat||_F; compare with the noise level.
  EXPECT_LE(g.records[0].err_S, 0.01 * std::sqrt(240.0 * 50.0));
  const std::string curve = slurp(c.out_dir / "curve.csv");
  EXPECT_EQ(curve.rfind("event_count,trial,seed,err_X,err_T,status,iters,seconds\n", 0), 0u);
}

TEST(Heatmap, SingleDarkPixel) {
  const auto img = render_heatmap({record(0.1, 1, 0.0, 0.0)}, HeatmapField::err_S);
  EXPECT_EQ(img, std::string("P6\n1 1\n255\n") + std::string(3, '\0'));
}

TEST(Heatmap, ClipsAtOne) {
  const auto img = render_heatmap({record(0.1, 1, 3.0, 0.0)}, HeatmapField::err_S);
  EXPECT_EQ(img.substr(img.size() - 3), std::string(3, char(255)));
}

TEST(Heatmap, GoldenFixture) {
  const std::filesystem::path dir = MSEP_FIXTURE_DIR;
  const auto out = fresh_dir("golden");
  std::filesystem::create_directories(out);
  for (const char* field : {"err_S", "err_L"}) {
    render_heatmap(dir / "grid_2x2.csv", parse_heatmap_field(field),
                   out / (std::string(field) + ".ppm"));
    EXPECT_EQ(slurp(out / (std::string(field) + ".ppm")),
              slurp(dir / (std::string("grid_2x2_") + field + ".ppm")))
        << field;
  }
}

TEST(Heatmap, MalformedCsvReportsRow) {
  std::stringstream ss(
      "sparsity_fraction,rank,trial,seed,err_S,err_L,status,iters,seconds\n"
      "0.1,1,0,1,0.5,0.5,converged,3,0\n"
      "0.1,1,1,2,zzz,0.5,converged,3,0\n");
  try {
    read_grid_csv(ss);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  std::stringstream short_row(
      "sparsity_fraction,rank,trial,seed,err_S,err_L,status,iters,seconds\n0.1,1\n");
  EXPECT_THROW(read_grid_csv(short_row), ParseError);
}
