#include "msep/harness.hpp"

#include "msep/masks.hpp"
#include "msep/models.hpp"
#include "msep/rng.hpp"

#include <omp.h>

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace msep {

std::string to_string(ExperimentKind k) {
  switch (k) {
    case ExperimentKind::phase_blur: return "phase_blur";
    case ExperimentKind::phase_gaussian: return "phase_gaussian";
    case ExperimentKind::eda: return "eda";
  }
  return "phase_blur";
}

ExperimentKind parse_experiment_kind(std::string_view name) {
  if (name == "phase_blur") return ExperimentKind::phase_blur;
  if (name == "phase_gaussian") return ExperimentKind::phase_gaussian;
  if (name == "eda") return ExperimentKind::eda;
  throw InvalidArgument("unknown experiment: " + std::string(name));
}

std::string to_string(GammaRule g) {
  switch (g) {
    case GammaRule::inv_sqrt_m: return "inv_sqrt_m";
    case GammaRule::inv_sqrt_n: return "inv_sqrt_n";
    case GammaRule::explicit_value: return "explicit";
  }
  return "inv_sqrt_m";
}

GammaRule parse_gamma_rule(std::string_view name) {
  if (name == "inv_sqrt_m") return GammaRule::inv_sqrt_m;
  if (name == "inv_sqrt_n") return GammaRule::inv_sqrt_n;
  if (name == "explicit") return GammaRule::explicit_value;
  throw InvalidArgument("unknown gamma rule: " + std::string(name));
}

void ExperimentConfig::validate() const {
  if (m < 1 || n < 1 || p < 1) throw InvalidArgument("experiment: dims must be >= 1");
  if (trials < 1) throw InvalidArgument("experiment: trials must be >= 1");
  if (parallelism < 1) throw InvalidArgument("experiment: parallelism must be >= 1");
  if (!(value_low <= value_high)) throw InvalidArgument("experiment: value_low > value_high");
  if (experiment == ExperimentKind::eda) {
    if (event_counts.empty()) throw InvalidArgument("experiment: event_counts empty");
    for (Index c : event_counts)
      if (c < 0 || c > p) throw InvalidArgument("experiment: event count outside [0, p]");
    if (!(noise_sigma >= 0.0)) throw InvalidArgument("experiment: noise_sigma < 0");
  } else {
    if (sparsity_levels.empty() || ranks.empty())
      throw InvalidArgument("experiment: sparsity_levels and ranks must be nonempty");
    for (double f : sparsity_levels)
      if (!(f > 0.0 && f <= 1.0))
        throw InvalidArgument("experiment: sparsity fractions must lie in (0, 1]");
    for (Index r : ranks)
      if (r < 1 || r > std::min(m, n))
        throw InvalidArgument("experiment: rank outside [1, min(m, n)]");
    if (experiment == ExperimentKind::phase_blur && (m != p || p % 2 != 0))
      throw InvalidArgument("experiment: blur mask needs m == p and p even");
  }
  if (gamma_rule == GammaRule::explicit_value && !(gamma > 0.0))
    throw InvalidArgument("experiment: explicit gamma must be positive");
  solver.validate();
}

double ExperimentConfig::resolved_gamma() const {
  switch (gamma_rule) {
    case GammaRule::inv_sqrt_m: return 1.0 / std::sqrt(double(m));
    case GammaRule::inv_sqrt_n: return 1.0 / std::sqrt(double(n));
    case GammaRule::explicit_value: return gamma;
  }
  return gamma;
}

ExperimentConfig experiment_config_from_json(const nlohmann::json& j,
                                             ExperimentConfig c) {
  auto get = [&j](const char* key, auto& field) {
    if (j.contains(key)) j.at(key).get_to(field);
  };
  if (j.contains("experiment")) c.experiment = parse_experiment_kind(j.at("experiment").get<std::string>());
  if (c.experiment == ExperimentKind::eda && !j.contains("m")) {
    c.m = 240;
    c.p = 160;
    c.n = 50;
    c.gamma_rule = GammaRule::inv_sqrt_n;
  }
  get("m", c.m);
  get("n", c.n);
  get("p", c.p);
  get("sparsity_levels", c.sparsity_levels);
  get("ranks", c.ranks);
  get("event_counts", c.event_counts);
  get("trials", c.trials);
  if (j.contains("gamma_rule")) c.gamma_rule = parse_gamma_rule(j.at("gamma_rule").get<std::string>());
  get("gamma", c.gamma);
  get("master_seed", c.master_seed);
  if (j.contains("out_dir")) c.out_dir = j.at("out_dir").get<std::string>();
  get("parallelism", c.parallelism);
  get("value_low", c.value_low);
  get("value_high", c.value_high);
  get("tonic_amplitude", c.tonic_amplitude);
  get("tonic_modulation", c.tonic_modulation);
  get("noise_sigma", c.noise_sigma);
  get("record_timing", c.record_timing);
  if (j.contains("solver")) {
    const auto& s = j.at("solver");
    auto sget = [&s](const char* key, auto& field) {
      if (s.contains(key)) s.at(key).get_to(field);
    };
    sget("rho", c.solver.rho);
    sget("step_scale", c.solver.step_scale);
    sget("max_iter", c.solver.max_iter);
    sget("tol_primal", c.solver.tol_primal);
    sget("tol_change", c.solver.tol_change);
    sget("inner_iters", c.solver.inner_iters);
    if (s.contains("method")) c.solver.method = parse_solver_method(s.at("method").get<std::string>());
  }
  return c;
}

nlohmann::json to_json(const ExperimentConfig& c) {
  nlohmann::json j{{"experiment", to_string(c.experiment)},
                   {"m", c.m},
                   {"n", c.n},
                   {"p", c.p},
                   {"trials", c.trials},
                   {"gamma_rule", to_string(c.gamma_rule)},
                   {"gamma", c.resolved_gamma()},
                   {"master_seed", c.master_seed},
                   {"out_dir", c.out_dir.string()},
                   {"parallelism", c.parallelism},
                   {"value_low", c.value_low},
                   {"value_high", c.value_high},
                   {"record_timing", c.record_timing},
                   {"solver", to_json(c.solver)}};
  if (c.experiment == ExperimentKind::eda) {
    j["event_counts"] = c.event_counts;
    j["tonic_amplitude"] = c.tonic_amplitude;
    j["tonic_modulation"] = c.tonic_modulation;
    j["noise_sigma"] = c.noise_sigma;
  } else {
    j["sparsity_levels"] = c.sparsity_levels;
    j["ranks"] = c.ranks;
  }
  return j;
}

std::uint64_t trial_seed(std::uint64_t master_seed, Index s, Index r, Index t) {
  std::uint64_t h = mix64(std::uint64_t(s));
  h = mix64(h ^ std::uint64_t(r));
  h = mix64(h ^ std::uint64_t(t));
  return master_seed ^ h;
}

const CellSummary& GridResult::cell(double fraction, Index rank) const {
  for (const auto& c : cells)
    if (c.sparsity_fraction == fraction && c.rank == rank) return c;
  throw InvalidArgument("GridResult::cell: no such cell");
}

namespace {

struct WorkItem {
  double level = 0.0;  // sparsity fraction or event count
  Index support = 0;
  Index rank = 0;
  Index trial = 0;
};

template <typename TrialFn>
std::vector<TrialRecord> run_work(const std::vector<WorkItem>& work, int threads,
                                  TrialFn&& fn) {
  std::vector<TrialRecord> out(work.size());
  const auto count = static_cast<long long>(work.size());
#pragma omp parallel for schedule(dynamic) num_threads(threads) if (threads > 1)
  for (long long k = 0; k < count; ++k) out[std::size_t(k)] = fn(work[std::size_t(k)]);
  return out;
}

TrialRecord solve_trial(const WorkItem& w, std::uint64_t seed, const Matrix& M0,
                        const Matrix& H, const Matrix& S0, const Matrix& L0,
                        const SolverConfig& solver, bool timing) {
  TrialRecord rec;
  rec.sparsity_fraction = w.level;
  rec.rank = w.rank;
  rec.trial = w.trial;
  rec.seed = seed;
  const auto start = std::chrono::steady_clock::now();
  try {
    const SolverResult res = solve(M0, H, solver);
    rec.status = to_string(res.status);
    rec.iters = res.iterations;
    if (res.status == SolverStatus::diverged) {
      rec.err_S = rec.err_L = std::numeric_limits<double>::quiet_NaN();
    } else {
      rec.err_S = relative_error(S0, res.S_hat);
      rec.err_L = relative_error(L0, res.L_hat);
    }
  } catch (const std::exception&) {
    rec.status = "error";
    rec.err_S = rec.err_L = std::numeric_limits<double>::quiet_NaN();
  }
  if (timing)
    rec.seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

void write_outputs(const ExperimentConfig& config, const GridResult& grid) {
  if (!config.write_files || config.out_dir.empty()) return;
  std::filesystem::create_directories(config.out_dir);
  const auto& dir = config.out_dir;
  if (config.experiment == ExperimentKind::eda) {
    std::ofstream curve(dir / "curve.csv");
    write_curve_csv(curve, grid.records);
    std::ofstream summary(dir / "curve_summary.csv");
    write_summary_csv(summary, grid.cells);
  } else {
    {
      std::ofstream out(dir / "grid.csv");
      write_grid_csv(out, grid.records);
      std::ofstream summary(dir / "grid_summary.csv");
      write_summary_csv(summary, grid.cells);
    }
    std::ofstream(dir / "heatmap_err_S.ppm", std::ios::binary)
        << render_heatmap(grid.records, HeatmapField::err_S);
    std::ofstream(dir / "heatmap_err_L.ppm", std::ios::binary)
        << render_heatmap(grid.records, HeatmapField::err_L);
  }
  nlohmann::json meta = grid.metadata;
  meta["wall_seconds"] = grid.wall_seconds;
  std::ofstream(dir / "run.json") << meta.dump(2) << '\n';
}

}  // namespace

GridResult run_phase_experiment(const ExperimentConfig& config) {
  config.validate();
  if (config.experiment == ExperimentKind::eda)
    throw InvalidArgument("run_phase_experiment: config describes an EDA sweep");
  const auto start = std::chrono::steady_clock::now();
  SolverConfig solver = config.solver;
  solver.gamma = config.resolved_gamma();

  std::vector<WorkItem> work;
  for (double frac : config.sparsity_levels)
    for (Index r : config.ranks)
      for (Index t = 0; t < config.trials; ++t) {
        const auto s = static_cast<Index>(std::llround(frac * double(config.p * config.n)));
        work.push_back({frac, s, r, t});
      }

  const bool blur = config.experiment == ExperimentKind::phase_blur;
  const Matrix blur_h = blur ? build_blur_mask(config.p).H : Matrix();

  GridResult grid;
  grid.records = run_work(work, config.parallelism, [&](const WorkItem& w) {
    const std::uint64_t seed = trial_seed(config.master_seed, w.support, w.rank, w.trial);
    const Matrix H = blur ? blur_h
                          : build_gaussian_mask(config.m, config.p, combine_seed(seed, 3)).H;
    const Matrix S0 = random_sparse({config.p, config.n, w.support, config.value_low,
                                     config.value_high, combine_seed(seed, 1)});
    LowRankModelSpec lr;
    lr.m = config.m;
    lr.n = config.n;
    lr.r = w.rank;
    lr.seed = combine_seed(seed, 2);
    const Matrix L0 = random_low_rank(lr).L;
    const Matrix M0 = H * S0 + L0;
    return solve_trial(w, seed, M0, H, S0, L0, solver, config.record_timing);
  });
  grid.cells = summarize(grid.records);
  grid.metadata = {{"config", to_json(config)}, {"version", "0.1.0"}};
  grid.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_outputs(config, grid);
  return grid;
}

GridResult run_eda_experiment(const ExperimentConfig& config) {
  if (config.experiment != ExperimentKind::eda)
    throw InvalidArgument("run_eda_experiment: config is not an EDA sweep");
  config.validate();
  const auto start = std::chrono::steady_clock::now();
  SolverConfig solver = config.solver;
  solver.gamma = config.resolved_gamma();

  EdaKernelParams kp;
  kp.m = config.m;
  kp.p = config.p;
  const Matrix H = build_eda_mask(kp).H;
  const Matrix T = eda_tonic(config.m, config.n, config.tonic_amplitude,
                             config.tonic_modulation);

  std::vector<WorkItem> work;
  for (Index count : config.event_counts)
    for (Index t = 0; t < config.trials; ++t)
      work.push_back({double(count), count * config.n, 0, t});

  GridResult grid;
  grid.records = run_work(work, config.parallelism, [&](const WorkItem& w) {
    const std::uint64_t seed = trial_seed(config.master_seed, w.support, 0, w.trial);
    const Matrix X = random_sparse({config.p, config.n, w.support, config.value_low,
                                    config.value_high, combine_seed(seed, 1)});
    const Matrix E = gaussian_noise(config.m, config.n, config.noise_sigma,
                                    combine_seed(seed, 2));
    const Matrix Y = T + H * X + E;
    return solve_trial(w, seed, Y, H, X, T, solver, config.record_timing);
  });
  grid.cells = summarize(grid.records);
  grid.metadata = {{"config", to_json(config)}, {"version", "0.1.0"}};
  grid.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_outputs(config, grid);
  return grid;
}

GridResult run_experiment(const ExperimentConfig& config) {
  return config.experiment == ExperimentKind::eda ? run_eda_experiment(config)
                                                  : run_phase_experiment(config);
}

namespace {

std::string fmt(double v) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

double parse_double(const std::string& field, std::size_t row) {
  if (field == "nan") return std::numeric_limits<double>::quiet_NaN();
  double v = 0.0;
  const char* b = field.data();
  const char* e = b + field.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e) throw ParseError("bad number '" + field + "'", row);
  return v;
}

template <typename Int>
Int parse_int(const std::string& field, std::size_t row) {
  Int v{};
  const char* b = field.data();
  const char* e = b + field.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e) throw ParseError("bad integer '" + field + "'", row);
  return v;
}

}  // namespace

void write_grid_csv(std::ostream& out, const std::vector<TrialRecord>& records) {
  out << "sparsity_fraction,rank,trial,seed,err_S,err_L,status,iters,seconds\n";
  for (const auto& r : records)
    out << fmt(r.sparsity_fraction) << ',' << r.rank << ',' << r.trial << ',' << r.seed
        << ',' << fmt(r.err_S) << ',' << fmt(r.err_L) << ',' << r.status << ','
        << r.iters << ',' << fmt(r.seconds) << '\n';
}

void write_curve_csv(std::ostream& out, const std::vector<TrialRecord>& records) {
  out << "event_count,trial,seed,err_X,err_T,status,iters,seconds\n";
  for (const auto& r : records)
    out << fmt(r.sparsity_fraction) << ',' << r.trial << ',' << r.seed << ','
        << fmt(r.err_S) << ',' << fmt(r.err_L) << ',' << r.status << ',' << r.iters
        << ',' << fmt(r.seconds) << '\n';
}

void write_summary_csv(std::ostream& out, const std::vector<CellSummary>& cells) {
  out << "sparsity_fraction,rank,mean_err_S,mean_err_L,trials,failures\n";
  for (const auto& c : cells)
    out << fmt(c.sparsity_fraction) << ',' << c.rank << ',' << fmt(c.mean_err_S) << ','
        << fmt(c.mean_err_L) << ',' << c.trials << ',' << c.failures << '\n';
}

std::vector<CellSummary> summarize(const std::vector<TrialRecord>& records) {
  std::map<std::pair<double, Index>, CellSummary> cells;
  for (const auto& r : records) {
    auto& c = cells[{r.sparsity_fraction, r.rank}];
    c.sparsity_fraction = r.sparsity_fraction;
    c.rank = r.rank;
    c.mean_err_S += r.err_S;
    c.mean_err_L += r.err_L;
    c.trials += 1;
    if (r.status != "converged") c.failures += 1;
  }
  std::vector<CellSummary> out;
  for (auto& [key, c] : cells) {
    c.mean_err_S /= double(c.trials);
    c.mean_err_L /= double(c.trials);
    out.push_back(c);
  }
  return out;
}

std::vector<TrialRecord> read_grid_csv(std::istream& in) {
  std::string line;
  std::size_t row = 1;
  if (!std::getline(in, line)) throw ParseError("empty grid file", row);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  std::vector<std::string> header;
  {
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) header.push_back(field);
  }
  auto col = [&](const char* name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ParseError(std::string("missing column ") + name, 1);
    return std::size_t(it - header.begin());
  };
  const std::size_t c_frac = col("sparsity_fraction"), c_rank = col("rank"),
                    c_trial = col("trial"), c_seed = col("seed"), c_s = col("err_S"),
                    c_l = col("err_L"), c_status = col("status"), c_iters = col("iters"),
                    c_sec = col("seconds");
  std::vector<TrialRecord> out;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, ',')) f.push_back(field);
    if (f.size() != header.size())
      throw ParseError("expected " + std::to_string(header.size()) + " fields", row);
    TrialRecord r;
    r.sparsity_fraction = parse_double(f[c_frac], row);
    r.rank = parse_int<Index>(f[c_rank], row);
    r.trial = parse_int<Index>(f[c_trial], row);
    r.seed = parse_int<std::uint64_t>(f[c_seed], row);
    r.err_S = parse_double(f[c_s], row);
    r.err_L = parse_double(f[c_l], row);
    r.status = f[c_status];
    r.iters = parse_int<Index>(f[c_iters], row);
    r.seconds = parse_double(f[c_sec], row);
    out.push_back(std::move(r));
  }
  return out;
}

HeatmapField parse_heatmap_field(std::string_view name) {
  if (name == "err_S") return HeatmapField::err_S;
  if (name == "err_L") return HeatmapField::err_L;
  throw InvalidArgument("unknown heatmap field: " + std::string(name));
}

std::string render_heatmap(const std::vector<TrialRecord>& records, HeatmapField field) {
  const auto cells = summarize(records);
  std::vector<double> xs;
  std::vector<Index> ys;
  for (const auto& c : cells) {
    xs.push_back(c.sparsity_fraction);
    ys.push_back(c.rank);
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  const std::size_t w = xs.size();
  const std::size_t h = ys.size();

  std::string img = "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  const std::size_t header = img.size();
  img.resize(header + 3 * w * h, '\0');
  for (const auto& c : cells) {
    const auto x = std::size_t(std::lower_bound(xs.begin(), xs.end(), c.sparsity_fraction) - xs.begin());
    const auto yi = std::size_t(std::lower_bound(ys.begin(), ys.end(), c.rank) - ys.begin());
    const std::size_t y = h - 1 - yi;
    const double v = field == HeatmapField::err_S ? c.mean_err_S : c.mean_err_L;
    unsigned char rgb[3];
    if (std::isnan(v)) {
      rgb[0] = 255, rgb[1] = 0, rgb[2] = 0;
    } else {
      const auto g = static_cast<unsigned char>(std::lround(255.0 * std::clamp(v, 0.0, 1.0)));
      rgb[0] = rgb[1] = rgb[2] = g;
    }
    const std::size_t off = header + 3 * (y * w + x);
    for (int k = 0; k < 3; ++k) img[off + std::size_t(k)] = char(rgb[k]);
  }
  return img;
}

void render_heatmap(const std::filesystem::path& grid_csv, HeatmapField field,
                    const std::filesystem::path& out_image) {
  std::ifstream in(grid_csv);
  if (!in) throw InvalidArgument("cannot open " + grid_csv.string());
  const auto records = read_grid_csv(in);
  if (records.empty()) throw ParseError("grid has no data rows", 2);
  std::ofstream out(out_image, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + out_image.string());
  out << render_heatmap(records, field);
}

}  // namespace msep
