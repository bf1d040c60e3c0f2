// msep: command-line front end for the masked separation library.
#include "msep/certificate.hpp"
#include "msep/core.hpp"
#include "msep/diagnostics.hpp"
#include "msep/harness.hpp"
#include "msep/masks.hpp"
#include "msep/models.hpp"
#include "msep/rng.hpp"
#include "msep/solver.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

namespace {

constexpr int kExitOk = 0;
constexpr int kExitTheoremFails = 1;
constexpr int kExitValidation = 2;
constexpr int kExitDiverged = 3;

std::filesystem::path default_out_dir() {
  if (const char* env = std::getenv("MSEP_OUT_DIR"); env && *env) return env;
  return "msep_out";
}

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw msep::InvalidArgument("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw msep::InvalidArgument(path + ": " + e.what());
  }
}

// "0.1" or "lo:hi:count" (inclusive, linear).
std::vector<double> parse_gamma_spec(const std::string& spec) {
  const auto c1 = spec.find(':');
  if (c1 == std::string::npos) return {std::stod(spec)};
  const auto c2 = spec.find(':', c1 + 1);
  if (c2 == std::string::npos)
    throw msep::InvalidArgument("gamma scan spec must be lo:hi:count");
  const double lo = std::stod(spec.substr(0, c1));
  const double hi = std::stod(spec.substr(c1 + 1, c2 - c1 - 1));
  const long count = std::stol(spec.substr(c2 + 1));
  if (count < 1 || !(lo > 0.0) || !(hi >= lo))
    throw msep::InvalidArgument("gamma scan needs 0 < lo <= hi and count >= 1");
  std::vector<double> out;
  for (long k = 0; k < count; ++k)
    out.push_back(count == 1 ? lo : lo + (hi - lo) * double(k) / double(count - 1));
  return out;
}

msep::Matrix effective_mask(const msep::Matrix& H, const std::string& scaling) {
  if (scaling == "none") return H;
  msep::Mask m;
  m.H = H;
  return msep::scale_columns(m, msep::parse_scaling_mode(scaling)).G;
}

struct SolveArgs {
  std::string m0, mask, method = "linearized_admm", out_prefix;
  double gamma = 0.0;
  msep::SolverConfig solver;
};

int run_solve(const SolveArgs& a) {
  const msep::Matrix M0 = msep::read_matrix_csv(std::filesystem::path(a.m0));
  const msep::Matrix H = msep::read_matrix_csv(std::filesystem::path(a.mask));
  msep::SolverConfig cfg = a.solver;
  cfg.gamma = a.gamma;
  cfg.method = msep::parse_solver_method(a.method);
  const auto start = std::chrono::steady_clock::now();
  const msep::SolverResult res = msep::solve(M0, H, cfg);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  const std::filesystem::path prefix(a.out_prefix);
  if (prefix.has_parent_path()) std::filesystem::create_directories(prefix.parent_path());
  msep::write_matrix_csv(std::filesystem::path(a.out_prefix + "S_hat.csv"), res.S_hat);
  msep::write_matrix_csv(std::filesystem::path(a.out_prefix + "L_hat.csv"), res.L_hat);
  nlohmann::json report{{"config", msep::to_json(cfg)},
                        {"result", msep::to_json(res)},
                        {"wall_seconds", secs}};
  std::ofstream(a.out_prefix + "report.json") << report.dump(2) << '\n';
  std::cout << report.dump(2) << '\n';
  return res.status == msep::SolverStatus::diverged ? kExitDiverged : kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Masked low-rank plus sparse separation"};
  app.require_subcommand(1);

  SolveArgs solve_args;
  auto* solve_cmd = app.add_subcommand("solve", "Separate M0 = L + H S");
  solve_cmd->add_option("--m0", solve_args.m0, "observation CSV")->required()->check(CLI::ExistingFile);
  solve_cmd->add_option("--mask", solve_args.mask, "mask H CSV")->required()->check(CLI::ExistingFile);
  solve_cmd->add_option("--gamma", solve_args.gamma, "sparsity weight")->required();
  solve_cmd->add_option("--method", solve_args.method,
                        "linearized_admm | admm_inner_fista | pinv_baseline");
  solve_cmd->add_option("--out-prefix", solve_args.out_prefix, "prefix for outputs")->required();
  solve_cmd->add_option("--max-iter", solve_args.solver.max_iter);
  solve_cmd->add_option("--rho", solve_args.solver.rho);
  solve_cmd->add_option("--tol-primal", solve_args.solver.tol_primal);
  solve_cmd->add_option("--tol-change", solve_args.solver.tol_change);

  std::string d_mask, d_s0, d_l0, d_scaling = "none";
  msep::DiagnoseOptions d_opts;
  auto* diag_cmd = app.add_subcommand("diagnose", "Recoverability diagnostics (exit 1 if the theorem does not apply)");
  diag_cmd->add_option("--mask", d_mask)->required()->check(CLI::ExistingFile);
  diag_cmd->add_option("--s0", d_s0)->required()->check(CLI::ExistingFile);
  diag_cmd->add_option("--l0", d_l0)->required()->check(CLI::ExistingFile);
  diag_cmd->add_option("--scaling", d_scaling, "none | spectral | column_norm");
  diag_cmd->add_option("--mu-samples", d_opts.mu.samples);
  diag_cmd->add_option("--xi-samples", d_opts.xi_samples);
  diag_cmd->add_option("--seed", d_opts.xi_seed);

  std::string c_mask, c_s0, c_l0, c_gamma, c_scaling = "none";
  double c_margin = 1e-6;
  auto* cert_cmd = app.add_subcommand("certify", "Construct and check a dual certificate");
  cert_cmd->add_option("--mask", c_mask)->required()->check(CLI::ExistingFile);
  cert_cmd->add_option("--s0", c_s0)->required()->check(CLI::ExistingFile);
  cert_cmd->add_option("--l0", c_l0)->required()->check(CLI::ExistingFile);
  cert_cmd->add_option("--gamma", c_gamma, "value or lo:hi:count")->required();
  cert_cmd->add_option("--margin", c_margin, "strict margin for conditions (b), (d)");
  cert_cmd->add_option("--scaling", c_scaling, "none | spectral | column_norm");

  struct ExpArgs {
    std::string config, out_dir;
    std::optional<msep::Index> trials;
    std::optional<std::uint64_t> seed;
    std::optional<int> parallelism;
    std::optional<std::string> mask;
    std::optional<msep::Index> max_iter;
    bool timing = false;
  };
  ExpArgs phase_args, eda_args;
  auto add_exp_options = [](CLI::App* cmd, ExpArgs& a) {
    cmd->add_option("--config", a.config, "JSON experiment config")->check(CLI::ExistingFile);
    cmd->add_option("--out-dir", a.out_dir, "output directory (default $MSEP_OUT_DIR)");
    cmd->add_option("--trials", a.trials);
    cmd->add_option("--seed", a.seed, "master seed");
    cmd->add_option("--parallelism", a.parallelism, "worker threads");
    cmd->add_option("--max-iter", a.max_iter);
    cmd->add_flag("--timing", a.timing, "record per-trial seconds in the CSV");
  };
  auto* phase_cmd = app.add_subcommand("phase", "Sparsity x rank phase grid");
  add_exp_options(phase_cmd, phase_args);
  phase_cmd->add_option("--mask", phase_args.mask, "blur | gaussian");
  auto* eda_cmd = app.add_subcommand("eda", "EDA event-count sweep");
  add_exp_options(eda_cmd, eda_args);

  auto* mask_cmd = app.add_subcommand("mask", "Mask utilities");
  mask_cmd->require_subcommand(1);
  std::string g_family, g_out;
  msep::Index g_m = 0, g_p = 0;
  std::uint64_t g_seed = 0;
  auto* gen_cmd = mask_cmd->add_subcommand("gen", "Generate a mask CSV");
  gen_cmd->add_option("--family", g_family, "identity | blur | gaussian | eda | orthogonal_columns")->required();
  gen_cmd->add_option("--p", g_p, "columns");
  gen_cmd->add_option("--m", g_m, "rows (defaults to p)");
  gen_cmd->add_option("--seed", g_seed);
  gen_cmd->add_option("--out", g_out)->required();

  struct InstanceArgs {
    std::string mask, out_dir;
    msep::Index n = 0, s = 0, r = 1;
    std::uint64_t seed = 0;
  } inst;
  auto* inst_cmd = app.add_subcommand("instance", "Instance utilities");
  inst_cmd->require_subcommand(1);
  auto* inst_gen = inst_cmd->add_subcommand("gen", "Draw S0, L0 and M0 = H S0 + L0 for a mask");
  inst_gen->add_option("--mask", inst.mask, "mask H CSV")->required()->check(CLI::ExistingFile);
  inst_gen->add_option("--n", inst.n, "columns")->required();
  inst_gen->add_option("--s", inst.s, "support size of S0")->required();
  inst_gen->add_option("--r", inst.r, "rank of L0");
  inst_gen->add_option("--seed", inst.seed);
  inst_gen->add_option("--out-dir", inst.out_dir)->required();

  std::string r_grid, r_field = "err_S", r_out;
  auto* render_cmd = app.add_subcommand("render", "Render grid.csv as a PPM heatmap");
  render_cmd->add_option("--grid", r_grid)->required()->check(CLI::ExistingFile);
  render_cmd->add_option("--field", r_field, "err_S | err_L");
  render_cmd->add_option("--out", r_out)->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*solve_cmd) return run_solve(solve_args);

    if (*diag_cmd) {
      const msep::Matrix G = effective_mask(msep::read_matrix_csv(std::filesystem::path(d_mask)), d_scaling);
      const msep::Matrix S0 = msep::read_matrix_csv(std::filesystem::path(d_s0));
      const msep::Matrix L0 = msep::read_matrix_csv(std::filesystem::path(d_l0));
      if (G.cols() != S0.rows() || G.rows() != L0.rows() || S0.cols() != L0.cols())
        throw msep::InvalidArgument("diagnose: mask, S0 and L0 shapes disagree");
      const auto report = msep::diagnose(G, msep::SupportSet::of(S0), msep::reduced_svd(L0), d_opts);
      std::cout << msep::to_json(report).dump(2) << '\n';
      return report.theorem_ok ? kExitOk : kExitTheoremFails;
    }

    if (*cert_cmd) {
      const msep::Matrix G = effective_mask(msep::read_matrix_csv(std::filesystem::path(c_mask)), c_scaling);
      const msep::Matrix S0 = msep::read_matrix_csv(std::filesystem::path(c_s0));
      const msep::Matrix L0 = msep::read_matrix_csv(std::filesystem::path(c_l0));
      const auto f = msep::reduced_svd(L0);
      const auto gammas = parse_gamma_spec(c_gamma);
      if (gammas.size() == 1) {
        const auto cert = msep::construct_certificate(G, S0, f, gammas.front());
        const auto verdict = msep::check_certificate(cert, G, S0, f, c_margin);
        std::cout << msep::to_json(cert, verdict).dump(2) << '\n';
        return kExitOk;
      }
      nlohmann::json rows = nlohmann::json::array();
      for (const auto& r : msep::certificate_gamma_scan(G, S0, f, gammas, c_margin))
        rows.push_back({{"gamma", r.gamma},
                        {"constructed", r.constructed},
                        {"ok", r.passed},
                        {"reason", r.reason},
                        {"cond_b_value", r.cond_b_value},
                        {"cond_d_value", r.cond_d_value}});
      std::cout << rows.dump(2) << '\n';
      return kExitOk;
    }

    if (*phase_cmd || *eda_cmd) {
      const bool eda = bool(*eda_cmd);
      const ExpArgs& a = eda ? eda_args : phase_args;
      msep::ExperimentConfig base;
      if (eda) {
        base.experiment = msep::ExperimentKind::eda;
      }
      nlohmann::json j = a.config.empty() ? nlohmann::json::object() : read_json(a.config);
      if (eda) j["experiment"] = "eda";
      if (a.mask) {
        if (*a.mask == "blur") j["experiment"] = "phase_blur";
        else if (*a.mask == "gaussian") j["experiment"] = "phase_gaussian";
        else throw msep::InvalidArgument("--mask must be blur or gaussian");
      }
      msep::ExperimentConfig cfg = msep::experiment_config_from_json(j, base);
      if (!eda && cfg.experiment == msep::ExperimentKind::eda)
        throw msep::InvalidArgument("phase: config names the eda experiment");
      if (a.trials) cfg.trials = *a.trials;
      if (a.seed) cfg.master_seed = *a.seed;
      if (a.parallelism) cfg.parallelism = *a.parallelism;
      if (a.max_iter) cfg.solver.max_iter = *a.max_iter;
      if (a.timing) cfg.record_timing = true;
      if (!a.out_dir.empty()) cfg.out_dir = a.out_dir;
      else if (cfg.out_dir.empty()) cfg.out_dir = default_out_dir();
      const auto grid = msep::run_experiment(cfg);
      std::cout << "wrote " << grid.records.size() << " trial rows to " << cfg.out_dir.string()
                << '\n';
      return kExitOk;
    }

    if (*gen_cmd) {
      const msep::MaskFamily fam = msep::parse_mask_family(g_family);
      if (g_m == 0) g_m = g_p;
      msep::Mask mask;
      switch (fam) {
        case msep::MaskFamily::identity: mask = msep::build_identity(g_p); break;
        case msep::MaskFamily::blur_circulant: mask = msep::build_blur_mask(g_p); break;
        case msep::MaskFamily::gaussian: mask = msep::build_gaussian_mask(g_m, g_p, g_seed); break;
        case msep::MaskFamily::eda_convolution: {
          msep::EdaKernelParams kp;
          if (g_p > 0) kp.p = g_p;
          if (g_m > 0) kp.m = g_m;
          mask = msep::build_eda_mask(kp);
          break;
        }
        case msep::MaskFamily::orthogonal_columns:
          mask = msep::build_orthogonal_columns_mask(g_m, g_p, msep::Vector::Ones(g_p), g_seed);
          break;
        case msep::MaskFamily::custom:
          throw msep::InvalidArgument("mask gen: custom masks are loaded, not generated");
      }
      msep::save_mask(mask, g_out);
      std::cout << "wrote " << mask.rows() << "x" << mask.cols() << " mask to " << g_out << '\n';
      return kExitOk;
    }

    if (*inst_gen) {
      const msep::Matrix H = msep::read_matrix_csv(std::filesystem::path(inst.mask));
      const msep::Matrix S0 = msep::random_sparse(
          {H.cols(), inst.n, inst.s, 1.0, 2.0, msep::combine_seed(inst.seed, 1)});
      msep::LowRankModelSpec lr;
      lr.m = H.rows();
      lr.n = inst.n;
      lr.r = inst.r;
      lr.seed = msep::combine_seed(inst.seed, 2);
      const msep::Matrix L0 = msep::random_low_rank(lr).L;
      msep::save_instance(inst.out_dir, S0, L0, H * S0 + L0,
                          {{"mask", inst.mask}, {"m", H.rows()}, {"p", H.cols()},
                           {"n", inst.n}, {"s", inst.s}, {"r", inst.r}, {"seed", inst.seed}});
      std::cout << "wrote S0.csv, L0.csv, M0.csv to " << inst.out_dir << '\n';
      return kExitOk;
    }

    if (*render_cmd) {
      msep::render_heatmap(r_grid, msep::parse_heatmap_field(r_field), r_out);
      return kExitOk;
    }
  } catch (const msep::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const msep::CertificateError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::out_of_range& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 4;
  }
  return kExitOk;
}
