// ssbmeh: fit, simulate and compare mass event-count models.
#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "ssb/analysis.hpp"
#include "ssb/errors.hpp"
#include "ssb/estimation.hpp"
#include "ssb/io.hpp"
#include "ssb/simulation.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kInputError = 2;
constexpr int kFitError = 3;

struct InputError : ssb::Error {
  using Error::Error;
};

struct EstimationFlags {
  double rel_tol = 1e-10;
  double abs_tol = 1e-14;
  int max_subdivisions = 64;
  int n_outer = 2;
  int max_iter = 2000;
  int refine_levels = 3;
  double shrink = 0.2;
  std::vector<double> alpha_grid{-10.0, 0.0, 21};
  std::vector<double> beta_grid{0.01, 2.0, 21};
  std::vector<double> eta_grid{0.5, 1.0, 11};
  std::vector<double> lambda_grid{0.25, 2000.0, 21};
  std::vector<double> gamma_grid{0.2, 10.0, 21};
  unsigned threads = 1;

  void add_to(CLI::App* app) {
    app->add_option("--rel-tol", rel_tol, "Quadrature relative tolerance")->capture_default_str();
    app->add_option("--abs-tol", abs_tol, "Quadrature absolute tolerance")->capture_default_str();
    app->add_option("--max-subdivisions", max_subdivisions, "Adaptive quadrature panel budget")->capture_default_str();
    app->add_option("--n-outer", n_outer, "Profile rounds after the initial grid search")->capture_default_str();
    app->add_option("--max-iter", max_iter, "Nelder-Mead iteration limit")->capture_default_str();
    app->add_option("--refine-levels", refine_levels, "Grid refinement levels")->capture_default_str();
    app->add_option("--shrink", shrink, "Grid box shrink factor per level")->capture_default_str();
    app->add_option("--alpha-grid", alpha_grid, "lo,hi,n")->delimiter(',')->expected(3)->capture_default_str();
    app->add_option("--beta-grid", beta_grid, "lo,hi,n")->delimiter(',')->expected(3)->capture_default_str();
    app->add_option("--eta-grid", eta_grid, "lo,hi,n")->delimiter(',')->expected(3)->capture_default_str();
    app->add_option("--lambda-grid", lambda_grid, "lo,hi,n (searched on the log scale)")
        ->delimiter(',')
        ->expected(3)
        ->capture_default_str();
    app->add_option("--gamma-grid", gamma_grid, "lo,hi,n (searched on the log scale)")
        ->delimiter(',')
        ->expected(3)
        ->capture_default_str();
    app->add_option("--threads", threads, "Worker threads (0 = all cores)")->capture_default_str();
  }

  ssb::EstimationConfig build() const {
    ssb::EstimationConfig cfg;
    cfg.quad.rel_tol = rel_tol;
    cfg.quad.abs_tol = abs_tol;
    cfg.quad.max_subdivisions = max_subdivisions;
    cfg.n_outer = n_outer;
    cfg.max_iter = max_iter;
    cfg.threads = threads;
    auto axis = [](const std::vector<double>& v, bool log_scale) {
      const int n = static_cast<int>(std::lround(v[2]));
      return log_scale ? ssb::GridAxis{std::log(v[0]), std::log(v[1]), n} : ssb::GridAxis{v[0], v[1], n};
    };
    auto grid = [&](std::vector<ssb::GridAxis> axes) {
      ssb::GridSpec g;
      g.axes = std::move(axes);
      g.refine_levels = refine_levels;
      g.shrink = shrink;
      g.validate();
      return g;
    };
    cfg.logistic_grid = grid({axis(alpha_grid, false), axis(beta_grid, false)});
    cfg.logistic_grid_plus = grid({axis(alpha_grid, false), axis(beta_grid, false), axis(eta_grid, false)});
    cfg.weibull_grid = grid({axis(lambda_grid, true), axis(gamma_grid, true)});
    cfg.quad.validate();
    return cfg;
  }
};

struct SimFlags {
  std::vector<double> theta{-3.0, 0.15, 4.0, 1.5};
  std::uint64_t seed = 20240601;
  int mass = 300;
  int horizon = 60;
  int replicates = 10;
  std::string schedule = "default";
  std::string sacrifice_rule = "exact";

  void add_to(CLI::App* app) {
    app->add_option("--theta", theta, "alpha,beta,lambda,gamma[,eta]")->delimiter(',')->capture_default_str();
    app->add_option("--seed", seed, "Random seed")->capture_default_str();
    app->add_option("--mass", mass, "Agents per system (M)")->capture_default_str();
    app->add_option("--horizon", horizon, "Trajectory horizon in hours")->capture_default_str();
    app->add_option("--replicates", replicates, "Systems sacrificed per time (J)")->capture_default_str();
    app->add_option("--schedule", schedule, "Preset (default, table2) or comma-separated times")->capture_default_str();
    app->add_option("--sacrifice-rule", sacrifice_rule, "exact or hour-plus-one")->capture_default_str();
  }

  ssb::SsbParams params() const {
    if (theta.size() != 4 && theta.size() != 5) {
      throw ssb::DomainError("theta", "expects alpha,beta,lambda,gamma[,eta]");
    }
    const auto p = ssb::SsbParams(theta[0], theta[1], theta[2], theta[3], theta.size() == 5 ? theta[4] : 1.0);
    if (!(p.beta() > 0)) throw ssb::DomainError("beta", "must be > 0");
    return p;
  }

  ssb::SimConfig build() const {
    ssb::SimConfig cfg;
    cfg.mass = mass;
    cfg.horizon = horizon;
    cfg.replicates = replicates;
    cfg.seed = seed;
    cfg.sacrifice_rule = ssb::parse_sacrifice_rule(sacrifice_rule);
    if (schedule == "default" || schedule == "table2") {
      cfg.schedule = ssb::schedule_preset(schedule);
    } else {
      cfg.schedule.clear();
      std::stringstream ss(schedule);
      std::string cell;
      while (std::getline(ss, cell, ',')) {
        try {
          cfg.schedule.push_back(std::stod(cell));
        } catch (const std::exception&) {
          throw ssb::DomainError("schedule", "'" + cell + "' is not a time");
        }
      }
    }
    cfg.n_trajectories = static_cast<int>(cfg.schedule.size()) * replicates;
    cfg.validate();
    return cfg;
  }
};

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write " + path.string());
  out << text;
}

template <class F>
std::string to_text(F&& write) {
  std::ostringstream out;
  write(out);
  return out.str();
}

void echo_config(const CLI::App& app, const fs::path& out) {
  write_file(out / "config.ini", app.config_to_str(true, false));
}

json theta_json(const ssb::SsbParams& p) { return ssb::params_to_json(ssb::AnyParams(p)); }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Mass event-count models: fit, simulate, compare"};
  app.set_config("--config", "", "Key-value config file; flags given on the command line win");
  app.require_subcommand(1);

  // fit
  auto* fit = app.add_subcommand("fit", "Fit one or all five models to a dataset CSV");
  std::string data_path, model_name = "ssb_plus", fit_out = ".";
  int fit_mass = 300;
  bool all_models = false, no_info = false, re_fixed_eta = false;
  EstimationFlags fit_est;
  fit->add_option("dataset", data_path, "Dataset CSV")->required();
  fit->add_option("--model", model_name, "lrm, lrm_plus, lrm_re, ssb or ssb_plus")->capture_default_str();
  fit->add_option("--mass", fit_mass, "Agents per system (M)")->capture_default_str();
  fit->add_flag("--all-models", all_models, "Fit all five models and write bic.csv");
  fit->add_flag("--no-info", no_info, "Skip the observed information and standard errors");
  fit->add_flag("--re-fixed-eta", re_fixed_eta, "Fix eta = 1 in the random-effect model");
  fit->add_option("--out", fit_out, "Output directory")->capture_default_str();
  fit_est.add_to(fit);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Simulate trajectories and a sacrificed dataset");
  SimFlags sim_flags;
  std::string sim_out = ".";
  sim_flags.add_to(sim);
  sim->add_option("--out", sim_out, "Output directory")->capture_default_str();

  // compare
  auto* cmp = app.add_subcommand("compare", "Run the SSB vs random-effect computer experiment");
  SimFlags cmp_flags;
  EstimationFlags cmp_est;
  std::string cmp_out = ".";
  std::vector<int> hours{4, 16, 30};
  cmp_flags.add_to(cmp);
  cmp_est.add_to(cmp);
  cmp->add_option("--hours", hours, "Cross-section hours")->delimiter(',')->capture_default_str();
  cmp->add_option("--out", cmp_out, "Output directory")->capture_default_str();

  // replicate
  auto* rep = app.add_subcommand("replicate", "Parameter-recovery study over simulated datasets");
  SimFlags rep_flags;
  EstimationFlags rep_est;
  int n_reps = 100;
  unsigned rep_threads = 0;
  std::string rep_out = ".";
  rep_flags.add_to(rep);
  rep_est.add_to(rep);
  rep->add_option("--n-reps", n_reps, "Number of replicates")->capture_default_str();
  rep->add_option("--rep-threads", rep_threads, "Concurrent replicates (0 = all cores)")->capture_default_str();
  rep->add_option("--out", rep_out, "Output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kInputError;
  }

  int stage = kInputError;
  try {
    if (*fit) {
      const auto cfg = [&] {
        auto c = fit_est.build();
        c.compute_info = !no_info;
        c.re_with_eta = !re_fixed_eta;
        return c;
      }();
      const auto data = ssb::read_dataset_csv(data_path, fit_mass);
      std::vector<ssb::ModelKind> models;
      if (all_models) {
        models = {ssb::ModelKind::Lrm, ssb::ModelKind::LrmPlus, ssb::ModelKind::LrmRe, ssb::ModelKind::Ssb,
                  ssb::ModelKind::SsbPlus};
      } else {
        models = {ssb::parse_model_kind(model_name)};
      }
      fs::create_directories(fit_out);
      echo_config(app, fit_out);
      stage = kFitError;
      std::vector<ssb::FitResult> fits;
      json all = json::array();
      for (auto m : models) {
        fits.push_back(ssb::fit_model(data, m, cfg));
        auto j = ssb::fit_to_json(fits.back());
        j["n_obs"] = data.n_obs();
        j["mass"] = fit_mass;
        j["dataset"] = data_path;
        all.push_back(j);
        std::cout << ssb::to_string(m) << ": loglik " << ssb::format_double(fits.back().loglik)
                  << (fits.back().converged ? "" : " (not converged)") << '\n';
      }
      if (all_models) {
        write_file(fs::path(fit_out) / "fit.json", all.dump(2) + "\n");
        const auto rows = ssb::bic_delta(fits, data.n_obs());
        write_file(fs::path(fit_out) / "bic.csv", to_text([&](std::ostream& o) { ssb::write_bic_csv(o, rows); }));
        for (const auto& r : rows) {
          std::cout << "delta BIC " << ssb::to_string(r.model) << ": " << ssb::format_double(r.delta) << '\n';
        }
      } else {
        write_file(fs::path(fit_out) / "fit.json", all.front().dump(2) + "\n");
      }
    } else if (*sim) {
      const auto theta = sim_flags.params();
      const auto cfg = sim_flags.build();
      fs::create_directories(sim_out);
      echo_config(app, sim_out);
      stage = kFitError;
      const auto ensemble = ssb::simulate_ensemble(theta, cfg);
      auto rng = ssb::Rng::substream(cfg.seed, 0, ssb::kSacrificeStream);
      const auto data = ssb::sacrifice_sample(ensemble, cfg.schedule, cfg.replicates, rng, cfg.sacrifice_rule);
      write_file(fs::path(sim_out) / "trajectories.csv",
                 to_text([&](std::ostream& o) { ssb::write_trajectories_csv(o, ensemble); }));
      write_file(fs::path(sim_out) / "dataset.csv", to_text([&](std::ostream& o) { ssb::write_dataset_csv(o, data); }));
    } else if (*cmp) {
      const auto theta = cmp_flags.params();
      const auto sim_cfg = cmp_flags.build();
      auto est = cmp_est.build();
      fs::create_directories(cmp_out);
      echo_config(app, cmp_out);
      stage = kFitError;
      const auto run = ssb::run_protocol(theta, sim_cfg, est);
      const std::vector<ssb::FitResult> fits{run.lrm_fit, run.ssb_fit, run.re_fit};
      const auto report = ssb::dynamics_report(run.ssb_ensemble, run.re_ensemble, run.dataset, fits, hours);
      json extra{{"seed", sim_cfg.seed},
                 {"theta0", theta_json(theta)},
                 {"n_params", {{"SSB", run.ssb_fit.n_params}, {"LRM_RE", run.re_fit.n_params}}},
                 {"sacrifice_rule", ssb::to_string(sim_cfg.sacrifice_rule)}};
      ssb::write_report(cmp_out, report, extra);
      write_file(fs::path(cmp_out) / "dataset.csv",
                 to_text([&](std::ostream& o) { ssb::write_dataset_csv(o, run.dataset); }));
      write_file(fs::path(cmp_out) / "trajectories_ssb.csv",
                 to_text([&](std::ostream& o) { ssb::write_trajectories_csv(o, run.ssb_ensemble); }));
      write_file(fs::path(cmp_out) / "trajectories_re.csv",
                 to_text([&](std::ostream& o) { ssb::write_trajectories_csv(o, run.re_ensemble); }));
      std::cout << "log LR (SSB vs RE): " << ssb::format_double(report.log_lr) << '\n';
    } else if (*rep) {
      const auto theta = rep_flags.params();
      const auto sim_cfg = rep_flags.build();
      const auto est = rep_est.build();
      if (n_reps < 1) throw ssb::DomainError("n_reps", "must be >= 1");
      fs::create_directories(rep_out);
      echo_config(app, rep_out);
      stage = kFitError;
      const auto study = ssb::replicate_study(theta, sim_cfg, n_reps, est, rep_threads);
      write_file(fs::path(rep_out) / "replicates.csv",
                 to_text([&](std::ostream& o) { ssb::write_replicates_csv(o, study); }));
      write_file(fs::path(rep_out) / "summary.csv",
                 to_text([&](std::ostream& o) { ssb::write_replicate_summary_csv(o, study); }));
      for (const auto& s : study.summary) {
        std::cout << s.name << ": mean " << ssb::format_double(s.mean) << ", sd " << ssb::format_double(s.sd) << '\n';
      }
      if (study.n_failed > 0) std::cout << study.n_failed << " replicate(s) failed\n";
    }
  } catch (const ssb::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kInputError;
  } catch (const ssb::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return stage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return stage;
  }
  return 0;
}
