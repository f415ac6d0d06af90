#include "ssb/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ssb/errors.hpp"
#include "ssb/likelihood.hpp"

namespace ssb {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();
constexpr double kEtaBoundary = 1.0 - 1e-6;

double logit(double p) { return std::log(p / (1.0 - p)); }
double inv_logit(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

bool is_ssb(ModelKind m) { return m == ModelKind::Ssb || m == ModelKind::SsbPlus; }

void require_times(const CountDataset& data) {
  if (data.n_observed_times() < 2) {
    throw InsufficientTimes("the lead-time law needs counts at two or more distinct times");
  }
}

// A box of width shrink^level around `center`, kept inside the outer grid,
// with the remaining refinement levels.
GridSpec local_spec(const GridSpec& outer, const std::vector<double>& center, int level) {
  GridSpec local = outer;
  level = std::min(level, outer.refine_levels);
  local.refine_levels = outer.refine_levels - level;
  const double scale = std::pow(outer.shrink, level);
  for (std::size_t d = 0; d < local.axes.size(); ++d) {
    const auto& o = outer.axes[d];
    if (o.fixed()) continue;
    const double width = (o.hi - o.lo) * scale;
    double lo = center[d] - 0.5 * width, hi = center[d] + 0.5 * width;
    if (lo < o.lo) {
      hi += o.lo - lo;
      lo = o.lo;
    }
    if (hi > o.hi) {
      lo -= hi - o.hi;
      hi = o.hi;
    }
    local.axes[d].lo = std::max(lo, o.lo);
    local.axes[d].hi = hi;
  }
  return local;
}

bool on_edge(const GridSpec& spec, const std::vector<double>& x, std::size_t d) {
  const auto& a = spec.axes[d];
  return !a.fixed() && (x[d] <= a.lo || x[d] >= a.hi);
}

// Local re-search that walks the box while the optimum sits on an inner edge.
GridResult local_search(const Objective& f, const GridSpec& outer, std::vector<double> center, double value,
                        int level, unsigned threads) {
  GridResult best{center, value, false, 0};
  if (level <= 0) return grid_maximize(f, outer, std::make_pair(center, value), threads);
  for (int walk = 0; walk < 10; ++walk) {
    const auto spec = local_spec(outer, best.x, level);
    const int evaluations = best.evaluations;
    best = grid_maximize(f, spec, std::make_pair(best.x, best.value), threads);
    best.evaluations += evaluations;
    bool inner_edge = false;
    for (std::size_t d = 0; d < spec.axes.size(); ++d) {
      if (on_edge(spec, best.x, d) && !on_edge(outer, best.x, d)) inner_edge = true;
    }
    if (!inner_edge) break;
  }
  best.on_boundary = false;
  for (std::size_t d = 0; d < outer.axes.size(); ++d) best.on_boundary = best.on_boundary || on_edge(outer, best.x, d);
  return best;
}

double safe(const std::function<double()>& f) {
  try {
    const double v = f();
    return std::isnan(v) ? kNegInf : v;
  } catch (const DomainError&) {
    return kNegInf;
  }
}

Objective logistic_objective(const CountDataset& data, double lambda, double gamma, const QuadConfig& quad) {
  return [&data, lambda, gamma, quad](const std::vector<double>& x) {
    return safe([&] {
      const double eta = x.size() > 2 ? x[2] : 1.0;
      return ssb_dataset_loglik(SsbParams(x[0], x[1], lambda, gamma, eta), data, quad);
    });
  };
}

Objective weibull_objective(const CountDataset& data, double alpha, double beta, double eta, const QuadConfig& quad) {
  return [&data, alpha, beta, eta, quad](const std::vector<double>& x) {
    return safe([&] {
      return ssb_dataset_loglik(SsbParams(alpha, beta, std::exp(x[0]), std::exp(x[1]), eta), data, quad);
    });
  };
}

// Logistic-grid flags: eta reaching 1 is a legitimate boundary estimate.
bool logistic_on_boundary(const GridSpec& spec, const std::vector<double>& x) {
  for (std::size_t d = 0; d < x.size(); ++d) {
    if (d == 2 && x[d] >= spec.axes[d].hi && spec.axes[d].hi >= 1.0) continue;
    if (on_edge(spec, x, d)) return true;
  }
  return false;
}

// Central-difference steps of size eps^(1/4) (1 + |theta|), pulled in so
// that theta +/- 2h stays inside the parameter domain.
std::vector<double> info_steps(ModelKind model, const std::vector<std::string>& names, const std::vector<double>& theta) {
  std::vector<double> h(theta.size());
  const double base = std::pow(std::numeric_limits<double>::epsilon(), 0.25);
  for (std::size_t j = 0; j < theta.size(); ++j) {
    h[j] = base * (1.0 + std::abs(theta[j]));
    const auto& n = names[j];
    double room = std::numeric_limits<double>::infinity();
    if (n == "eta") room = std::min(theta[j], 1.0 - theta[j]);
    else if (n == "rho") room = 1.0 - std::abs(theta[j]);
    else if (n != "alpha" && n != "mu1" && n != "mu2" && !(n == "beta" && !is_ssb(model))) room = theta[j];
    h[j] = std::min(h[j], 0.4 * room);
  }
  return h;
}

void attach_information(FitResult& fit, const CountDataset& data, const EstimationConfig& cfg) {
  std::vector<std::size_t> free;
  for (std::size_t j = 0; j < fit.names.size(); ++j) {
    if (!fit.at_boundary[j]) free.push_back(j);
  }
  std::vector<double> theta_free;
  std::vector<std::string> free_names;
  for (auto j : free) {
    theta_free.push_back(fit.estimates[j]);
    free_names.push_back(fit.names[j]);
  }
  const auto full = fit.estimates;
  const ModelKind model = fit.model;
  Objective f = [&](const std::vector<double>& x) {
    auto theta = full;
    for (std::size_t i = 0; i < free.size(); ++i) theta[free[i]] = x[i];
    return model_loglik(data, model, theta, cfg.quad, cfg.re_with_eta);
  };
  const auto info_free = observed_information(f, theta_free, info_steps(model, free_names, theta_free));
  const auto n = static_cast<Eigen::Index>(full.size());
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(n, n);
  for (std::size_t a = 0; a < free.size(); ++a) {
    for (std::size_t b = 0; b < free.size(); ++b) {
      info(static_cast<Eigen::Index>(free[a]), static_cast<Eigen::Index>(free[b])) =
          info_free(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(b));
    }
  }
  fit.info = info;
  try {
    const auto se_free = standard_errors(info_free);
    std::vector<double> se(full.size(), std::numeric_limits<double>::quiet_NaN());
    for (std::size_t i = 0; i < free.size(); ++i) se[free[i]] = se_free[i];
    fit.std_errors = se;
  } catch (const SingularInformation&) {
    fit.std_errors.reset();
  }
}

FitResult make_fit(ModelKind model, bool re_with_eta, std::vector<double> estimates, double loglik) {
  FitResult fit;
  fit.model = model;
  fit.names = param_names(model, re_with_eta);
  fit.estimates = std::move(estimates);
  fit.loglik = loglik;
  fit.n_params = n_params(model, re_with_eta);
  fit.at_boundary.assign(fit.names.size(), false);
  for (std::size_t j = 0; j < fit.names.size(); ++j) {
    if (fit.names[j] == "eta" && fit.estimates[j] >= kEtaBoundary) {
      fit.estimates[j] = 1.0;
      fit.at_boundary[j] = true;
    }
  }
  return fit;
}

struct DirectFit {
  std::vector<double> x;  // working parameterisation
  double loglik = kNegInf;
  int iterations = 0;
  bool converged = false;
};

// Nelder-Mead from x0 followed by one restart at the optimum, maximising f.
DirectFit maximize_direct(const Objective& loglik, const std::vector<double>& x0, const std::vector<double>& steps,
                          int max_iter) {
  Objective neg = [&](const std::vector<double>& x) { return -loglik(x); };
  NelderMeadOptions opts;
  opts.max_iter = max_iter;
  const auto first = nelder_mead(neg, x0, steps, opts);
  std::vector<double> small(steps.size());
  for (std::size_t i = 0; i < steps.size(); ++i) small[i] = 0.1 * steps[i];
  const auto second = nelder_mead(neg, first.x, small, opts);
  const auto& best = second.value <= first.value ? second : first;
  return {best.x, -best.value, first.iterations + second.iterations, second.converged};
}

FitResult fit_lrm(const CountDataset& data, bool plus, const EstimationConfig& cfg) {
  // Working coordinates: (alpha, log beta[, logit eta]).
  Objective f = [&data, plus](const std::vector<double>& w) {
    const double eta = plus ? inv_logit(w[2]) : 1.0;
    return safe([&] { return lrm_loglik(w[0], std::exp(w[1]), eta, data); });
  };
  GridSpec coarse;
  coarse.refine_levels = 0;
  coarse.axes = {{-10.0, 2.0, 13}, {std::log(1e-3), std::log(2.0), 12}};
  if (plus) coarse.axes.push_back({-1.0, 5.0, 7});
  const auto start = grid_maximize(f, coarse, std::nullopt, cfg.threads);
  std::vector<double> steps{0.5, 0.3};
  if (plus) steps.push_back(0.5);
  auto direct = maximize_direct(f, start.x, steps, cfg.max_iter);

  std::vector<double> theta{direct.x[0], std::exp(direct.x[1])};
  if (plus) theta.push_back(inv_logit(direct.x[2]));
  double ll = direct.loglik;
  if (plus) {
    // The nested LRM optimum is a valid LRM+ point with eta = 1.
    const auto nested = fit_lrm(data, false, cfg);
    if (nested.loglik >= ll) {
      theta = {nested.estimates[0], nested.estimates[1], 1.0};
      ll = nested.loglik;
    }
  }
  auto fit = make_fit(plus ? ModelKind::LrmPlus : ModelKind::Lrm, false, theta, ll);
  fit.converged = direct.converged;
  fit.iterations = direct.iterations;
  fit.trace.push_back({"grid", start.value});
  fit.trace.push_back({"nelder-mead", ll});
  return fit;
}

FitResult fit_re(const CountDataset& data, const EstimationConfig& cfg) {
  const bool with_eta = cfg.re_with_eta;
  const auto base = fit_lrm(data, with_eta, cfg);
  const double a0 = base.estimates[0], b0 = base.estimates[1];
  const double eta0 = with_eta ? std::min(base.estimates[2], 0.99) : 1.0;

  // Working coordinates: (mu1, mu2, atanh rho, log sigma1, log sigma2[, logit eta]).
  const QuadConfig quad = cfg.quad;
  Objective f = [&data, with_eta, quad](const std::vector<double>& w) {
    const double eta = with_eta ? inv_logit(w[5]) : 1.0;
    return safe([&] {
      return re_loglik(ReParams(w[0], w[1], std::tanh(w[2]), std::exp(w[3]), std::exp(w[4]), eta), data, quad);
    });
  };
  std::vector<std::vector<double>> starts;
  for (double s1 : {0.3, 1.0}) {
    for (double s2 : {0.1, 0.5}) {
      std::vector<double> w{a0, b0, 0.0, std::log(s1), std::log(s2 * std::abs(b0) + 1e-3)};
      if (with_eta) w.push_back(logit(eta0));
      starts.push_back(std::move(w));
    }
  }
  std::vector<double> steps{0.5, 0.05 + 0.2 * std::abs(b0), 0.3, 0.5, 0.5};
  if (with_eta) steps.push_back(0.5);

  DirectFit best;
  int iterations = 0;
  for (const auto& s : starts) {
    auto d = maximize_direct(f, s, steps, cfg.max_iter);
    iterations += d.iterations;
    if (d.loglik > best.loglik) best = std::move(d);
  }
  std::vector<double> theta{best.x[0], best.x[1], std::tanh(best.x[2]), std::exp(best.x[3]), std::exp(best.x[4])};
  if (with_eta) theta.push_back(inv_logit(best.x[5]));
  auto fit = make_fit(ModelKind::LrmRe, with_eta, theta, best.loglik);
  fit.converged = best.converged;
  fit.iterations = iterations;
  fit.trace.push_back({"nelder-mead", best.loglik});
  return fit;
}

}  // namespace

GridSpec default_logistic_grid(bool with_eta) {
  GridSpec g;
  g.axes = {{-10.0, 0.0, 21}, {0.01, 2.0, 21}};
  if (with_eta) g.axes.push_back({0.5, 1.0, 11});
  return g;
}

GridSpec default_weibull_grid() {
  GridSpec g;
  g.axes = {{std::log(0.25), std::log(2000.0), 21}, {std::log(0.2), std::log(10.0), 21}};
  return g;
}

std::vector<std::string> param_names(ModelKind model, bool re_with_eta) {
  switch (model) {
    case ModelKind::Lrm: return {"alpha", "beta"};
    case ModelKind::LrmPlus: return {"alpha", "beta", "eta"};
    case ModelKind::LrmRe:
      if (re_with_eta) return {"mu1", "mu2", "rho", "sigma1", "sigma2", "eta"};
      return {"mu1", "mu2", "rho", "sigma1", "sigma2"};
    case ModelKind::Ssb: return {"alpha", "beta", "lambda", "gamma"};
    case ModelKind::SsbPlus: return {"alpha", "beta", "lambda", "gamma", "eta"};
  }
  return {};
}

double model_loglik(const CountDataset& data, ModelKind model, std::span<const double> t, const QuadConfig& quad,
                    bool re_with_eta) {
  if (t.size() != param_names(model, re_with_eta).size()) throw SizeMismatch("wrong number of parameters");
  switch (model) {
    case ModelKind::Lrm: return lrm_loglik(t[0], t[1], 1.0, data);
    case ModelKind::LrmPlus: return lrm_loglik(t[0], t[1], t[2], data);
    case ModelKind::LrmRe:
      return re_loglik(ReParams(t[0], t[1], t[2], t[3], t[4], re_with_eta ? t[5] : 1.0), data, quad);
    case ModelKind::Ssb: return ssb_dataset_loglik(SsbParams(t[0], t[1], t[2], t[3]), data, quad);
    case ModelKind::SsbPlus: return ssb_dataset_loglik(SsbParams(t[0], t[1], t[2], t[3], t[4]), data, quad);
  }
  return kNegInf;
}

WeibullInit weibull_current_status_init(const CountDataset& data, const GridSpec& grid, unsigned threads) {
  grid.validate();
  if (grid.axes.size() != 2) throw DomainError("grid", "the Weibull grid has two axes (log lambda, log gamma)");
  if (!grid.axes[1].fixed()) require_times(data);
  std::size_t zeros = 0, positives = 0;
  for (std::size_t i = 0; i < data.n_times(); ++i) {
    for (int k : data.counts_at(i)) (k == 0 ? zeros : positives)++;
  }
  if (positives == 0) throw NoFiniteMle("every count is zero; the lead-time scale is unbounded");
  if (zeros == 0) throw NoFiniteMle("every count is positive; the lead-time scale collapses to zero");

  Objective f = [&data](const std::vector<double>& x) {
    const double lambda = std::exp(x[0]), gamma = std::exp(x[1]);
    double total = 0.0;
    const auto schedule = data.schedule();
    for (std::size_t i = 0; i < schedule.size(); ++i) {
      const double v = std::pow(schedule[i] / lambda, gamma);
      for (int k : data.counts_at(i)) total += k == 0 ? -v : std::log(-std::expm1(-v));
    }
    return total;
  };
  const auto best = grid_maximize(f, grid, std::nullopt, threads);
  return {std::exp(best.x[0]), std::exp(best.x[1]), best.value, best.on_boundary};
}

LogisticFit grid_search_logistic(const CountDataset& data, double lambda, double gamma, ModelKind model,
                                 const GridSpec& grid, const QuadConfig& quad, unsigned threads) {
  if (!is_ssb(model)) throw DomainError("model", "the logistic grid search applies to SSB and SSB+");
  const std::size_t dims = model == ModelKind::SsbPlus ? 3 : 2;
  if (grid.axes.size() != dims) throw DomainError("grid", "axis count does not match the model");
  const auto best = grid_maximize(logistic_objective(data, lambda, gamma, quad), grid, std::nullopt, threads);
  return {best.x[0], best.x[1], dims == 3 ? best.x[2] : 1.0, best.value, logistic_on_boundary(grid, best.x),
          best.evaluations};
}

FitResult profile_iterate(const CountDataset& data, std::pair<double, double> init, ModelKind model,
                          const EstimationConfig& cfg) {
  if (!is_ssb(model)) throw DomainError("model", "profiling applies to SSB and SSB+");
  if (cfg.n_outer < 0) throw DomainError("n_outer", "must be >= 0");
  const bool plus = model == ModelKind::SsbPlus;
  const GridSpec& lgrid = plus ? cfg.logistic_grid_plus : cfg.logistic_grid;
  double lambda = init.first, gamma = init.second;

  const auto start = grid_search_logistic(data, lambda, gamma, model, lgrid, cfg.quad, cfg.threads);
  std::vector<double> logistic{start.alpha, start.beta};
  if (plus) logistic.push_back(start.eta);
  double ll = start.loglik;
  int evaluations = start.evaluations;
  bool logistic_boundary = start.on_boundary, weibull_boundary = false;

  FitResult fit;
  fit.trace.push_back({"logistic[0]", ll});
  auto record = [&](std::string step, double value) {
    if (value < ll - cfg.monotone_tol) {
      throw NonMonotoneProfile(step + ": log-likelihood fell from " + std::to_string(ll) + " to " +
                               std::to_string(value));
    }
    ll = value;
    fit.trace.push_back({std::move(step), value});
  };

  for (int round = 1; round <= cfg.n_outer; ++round) {
    const double eta = plus ? logistic[2] : 1.0;
    const auto w = local_search(weibull_objective(data, logistic[0], logistic[1], eta, cfg.quad), cfg.weibull_grid,
                                {std::log(lambda), std::log(gamma)}, ll, cfg.profile_start_level, cfg.threads);
    lambda = std::exp(w.x[0]);
    gamma = std::exp(w.x[1]);
    weibull_boundary = w.on_boundary;
    evaluations += w.evaluations;
    record("weibull[" + std::to_string(round) + "]", w.value);

    const auto l = local_search(logistic_objective(data, lambda, gamma, cfg.quad), lgrid, logistic, ll,
                                cfg.profile_start_level, cfg.threads);
    logistic = l.x;
    logistic_boundary = logistic_on_boundary(lgrid, l.x);
    evaluations += l.evaluations;
    record("logistic[" + std::to_string(round) + "]", l.value);
  }

  std::vector<double> theta{logistic[0], logistic[1], lambda, gamma};
  if (plus) theta.push_back(logistic[2]);
  const auto check = ssb_dataset_loglik_detail(
      SsbParams(theta[0], theta[1], theta[2], theta[3], plus ? theta[4] : 1.0), data, cfg.quad);
  auto trace = std::move(fit.trace);
  fit = make_fit(model, false, theta, ll);
  fit.trace = std::move(trace);
  fit.iterations = evaluations;
  fit.converged = !logistic_boundary && !weibull_boundary && check.converged;
  return fit;
}

FitResult fit_model(const CountDataset& data, ModelKind model, const EstimationConfig& cfg) {
  FitResult fit;
  switch (model) {
    case ModelKind::Lrm: fit = fit_lrm(data, false, cfg); break;
    case ModelKind::LrmPlus: fit = fit_lrm(data, true, cfg); break;
    case ModelKind::LrmRe: fit = fit_re(data, cfg); break;
    case ModelKind::Ssb:
    case ModelKind::SsbPlus: {
      require_times(data);
      const auto init = weibull_current_status_init(data, cfg.weibull_grid, cfg.threads);
      fit = profile_iterate(data, {init.lambda, init.gamma}, ModelKind::Ssb, cfg);
      fit.trace.insert(fit.trace.begin(), {"current-status", init.loglik});
      if (model == ModelKind::SsbPlus) {
        // Warm start from the nested fit so the SSB+ optimum never falls below it.
        auto plus = profile_iterate(data, {fit.estimates[2], fit.estimates[3]}, ModelKind::SsbPlus, cfg);
        if (plus.loglik < fit.loglik) {
          auto nested = make_fit(ModelKind::SsbPlus, false,
                                 {fit.estimates[0], fit.estimates[1], fit.estimates[2], fit.estimates[3], 1.0},
                                 fit.loglik);
          nested.converged = fit.converged;
          nested.iterations = fit.iterations + plus.iterations;
          nested.trace = plus.trace;
          nested.trace.push_back({"nested", fit.loglik});
          plus = std::move(nested);
        }
        fit = std::move(plus);
      }
      break;
    }
  }
  if (cfg.compute_info) attach_information(fit, data, cfg);
  return fit;
}

Eigen::MatrixXd observed_information(const Objective& loglik, const std::vector<double>& theta,
                                     std::optional<std::vector<double>> steps) {
  const std::size_t n = theta.size();
  std::vector<double> h(n);
  if (steps) {
    if (steps->size() != n) throw SizeMismatch("one step per parameter is required");
    h = *steps;
  } else {
    const double base = std::cbrt(std::numeric_limits<double>::epsilon());
    for (std::size_t j = 0; j < n; ++j) h[j] = base * (1.0 + std::abs(theta[j]));
  }
  auto at = [&](std::size_t i, double di, std::size_t j, double dj) {
    auto x = theta;
    x[i] += di;
    x[j] += dj;
    return loglik(x);
  };
  const double f0 = loglik(theta);
  Eigen::MatrixXd hess(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto ii = static_cast<Eigen::Index>(i);
    hess(ii, ii) = (at(i, h[i], i, 0.0) - 2.0 * f0 + at(i, -h[i], i, 0.0)) / (h[i] * h[i]);
    for (std::size_t j = 0; j < i; ++j) {
      const auto jj = static_cast<Eigen::Index>(j);
      const double v = (at(i, h[i], j, h[j]) - at(i, h[i], j, -h[j]) - at(i, -h[i], j, h[j]) +
                        at(i, -h[i], j, -h[j])) /
                       (4.0 * h[i] * h[j]);
      hess(ii, jj) = v;
      hess(jj, ii) = v;
    }
  }
  Eigen::MatrixXd info = -0.5 * (hess + hess.transpose());
  return info;
}

std::vector<double> standard_errors(const Eigen::MatrixXd& info) {
  if (info.rows() != info.cols()) throw SizeMismatch("information matrix must be square");
  if (!info.allFinite()) throw SingularInformation("information matrix has non-finite entries");
  Eigen::LLT<Eigen::MatrixXd> llt(info);
  if (llt.info() != Eigen::Success) throw SingularInformation("information matrix is not positive definite");
  const Eigen::MatrixXd cov = llt.solve(Eigen::MatrixXd::Identity(info.rows(), info.cols()));
  std::vector<double> se(static_cast<std::size_t>(info.rows()));
  for (Eigen::Index i = 0; i < info.rows(); ++i) {
    if (!(cov(i, i) > 0)) throw SingularInformation("non-positive variance");
    se[static_cast<std::size_t>(i)] = std::sqrt(cov(i, i));
  }
  return se;
}

std::vector<BicRow> bic_delta(std::span<const FitResult> fits, std::size_t n_obs) {
  const auto base = std::find_if(fits.begin(), fits.end(), [](const FitResult& f) { return f.model == ModelKind::Lrm; });
  if (base == fits.end()) throw MissingBaseline("the LRM fit is the baseline of the comparison");
  if (n_obs == 0) throw DomainError("n_obs", "must be >= 1");
  const double log_n = std::log(static_cast<double>(n_obs));
  std::vector<BicRow> rows;
  for (const auto& f : fits) {
    const double delta =
        f.model == ModelKind::Lrm ? 0.0 : -2.0 * (f.loglik - base->loglik) + (f.n_params - base->n_params) * log_n;
    rows.push_back({f.model, f.loglik, f.n_params, delta});
  }
  return rows;
}

}  // namespace ssb
