#pragma once

#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ssb/model.hpp"
#include "ssb/optimize.hpp"
#include "ssb/quadrature.hpp"

namespace ssb {

// Logistic grid over (alpha, beta), plus eta for SSB+.
GridSpec default_logistic_grid(bool with_eta);
// Weibull grid over (log lambda, log gamma).
GridSpec default_weibull_grid();

struct EstimationConfig {
  QuadConfig quad{};
  GridSpec logistic_grid = default_logistic_grid(false);
  GridSpec logistic_grid_plus = default_logistic_grid(true);
  GridSpec weibull_grid = default_weibull_grid();
  int n_outer = 2;
  // Profile re-searches start from this refinement level of the box around the
  // incumbent instead of the full outer grid (0 = full grid).
  int profile_start_level = 1;
  int max_iter = 2000;
  bool compute_info = true;
  bool re_with_eta = true;  // phase probability in the random-effect model
  double monotone_tol = 1e-6;
  unsigned threads = 1;
};

struct WeibullInit {
  double lambda = 0.0;
  double gamma = 0.0;
  double loglik = 0.0;
  bool on_boundary = false;
};

// Current-status Weibull fit treating N = 0 as right-censored lead time and
// N > 0 as left-censored. Throws NoFiniteMle or InsufficientTimes.
WeibullInit weibull_current_status_init(const CountDataset& data, const GridSpec& grid = default_weibull_grid(),
                                        unsigned threads = 1);

struct LogisticFit {
  double alpha = 0.0;
  double beta = 0.0;
  double eta = 1.0;
  double loglik = 0.0;
  bool on_boundary = false;
  int evaluations = 0;
};

// Grid maximisation of the SSB(+) likelihood over (alpha, beta[, eta]) at a
// fixed lead-time law. The grid has two axes for SSB and three for SSB+.
LogisticFit grid_search_logistic(const CountDataset& data, double lambda, double gamma, ModelKind model,
                                 const GridSpec& grid, const QuadConfig& quad = {}, unsigned threads = 1);

// Alternating profile maximisation started at a lead-time law. Each half-step
// is logged in the trace; a decrease beyond cfg.monotone_tol throws
// NonMonotoneProfile.
FitResult profile_iterate(const CountDataset& data, std::pair<double, double> init, ModelKind model,
                          const EstimationConfig& cfg = {});

FitResult fit_model(const CountDataset& data, ModelKind model, const EstimationConfig& cfg = {});

// Log-likelihood of `model` at natural parameters ordered like fit names.
double model_loglik(const CountDataset& data, ModelKind model, std::span<const double> theta,
                    const QuadConfig& quad = {}, bool re_with_eta = true);
std::vector<std::string> param_names(ModelKind model, bool re_with_eta = true);

// Negative Hessian of f at theta by central differences. Default steps are
// cbrt(eps) * (1 + |theta_j|).
Eigen::MatrixXd observed_information(const Objective& loglik, const std::vector<double>& theta,
                                     std::optional<std::vector<double>> steps = std::nullopt);

// sqrt(diag(info^-1)); throws SingularInformation unless info is positive definite.
std::vector<double> standard_errors(const Eigen::MatrixXd& info);

struct BicRow {
  ModelKind model;
  double loglik;
  int n_params;
  double delta;
};

// -2 (l_model - l_LRM) + (p - p_LRM) log n_obs for every fit; the LRM row is 0.
std::vector<BicRow> bic_delta(std::span<const FitResult> fits, std::size_t n_obs);

}  // namespace ssb
