#pragma once

#include <functional>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace ssb {

struct QuadConfig {
  double rel_tol = 1e-10;
  double abs_tol = 1e-14;
  int max_subdivisions = 64;  // bisections allowed beyond the initial panels
  int gh_nodes = 32;          // Gauss-Hermite nodes per axis

  void validate() const;  // throws DomainError
};

struct QuadResult {
  double value = 0.0;
  double error = 0.0;
  bool converged = true;  // false: subdivision budget exhausted before tolerance
};

// Result of an integral computed in log space. rel_error is relative to exp(log_value).
struct LogQuadResult {
  double log_value = 0.0;
  double rel_error = 0.0;
  bool converged = true;
};

// Adaptive Gauss-Kronrod (7/15) over [a, b] starting from the given interior
// breakpoints. Exposed for reuse and testing.
QuadResult integrate_adaptive(const std::function<double(double)>& f, std::span<const double> breakpoints,
                              const QuadConfig& cfg);

// Weibull(lambda, gamma) density f_U on [0, t].
//
// Integrates over v = (u/lambda)^gamma, i.e. int_0^{(t/lambda)^gamma} g(lambda v^{1/gamma}) e^{-v} dv,
// which has no endpoint singularity for gamma < 1. t may be +infinity.
QuadResult integrate_weibull(const std::function<double(double)>& g, double lambda, double gamma, double t,
                             const QuadConfig& cfg = {});

// Where the integrand of integrate_weibull_log concentrates (in u units).
struct PeakHint {
  double center = 0.0;
  double width = 0.0;  // <= 0 means no hint
};

// log of int_0^t exp(log_g(u)) f_U(u) du for log_g <= 0. The integrand is
// rescaled by its sampled maximum so that tiny probabilities keep full
// relative accuracy.
LogQuadResult integrate_weibull_log(const std::function<double(double)>& log_g, double lambda, double gamma,
                                    double t, const QuadConfig& cfg = {}, PeakHint hint = {});

// Nodes and weights for int e^{-x^2} f(x) dx. Cached per order; thread safe.
struct GaussHermiteRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const GaussHermiteRule& gauss_hermite_rule(int n);

// E[f(a, b)] for (a, b) ~ N(mean, cov) by tensor Gauss-Hermite after a
// Cholesky change of variables. Throws DomainError if cov is not SPD.
double integrate_gh2(const std::function<double(double, double)>& f, const Eigen::Vector2d& mean,
                     const Eigen::Matrix2d& cov, const QuadConfig& cfg = {});

// Same expectation, computed in log space with nodes placed on a Gaussian
// `proposal` (adaptive Gauss-Hermite): E[f] = E_q[f p / q]. Returns log E[f].
double integrate_gh2_log(const std::function<double(double, double)>& log_f, const Eigen::Vector2d& mean,
                         const Eigen::Matrix2d& cov, const Eigen::Vector2d& proposal_mean,
                         const Eigen::Matrix2d& proposal_cov, const QuadConfig& cfg = {});

// log E[exp(log_f(x))] for x ~ N(mean, sd^2) and log_f <= 0, by adaptive
// Gauss-Kronrod on the standardised variable with breakpoints around `hint`.
LogQuadResult integrate_normal_log(const std::function<double(double)>& log_f, double mean, double sd,
                                   const QuadConfig& cfg = {}, PeakHint hint = {});

}  // namespace ssb
