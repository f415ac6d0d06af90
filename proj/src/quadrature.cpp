#include "ssb/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <numbers>

#include "ssb/errors.hpp"

namespace ssb {

namespace {

// QUADPACK qk15 abscissae and weights.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
                                       0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

constexpr double kEps = std::numeric_limits<double>::epsilon();

struct Panel {
  double a, b, value, error;
};

Panel gauss_kronrod15(const std::function<double(double)>& f, double a, double b) {
  const double center = 0.5 * (a + b);
  const double half = 0.5 * (b - a);
  std::array<double, 15> fv{};
  fv[7] = f(center);
  for (int j = 0; j < 7; ++j) {
    const double dx = half * kXgk[j];
    fv[j] = f(center - dx);
    fv[14 - j] = f(center + dx);
  }
  double kronrod = kWgk[7] * fv[7];
  double gauss = kWg[3] * fv[7];
  double abs_sum = std::abs(kronrod);
  for (int j = 0; j < 7; ++j) {
    const double pair = fv[j] + fv[14 - j];
    kronrod += kWgk[j] * pair;
    abs_sum += kWgk[j] * (std::abs(fv[j]) + std::abs(fv[14 - j]));
    if (j % 2 == 1) gauss += kWg[j / 2] * pair;
  }
  const double mean = 0.5 * kronrod;
  double asc = kWgk[7] * std::abs(fv[7] - mean);
  for (int j = 0; j < 7; ++j) asc += kWgk[j] * (std::abs(fv[j] - mean) + std::abs(fv[14 - j] - mean));

  double err = std::abs((kronrod - gauss) * half);
  const double resasc = asc * std::abs(half);
  const double resabs = abs_sum * std::abs(half);
  if (resasc != 0.0 && err != 0.0) err = resasc * std::min(1.0, std::pow(200.0 * err / resasc, 1.5));
  if (resabs > std::numeric_limits<double>::min() / (50 * kEps)) err = std::max(50 * kEps * resabs, err);
  return {a, b, kronrod * half, err};
}

double weibull_v_max(double lambda, double gamma, double t) {
  if (std::isinf(t)) return std::numeric_limits<double>::infinity();
  return std::pow(t / lambda, gamma);
}

void check_weibull_args(double lambda, double gamma, double t) {
  if (!(lambda > 0) || !std::isfinite(lambda)) throw DomainError("lambda", "must be > 0");
  if (!(gamma > 0) || !std::isfinite(gamma)) throw DomainError("gamma", "must be > 0");
  if (!(t >= 0) || std::isnan(t)) throw DomainError("t", "must be >= 0");
}

// Panel edges on [0, v_end]: 0, the given interior points, powers of two for
// the e^{-v} tail, and v_end.
std::vector<double> v_breakpoints(double v_end, std::span<const double> interior) {
  std::vector<double> pts = {0.0, v_end};
  for (double v = 1.0; v < v_end; v *= 4.0) pts.push_back(v);
  for (double v : interior) {
    if (v > 0 && v < v_end) pts.push_back(v);
  }
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end(),
                        [v_end](double x, double y) { return std::abs(x - y) <= 1e-12 * std::max(1.0, v_end); }),
            pts.end());
  return pts;
}

// The Weibull integrals are taken over v = (u/lambda)^gamma, which absorbs
// the density into e^{-v} dv. v is further written as w^q with q = p gamma,
// p the smallest integer making q >= 2: then u = lambda w^p is polynomial in
// w and the Jacobian q w^{q-1} vanishes at 0, so no endpoint kink remains for
// either gamma < 1 or gamma > 1.
class WeibullMap {
 public:
  WeibullMap(double lambda, double gamma)
      : lambda_(lambda), p_(std::max(1.0, std::ceil(2.0 / gamma))), q_(p_ * gamma), p_int_(static_cast<int>(p_)) {}

  double u_of_w(double w) const {
    double wp = w;
    for (int i = 1; i < p_int_; ++i) wp *= w;
    return lambda_ * wp;
  }
  double w_of_v(double v) const { return std::pow(v, 1.0 / q_); }
  // dv/dw * e^{-v}
  double jacobian(double w) const { return std::exp(log_jacobian(w)); }
  double log_jacobian(double w) const {
    if (w <= 0) return -std::numeric_limits<double>::infinity();
    const double log_w = std::log(w);
    return std::log(q_) + (q_ - 1.0) * log_w - std::exp(q_ * log_w);
  }

 private:
  double lambda_, p_, q_;
  int p_int_;
};

Eigen::Matrix2d checked_cholesky(const Eigen::Matrix2d& cov, const char* field) {
  const double c11 = cov(0, 0), c22 = cov(1, 1), c12 = cov(0, 1);
  if (!std::isfinite(c11) || !std::isfinite(c22) || !std::isfinite(c12) || c12 != cov(1, 0) || !(c11 > 0) ||
      !(c11 * c22 - c12 * c12 > 0)) {
    throw DomainError(field, "covariance is not symmetric positive definite");
  }
  Eigen::Matrix2d chol = Eigen::Matrix2d::Zero();
  chol(0, 0) = std::sqrt(c11);
  chol(1, 0) = c12 / chol(0, 0);
  chol(1, 1) = std::sqrt(c22 - chol(1, 0) * chol(1, 0));
  return chol;
}

}  // namespace

void QuadConfig::validate() const {
  if (!(rel_tol > 0)) throw DomainError("rel_tol", "must be > 0");
  if (!(abs_tol > 0)) throw DomainError("abs_tol", "must be > 0");
  if (max_subdivisions < 0) throw DomainError("max_subdivisions", "must be >= 0");
  if (gh_nodes < 2) throw DomainError("gh_nodes", "must be >= 2");
}

QuadResult integrate_adaptive(const std::function<double(double)>& f, std::span<const double> breakpoints,
                              const QuadConfig& cfg) {
  std::vector<Panel> panels;
  for (std::size_t i = 0; i + 1 < breakpoints.size(); ++i) {
    if (breakpoints[i + 1] > breakpoints[i]) panels.push_back(gauss_kronrod15(f, breakpoints[i], breakpoints[i + 1]));
  }
  auto totals = [&] {
    double value = 0.0, error = 0.0;
    for (const auto& p : panels) {
      value += p.value;
      error += p.error;
    }
    return std::pair{value, error};
  };
  auto [value, error] = totals();
  int splits = 0;
  while (error > std::max(cfg.abs_tol, cfg.rel_tol * std::abs(value))) {
    if (splits >= cfg.max_subdivisions) return {value, error, false};
    auto worst = std::max_element(panels.begin(), panels.end(),
                                  [](const Panel& x, const Panel& y) { return x.error < y.error; });
    const double a = worst->a, b = worst->b, mid = 0.5 * (a + b);
    if (!(mid > a && mid < b)) return {value, error, false};
    *worst = gauss_kronrod15(f, a, mid);
    panels.push_back(gauss_kronrod15(f, mid, b));
    ++splits;
    std::tie(value, error) = totals();
  }
  return {value, error, true};
}

QuadResult integrate_weibull(const std::function<double(double)>& g, double lambda, double gamma, double t,
                             const QuadConfig& cfg) {
  check_weibull_args(lambda, gamma, t);
  // e^{-750} underflows; g is bounded, so the remaining tail is below double resolution.
  const double v_end = std::min(weibull_v_max(lambda, gamma, t), 750.0);
  if (v_end <= 0) return {0.0, 0.0, true};
  const WeibullMap map(lambda, gamma);
  auto h = [&](double w) { return g(map.u_of_w(w)) * map.jacobian(w); };
  std::vector<double> pts;
  for (double v : v_breakpoints(v_end, {})) pts.push_back(map.w_of_v(v));
  return integrate_adaptive(h, pts, cfg);
}

LogQuadResult integrate_weibull_log(const std::function<double(double)>& log_g, double lambda, double gamma,
                                    double t, const QuadConfig& cfg, PeakHint hint) {
  check_weibull_args(lambda, gamma, t);
  const double v_max = weibull_v_max(lambda, gamma, t);
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  if (v_max <= 0) return {kNegInf, 0.0, true};

  const WeibullMap map(lambda, gamma);
  auto v_of = [&](double u) { return std::pow(u / lambda, gamma); };
  auto log_h = [&](double w) { return log_g(map.u_of_w(w)) + map.log_jacobian(w); };

  std::vector<double> interior;
  const double u_end = std::isinf(t) ? map.u_of_w(map.w_of_v(std::min(v_max, 750.0))) : t;
  if (hint.width > 0 && std::isfinite(hint.center)) {
    for (double k : {-8.0, -2.5, 0.0, 2.5, 8.0}) {
      const double u = hint.center + k * hint.width;
      if (u > 0 && u < u_end) interior.push_back(v_of(u));
    }
  } else {
    for (double frac : {0.125, 0.25, 0.5, 0.75, 0.875}) interior.push_back(v_of(frac * u_end));
  }

  // Scale by the largest sampled value of the integrand, e^{-v} included.
  auto log_h_v = [&](double v) { return log_g(map.u_of_w(map.w_of_v(v))) - v; };
  double shift = kNegInf;
  for (double v : interior) shift = std::max(shift, log_h_v(v));
  if (std::isfinite(v_max)) shift = std::max(shift, log_h_v(v_max));
  shift = std::max(shift, log_h_v(std::min(v_max, 1e-12)));
  if (shift == kNegInf) return {kNegInf, 0.0, true};

  // log_g <= 0, so the tail beyond v_end is below e^{shift - 50}.
  const double v_end = std::min(v_max, std::max(50.0, 50.0 - shift));
  std::vector<double> pts;
  for (double v : v_breakpoints(v_end, interior)) pts.push_back(map.w_of_v(v));
  auto scaled = [&](double w) { return std::exp(log_h(w) - shift); };
  const auto res = integrate_adaptive(scaled, pts, cfg);
  if (!(res.value > 0)) return {kNegInf, 0.0, res.converged};
  return {shift + std::log(res.value), res.error / res.value, res.converged};
}

const GaussHermiteRule& gauss_hermite_rule(int n) {
  if (n < 2) throw DomainError("gh_nodes", "must be >= 2");
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussHermiteRule>> cache;
  std::lock_guard lock(mutex);
  auto& slot = cache[n];
  if (slot) return *slot;

  // Newton iteration on the orthonormal Hermite recurrence, largest root
  // first, with the usual asymptotic starting guesses.
  auto rule = std::make_unique<GaussHermiteRule>();
  rule->nodes.assign(n, 0.0);
  rule->weights.assign(n, 0.0);
  const double pim4 = std::pow(std::numbers::pi, -0.25);
  const int half = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < half; ++i) {
    if (i == 0) z = std::sqrt(2.0 * n + 1) - 1.85575 * std::pow(2.0 * n + 1, -0.16667);
    else if (i == 1) z -= 1.14 * std::pow(static_cast<double>(n), 0.426) / z;
    else if (i == 2) z = 1.86 * z - 0.86 * rule->nodes[0];
    else if (i == 3) z = 1.91 * z - 0.91 * rule->nodes[1];
    else z = 2.0 * z - rule->nodes[i - 2];
    double pp = 0.0;
    for (int iter = 0; iter < 100; ++iter) {
      double p1 = pim4, p2 = 0.0;
      for (int j = 0; j < n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (j + 1)) * p2 - std::sqrt(static_cast<double>(j) / (j + 1)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::abs(z - z1) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    rule->nodes[i] = z;
    rule->nodes[n - 1 - i] = -z;
    rule->weights[i] = 2.0 / (pp * pp);
    rule->weights[n - 1 - i] = rule->weights[i];
  }
  std::reverse(rule->nodes.begin(), rule->nodes.end());
  std::reverse(rule->weights.begin(), rule->weights.end());
  slot = std::move(rule);
  return *slot;
}

double integrate_gh2(const std::function<double(double, double)>& f, const Eigen::Vector2d& mean,
                     const Eigen::Matrix2d& cov, const QuadConfig& cfg) {
  const Eigen::Matrix2d chol = checked_cholesky(cov, "cov");
  const auto& rule = gauss_hermite_rule(cfg.gh_nodes);
  const double scale = std::numbers::sqrt2;
  double sum = 0.0;
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double z1 = scale * rule.nodes[i];
    for (std::size_t j = 0; j < rule.nodes.size(); ++j) {
      const double z2 = scale * rule.nodes[j];
      const double a = mean(0) + chol(0, 0) * z1;
      const double b = mean(1) + chol(1, 0) * z1 + chol(1, 1) * z2;
      sum += rule.weights[i] * rule.weights[j] * f(a, b);
    }
  }
  return sum / std::numbers::pi;
}

double integrate_gh2_log(const std::function<double(double, double)>& log_f, const Eigen::Vector2d& mean,
                         const Eigen::Matrix2d& cov, const Eigen::Vector2d& proposal_mean,
                         const Eigen::Matrix2d& proposal_cov, const QuadConfig& cfg) {
  const Eigen::Matrix2d chol_p = checked_cholesky(cov, "cov");
  const Eigen::Matrix2d chol_q = checked_cholesky(proposal_cov, "proposal_cov");
  const auto& rule = gauss_hermite_rule(cfg.gh_nodes);
  const double log_det_ratio = std::log(chol_q(0, 0) * chol_q(1, 1)) - std::log(chol_p(0, 0) * chol_p(1, 1));

  // log of p(x)/q(x) at x = m_q + L_q z, with p = N(mean, cov).
  auto log_ratio = [&](const Eigen::Vector2d& x, const Eigen::Vector2d& z) {
    const Eigen::Vector2d w = chol_p.triangularView<Eigen::Lower>().solve(x - mean);
    return log_det_ratio - 0.5 * w.squaredNorm() + 0.5 * z.squaredNorm();
  };

  const std::size_t n = rule.nodes.size();
  std::vector<double> terms;
  terms.reserve(n * n);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const Eigen::Vector2d z(std::numbers::sqrt2 * rule.nodes[i], std::numbers::sqrt2 * rule.nodes[j]);
      const Eigen::Vector2d x = proposal_mean + chol_q * z;
      const double term =
          std::log(rule.weights[i] * rule.weights[j]) + log_f(x(0), x(1)) + log_ratio(x, z);
      terms.push_back(term);
      top = std::max(top, term);
    }
  }
  if (top == -std::numeric_limits<double>::infinity()) return top;
  double sum = 0.0;
  for (double term : terms) sum += std::exp(term - top);
  return top + std::log(sum) - std::log(std::numbers::pi);
}

}  // namespace ssb

namespace ssb {

LogQuadResult integrate_normal_log(const std::function<double(double)>& log_f, double mean, double sd,
                                   const QuadConfig& cfg, PeakHint hint) {
  if (!(sd > 0) || !std::isfinite(sd) || !std::isfinite(mean)) {
    throw DomainError("sd", "must be positive and finite");
  }
  constexpr double kNegInf = -std::numeric_limits<double>::infinity();
  // Work in w = (x - mean) / sd against the standard normal density.
  auto log_h = [&](double w) { return log_f(mean + sd * w) - 0.5 * w * w; };
  double center = 0.0, width = 1.0;
  if (hint.width > 0 && std::isfinite(hint.center)) {
    center = (hint.center - mean) / sd;
    width = std::min(1.0, hint.width / sd);
  }
  double shift = std::max(log_h(center), log_h(0.0));
  if (shift == kNegInf) return {kNegInf, 0.0, true};
  // log_f <= 0, so |w| > reach leaves less than e^{shift - 50} behind.
  const double reach = std::sqrt(2.0 * std::max(50.0, 50.0 - shift));
  const double lo = std::min(-reach, center - 8.0 * width), hi = std::max(reach, center + 8.0 * width);
  std::vector<double> pts{lo, hi, 0.0};
  for (double k : {-8.0, -2.5, 0.0, 2.5, 8.0}) pts.push_back(center + k * width);
  std::sort(pts.begin(), pts.end());
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  auto scaled = [&](double w) { return std::exp(log_h(w) - shift); };
  const auto res = integrate_adaptive(scaled, pts, cfg);
  if (!(res.value > 0)) return {kNegInf, 0.0, res.converged};
  return {shift + std::log(res.value) - 0.5 * std::log(2.0 * std::numbers::pi), res.error / res.value,
          res.converged};
}

}  // namespace ssb
