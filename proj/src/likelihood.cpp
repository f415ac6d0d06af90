#include "ssb/likelihood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ssb/errors.hpp"
#include "ssb/random.hpp"

namespace ssb {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double softplus(double x) { return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

double logistic(double x) { return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x)); }

double log_add_exp(double a, double b) {
  if (a == kNegInf) return b;
  if (b == kNegInf) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(-std::abs(a - b)));
}

// log of p_event^k * p_none^(M-k) at linear predictor x; zero exponents
// contribute nothing even when the matching probability is 0.
double binomial_kernel(double x, double eta, int mass, int k) {
  if (eta >= 1) {
    // log sigma(x) = -softplus(-x) and log(1 - sigma(x)) = -softplus(-x) - x.
    return -mass * softplus(-x) - (mass - k) * x;
  }
  double out = 0.0;
  if (k > 0) out += k * detail::log_event_prob(x, eta);
  if (k < mass) out += (mass - k) * detail::log_no_event_prob(x, eta);
  return out;
}

void check_count(int mass, double t, int k) {
  if (mass < 1) throw DomainError("mass", "must be >= 1");
  if (k < 0 || k > mass) throw DomainError("k", "count outside [0, M]");
  if (!(t > 0)) throw DomainError("t", "must be > 0");
}

// Where the lead-time integrand of a count k concentrates.
PeakHint peak_hint(const SsbParams& p, int mass, double t, int k) {
  const double beta = p.beta();
  if (!(beta > 0)) return {};
  if (k == 0) {
    const double rate = 1.0 + mass * p.eta() * logistic(p.alpha());
    return {t, std::min(t, 1.0 / (beta * rate))};
  }
  const double target = static_cast<double>(k) / (mass * p.eta());
  if (target >= 1.0) return {0.0, 1.0 / (beta * std::sqrt(static_cast<double>(mass)))};
  const double x_star = std::log(target / (1.0 - target));
  const double curvature = mass * target * (1.0 - target);
  return {t - (x_star - p.alpha()) / beta, 1.0 / (beta * std::sqrt(std::max(curvature, 1.0)))};
}

}  // namespace

namespace detail {

double log_event_prob(double x, double eta) {
  if (eta <= 0) return kNegInf;
  return std::log(eta) - softplus(-x);
}

double log_no_event_prob(double x, double eta) {
  if (eta >= 1) return -softplus(x);
  if (eta <= 0) return 0.0;
  return log_add_exp(std::log1p(-eta), std::log(eta) - softplus(x));
}

}  // namespace detail

double log_choose(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

double lead_time_cdf(double lambda, double gamma, double t) {
  if (t <= 0) return 0.0;
  return -std::expm1(-std::pow(t / lambda, gamma));
}

double lead_time_survival(double lambda, double gamma, double t) {
  if (t <= 0) return 1.0;
  return std::exp(-std::pow(t / lambda, gamma));
}

LoglikValue ssb_count_loglik_detail(const SsbParams& params, int mass, double t, int k, const QuadConfig& cfg) {
  check_count(mass, t, k);
  const double v_t = std::pow(t / params.lambda(), params.gamma());
  if (params.eta() <= 0) return {k == 0 ? 0.0 : kNegInf, true};

  const double alpha = params.alpha(), beta = params.beta(), eta = params.eta();
  auto log_g = [&](double u) { return binomial_kernel(alpha + beta * (t - u), eta, mass, k); };
  const auto integral =
      integrate_weibull_log(log_g, params.lambda(), params.gamma(), t, cfg, peak_hint(params, mass, t, k));
  if (k > 0) return {log_choose(mass, k) + integral.log_value, integral.converged};
  return {log_add_exp(-v_t, integral.log_value), integral.converged};
}

double ssb_count_loglik(const SsbParams& params, int mass, double t, int k, const QuadConfig& cfg) {
  return ssb_count_loglik_detail(params, mass, t, k, cfg).value;
}

LoglikValue ssb_dataset_loglik_detail(const SsbParams& params, const CountDataset& data, const QuadConfig& cfg) {
  LoglikValue total;
  const auto schedule = data.schedule();
  std::vector<int> sorted;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    // Equal counts at one time share a term.
    const auto col = data.counts_at(i);
    sorted.assign(col.begin(), col.end());
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t j = 0; j < sorted.size();) {
      std::size_t run = j;
      while (run < sorted.size() && sorted[run] == sorted[j]) ++run;
      const auto term = ssb_count_loglik_detail(params, data.mass(), schedule[i], sorted[j], cfg);
      total.value += static_cast<double>(run - j) * term.value;
      total.converged = total.converged && term.converged;
      j = run;
    }
  }
  return total;
}

double ssb_dataset_loglik(const SsbParams& params, const CountDataset& data, const QuadConfig& cfg) {
  return ssb_dataset_loglik_detail(params, data, cfg).value;
}

CountPmf marginal_count_pmf(const SsbParams& params, int mass, double t, const QuadConfig& cfg) {
  CountPmf pmf{t, std::vector<double>(static_cast<std::size_t>(mass) + 1, 0.0), true};
  for (int k = 0; k <= mass; ++k) {
    const auto term = ssb_count_loglik_detail(params, mass, t, k, cfg);
    pmf.probs[static_cast<std::size_t>(k)] = std::exp(term.value);
    pmf.converged = pmf.converged && term.converged;
  }
  return pmf;
}

double delta_factor(const SsbParams& params, int mass, double t, const QuadConfig& cfg) {
  if (mass < 1) throw DomainError("mass", "must be >= 1");
  if (!(t > 0)) return 0.0;
  const SsbParams ssb = params.with_logistic(params.alpha(), params.beta(), 1.0);
  const double alpha = ssb.alpha(), beta = ssb.beta();
  auto log_g = [&](double u) { return -mass * softplus(alpha + beta * (t - u)); };
  const auto integral = integrate_weibull_log(log_g, ssb.lambda(), ssb.gamma(), t, cfg, peak_hint(ssb, mass, t, 0));
  return std::exp(integral.log_value);
}

double lrm_loglik(double alpha, double beta, double eta, const CountDataset& data) {
  if (!(eta >= 0 && eta <= 1)) throw DomainError("eta", "must lie in [0, 1]");
  const int mass = data.mass();
  const auto schedule = data.schedule();
  double total = 0.0;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const double x = alpha + beta * schedule[i];
    for (int k : data.counts_at(i)) total += log_choose(mass, k) + binomial_kernel(x, eta, mass, k);
  }
  return total;
}

double lrm_loglik(const LrmParams& params, const CountDataset& data) {
  return lrm_loglik(params.alpha(), params.beta(), params.eta(), data);
}

double re_count_loglik(const ReParams& params, int mass, double t, int k, const QuadConfig& cfg) {
  if (mass < 1) throw DomainError("mass", "must be >= 1");
  if (k < 0 || k > mass) throw DomainError("k", "count outside [0, M]");
  const double eta = params.eta();
  if (eta <= 0) return k == 0 ? 0.0 : kNegInf;

  // The integrand depends on (a, b) only through z = a + b t ~ N(m, s2), so
  // the bivariate expectation is a univariate one. Locate the posterior mode.
  const Eigen::Vector2d mean = params.mean();
  const Eigen::Matrix2d cov = params.covariance();
  const Eigen::Vector2d c(1.0, t);
  const double m = c.dot(mean);
  const double s2 = c.dot(cov * c);

  auto ell = [&](double z) { return binomial_kernel(z, eta, mass, k); };
  auto ell_d1 = [&](double z) {
    const double s = logistic(z);
    if (eta >= 1) return k - mass * s;
    return k * (1.0 - s) - (mass - k) * eta * s * (1.0 - s) / (1.0 - eta * s);
  };
  auto ell_d2 = [&](double z) {
    const double s = logistic(z);
    const double ds = s * (1.0 - s);
    if (eta >= 1) return -mass * ds;
    const double q = 1.0 - eta * s;
    return -k * ds - (mass - k) * eta * ds * ((1.0 - 2.0 * s) * q + eta * s * (1.0 - s)) / (q * q);
  };
  auto score = [&](double z) { return ell_d1(z) - (z - m) / s2; };

  double lo = m - 1.0, hi = m + 1.0;
  for (double step = 1.0; score(lo) <= 0; step *= 2.0) lo -= step;
  for (double step = 1.0; score(hi) >= 0; step *= 2.0) hi += step;
  double z = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    const double g = score(z);
    if (g > 0) lo = z;
    else hi = z;
    const double curv = ell_d2(z) - 1.0 / s2;
    double next = curv < 0 ? z - g / curv : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const bool done = std::abs(next - z) <= 1e-12 * (1.0 + std::abs(z));
    z = next;
    if (done || hi - lo <= 1e-14 * (1.0 + std::abs(z))) break;
  }

  // Panels are placed around the mode on the scale of the posterior curvature.
  const double h = std::max(-ell_d2(z), 0.0);
  const double posterior_sd = std::sqrt(s2 / (1.0 + h * s2));
  return log_choose(mass, k) + integrate_normal_log(ell, m, std::sqrt(s2), cfg, {z, posterior_sd}).log_value;
}

double re_loglik(const ReParams& params, const CountDataset& data, const QuadConfig& cfg) {
  const auto schedule = data.schedule();
  double total = 0.0;
  std::vector<int> sorted;
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    const auto col = data.counts_at(i);
    sorted.assign(col.begin(), col.end());
    std::sort(sorted.begin(), sorted.end());
    for (std::size_t j = 0; j < sorted.size();) {
      std::size_t run = j;
      while (run < sorted.size() && sorted[run] == sorted[j]) ++run;
      total += static_cast<double>(run - j) * re_count_loglik(params, data.mass(), schedule[i], sorted[j], cfg);
      j = run;
    }
  }
  return total;
}

McCountPmf mc_count_pmf(const SsbParams& params, int mass, double t, std::int64_t n_sims, std::uint64_t seed) {
  if (n_sims < 10000) throw DomainError("n_sims", "must be >= 10^4");
  if (mass < 1) throw DomainError("mass", "must be >= 1");
  std::vector<std::int64_t> tally(static_cast<std::size_t>(mass) + 1, 0);
  Rng rng(seed);
  for (std::int64_t s = 0; s < n_sims; ++s) {
    const double u = sample_lead_time(params.lambda(), params.gamma(), rng);
    int count = 0;
    if (u < t) {
      for (int a = 0; a < mass; ++a) {
        if (!(rng.uniform() < params.eta())) continue;
        if (u + sample_action_time(params.alpha(), params.beta(), rng) <= t) ++count;
      }
    }
    ++tally[static_cast<std::size_t>(count)];
  }
  McCountPmf out;
  out.pmf.t = t;
  const double n = static_cast<double>(n_sims);
  for (auto c : tally) {
    const double p = static_cast<double>(c) / n;
    out.pmf.probs.push_back(p);
    out.std_errors.push_back(std::sqrt(p * (1.0 - p) / n));
  }
  return out;
}

}  // namespace ssb
