#pragma once

#include <cstdint>
#include <vector>

#include "ssb/model.hpp"
#include "ssb/quadrature.hpp"

namespace ssb {

// Marginal distribution of the count N(t): probs[k] = Pr[N(t) = k].
struct CountPmf {
  double t = 0.0;
  std::vector<double> probs;
  bool converged = true;
};

struct McCountPmf {
  CountPmf pmf;
  std::vector<double> std_errors;  // binomial SE of each empirical frequency
};

// log Pr[N(t) = k] under the SSB / SSB+ model (-inf when impossible).
double ssb_count_loglik(const SsbParams& params, int mass, double t, int k, const QuadConfig& cfg = {});

struct LoglikValue {
  double value = 0.0;
  bool converged = true;
};
LoglikValue ssb_count_loglik_detail(const SsbParams& params, int mass, double t, int k, const QuadConfig& cfg = {});

// Sum of ssb_count_loglik over every observation N_ij.
double ssb_dataset_loglik(const SsbParams& params, const CountDataset& data, const QuadConfig& cfg = {});
LoglikValue ssb_dataset_loglik_detail(const SsbParams& params, const CountDataset& data,
                                      const QuadConfig& cfg = {});

CountPmf marginal_count_pmf(const SsbParams& params, int mass, double t, const QuadConfig& cfg = {});

// Probability that nobody has acted by t although the lead time has ended:
// int_0^t [1/(1 + e^{alpha + beta (t-u)})]^M f_U(u) du. eta is ignored.
double delta_factor(const SsbParams& params, int mass, double t, const QuadConfig& cfg = {});

// Weibull lead-time probabilities.
double lead_time_cdf(double lambda, double gamma, double t);
double lead_time_survival(double lambda, double gamma, double t);

// Fixed-effect logistic model: N ~ Binom(M, eta * logistic(alpha + beta t)).
double lrm_loglik(double alpha, double beta, double eta, const CountDataset& data);
double lrm_loglik(const LrmParams& params, const CountDataset& data);

// Random-effect logistic model with (alpha, beta) ~ N(mu, Sigma) and no lead
// time. Each count depends on (alpha, beta) only through alpha + beta t, so
// its integral is univariate; it is evaluated by adaptive Gauss-Kronrod
// around the posterior mode of alpha + beta t.
double re_count_loglik(const ReParams& params, int mass, double t, int k, const QuadConfig& cfg = {});
double re_loglik(const ReParams& params, const CountDataset& data, const QuadConfig& cfg = {});

// Empirical pmf of N(t) from n_sims simulated systems (lead time, per-agent
// phase, per-agent action time). Requires n_sims >= 10^4.
McCountPmf mc_count_pmf(const SsbParams& params, int mass, double t, std::int64_t n_sims, std::uint64_t seed);

// log C(M, k) via log-gamma.
double log_choose(int n, int k);

namespace detail {
// log Pr[one agent has acted] and log Pr[it has not], given the linear
// predictor x, in numerically stable form.
double log_event_prob(double x, double eta);
double log_no_event_prob(double x, double eta);
}  // namespace detail

}  // namespace ssb
