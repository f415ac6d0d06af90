#include "ssb/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "ssb/errors.hpp"

namespace ssb {

Rng::Rng(std::uint64_t seed) : engine_(seed) {}

Rng Rng::substream(std::uint64_t seed, std::uint64_t index, std::uint32_t tag) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), tag};
  return Rng(seq);
}

double Rng::uniform() {
  // 53 random bits, shifted off zero.
  return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1p-53;
}

double Rng::normal() { return normal_(engine_); }

double weibull_quantile(double p, double lambda, double gamma) {
  if (!(lambda > 0) || !(gamma > 0)) throw DomainError("weibull", "lambda and gamma must be > 0");
  return lambda * std::pow(-std::log1p(-p), 1.0 / gamma);
}

double sample_lead_time(double lambda, double gamma, Rng& rng) {
  return weibull_quantile(rng.uniform(), lambda, gamma);
}

double action_time_quantile(double p, double alpha, double beta) {
  if (!(beta >= 0)) throw DomainError("beta", "must be >= 0 to sample action times");
  p = std::clamp(p, 1e-15, 1.0 - 1e-15);
  const double excess = std::log(p / (1.0 - p)) - alpha;
  // beta == 0: the agent acts at once or never.
  if (beta == 0) return excess <= 0 ? 0.0 : std::numeric_limits<double>::infinity();
  return std::max(0.0, excess / beta);
}

double sample_action_time(double alpha, double beta, Rng& rng) {
  return action_time_quantile(rng.uniform(), alpha, beta);
}

}  // namespace ssb
