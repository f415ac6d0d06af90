#pragma once

#include <cstdint>
#include <random>

namespace ssb {

// Seeded generator passed explicitly to every sampling routine.
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  // Independent stream for (seed, index), e.g. one per trajectory or replicate.
  // `tag` separates unrelated uses of the same seed.
  static Rng substream(std::uint64_t seed, std::uint64_t index, std::uint32_t tag = 0);

  // Uniform on the open interval (0, 1).
  double uniform();
  double normal();
  std::uint64_t next() { return engine_(); }
  std::mt19937_64& engine() { return engine_; }

 private:
  explicit Rng(std::seed_seq& seq) : engine_(seq) {}
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

// Weibull(lambda, gamma) by inverse CDF of the uniform p.
double weibull_quantile(double p, double lambda, double gamma);
double sample_lead_time(double lambda, double gamma, Rng& rng);

// Logistic action time with location -alpha/beta and scale 1/beta, censored
// at 0: Pr[S > s] = 1/(1 + e^{alpha + beta s}) for s >= 0 and an atom
// Pr[S = 0] = e^alpha/(1 + e^alpha). p is clamped to [1e-15, 1 - 1e-15].
double action_time_quantile(double p, double alpha, double beta);
double sample_action_time(double alpha, double beta, Rng& rng);

}  // namespace ssb
