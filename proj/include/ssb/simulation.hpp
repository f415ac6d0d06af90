#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ssb/estimation.hpp"
#include "ssb/model.hpp"
#include "ssb/random.hpp"

namespace ssb {

std::vector<double> default_schedule();  // {2, 4, 6, 8, 10, 12, 24, 36, 48, 60}
std::vector<double> table2_schedule();   // {2, 4, 6, 8, 12, 16, 20, 30, 45, 60}
std::vector<double> schedule_preset(const std::string& name);  // "default" or "table2"

// Which events a sacrifice at time t counts.
enum class SacrificeRule {
  HourPlusOne,  // events in [0, t + 1), the hourly trajectory convention
  Exact,        // events in [0, t], the window the likelihood describes
};
SacrificeRule parse_sacrifice_rule(const std::string& name);
std::string to_string(SacrificeRule rule);

struct SimConfig {
  int n_trajectories = 100;
  int mass = 300;
  int horizon = 60;
  std::vector<double> schedule = default_schedule();
  int replicates = 10;  // J per sacrifice time
  std::uint64_t seed = 20240601;
  SacrificeRule sacrifice_rule = SacrificeRule::Exact;

  void validate() const;  // throws DomainError / SizeMismatch
};

// Random-stream tags, so different uses of one seed never overlap.
inline constexpr std::uint32_t kSsbStream = 1;
inline constexpr std::uint32_t kReStream = 2;
inline constexpr std::uint32_t kSacrificeStream = 3;
inline constexpr std::uint32_t kReplicateStream = 4;

// One system: a lead time U, then every agent in phase + (probability eta)
// acts at U + S. counts(tau) = #{T <= tau + 1}. Non-acting agents carry an
// infinite event time.
Trajectory simulate_trajectory(const SsbParams& params, int mass, int horizon, Rng& rng);

// One system of the random-effect model: (a, b) ~ N(mu, Sigma) with b <= 0
// redrawn (at most 10^6 times), no lead time.
Trajectory simulate_re_trajectory(const ReParams& params, int mass, int horizon, Rng& rng);

// Trajectory h uses Rng::substream(seed, h, tag).
std::vector<Trajectory> simulate_ensemble(const SsbParams& params, const SimConfig& cfg);
std::vector<Trajectory> simulate_re_ensemble(const ReParams& params, const SimConfig& cfg);

// Events of one trajectory counted by a sacrifice at time t.
int sacrifice_count(const Trajectory& trajectory, double t, SacrificeRule rule);

// Random partition of I * J trajectories into I groups of J; group i is
// sacrificed at schedule[i]. Throws SizeMismatch.
CountDataset sacrifice_sample(const std::vector<Trajectory>& trajectories, const std::vector<double>& schedule,
                              int replicates, Rng& rng, SacrificeRule rule = SacrificeRule::Exact);

struct ProtocolResult {
  std::vector<Trajectory> ssb_ensemble;
  std::vector<Trajectory> re_ensemble;
  CountDataset dataset;
  FitResult lrm_fit;  // BIC baseline
  FitResult ssb_fit;
  FitResult re_fit;
  double log_lr = 0.0;  // loglik(SSB fit) - loglik(RE fit)
};

// Simulate an SSB ensemble, sacrifice it, fit LRM, SSB and the random-effect
// model (eta fixed at 1) to the same counts, and simulate an RE ensemble at
// the random-effect fit.
ProtocolResult run_protocol(const SsbParams& theta0, const SimConfig& sim, EstimationConfig est = {});

struct ReplicateRow {
  int replicate = 0;
  bool ok = false;
  std::string error;
  double lambda0 = 0.0, gamma0 = 0.0;
  double alpha = 0.0, beta = 0.0, lambda = 0.0, gamma = 0.0;
  double loglik = 0.0;
  bool converged = false;
};

struct SummaryStat {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;  // NaN with fewer than two successful replicates
};

struct ReplicateStudy {
  std::vector<ReplicateRow> rows;
  std::vector<SummaryStat> summary;  // lambda0, gamma0, alpha, beta, lambda, gamma
  int n_failed = 0;
};

// Repeats simulate -> sacrifice -> SSB fit n_reps times. Replicate r draws
// its seed from Rng::substream(sim.seed, r, kReplicateStream); failed fits
// are recorded and excluded from the summary.
ReplicateStudy replicate_study(const SsbParams& theta0, const SimConfig& sim, int n_reps, EstimationConfig est = {},
                               unsigned threads = 1);

std::vector<SummaryStat> summarize(const std::vector<ReplicateRow>& rows);

}  // namespace ssb
