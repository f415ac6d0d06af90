#include "ssb/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "ssb/errors.hpp"
#include "ssb/optimize.hpp"

namespace ssb {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// counts(tau) = #{T <= tau + 1} from sorted event times.
std::vector<int> hourly_counts(std::vector<double>& times, int horizon) {
  std::sort(times.begin(), times.end());
  std::vector<int> counts(static_cast<std::size_t>(horizon) + 1);
  for (int tau = 0; tau <= horizon; ++tau) {
    const auto it = std::upper_bound(times.begin(), times.end(), tau + 1.0);
    counts[static_cast<std::size_t>(tau)] = static_cast<int>(it - times.begin());
  }
  return counts;
}

void check_sizes(int mass, int horizon) {
  if (mass < 1) throw DomainError("mass", "must be >= 1");
  if (horizon < 0) throw DomainError("horizon", "must be >= 0");
}

}  // namespace

std::vector<double> default_schedule() { return {2, 4, 6, 8, 10, 12, 24, 36, 48, 60}; }
std::vector<double> table2_schedule() { return {2, 4, 6, 8, 12, 16, 20, 30, 45, 60}; }

std::vector<double> schedule_preset(const std::string& name) {
  if (name == "default") return default_schedule();
  if (name == "table2") return table2_schedule();
  throw DomainError("schedule", "unknown preset '" + name + "' (expected default or table2)");
}

SacrificeRule parse_sacrifice_rule(const std::string& name) {
  if (name == "hour-plus-one") return SacrificeRule::HourPlusOne;
  if (name == "exact") return SacrificeRule::Exact;
  throw DomainError("sacrifice_rule", "unknown rule '" + name + "' (expected hour-plus-one or exact)");
}

std::string to_string(SacrificeRule rule) { return rule == SacrificeRule::Exact ? "exact" : "hour-plus-one"; }

void SimConfig::validate() const {
  check_sizes(mass, horizon);
  if (schedule.empty()) throw DomainError("schedule", "must not be empty");
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    if (!(schedule[i] > 0) || (i > 0 && !(schedule[i] > schedule[i - 1]))) {
      throw DomainError("schedule", "must be positive and strictly increasing");
    }
  }
  if (schedule.back() > horizon) throw DomainError("horizon", "must cover the last sacrifice time");
  if (replicates < 1) throw DomainError("replicates", "must be >= 1");
  if (static_cast<std::size_t>(n_trajectories) != schedule.size() * static_cast<std::size_t>(replicates)) {
    throw SizeMismatch("n_trajectories must equal schedule length times replicates");
  }
}

Trajectory simulate_trajectory(const SsbParams& params, int mass, int horizon, Rng& rng) {
  check_sizes(mass, horizon);
  const double u = sample_lead_time(params.lambda(), params.gamma(), rng);
  std::vector<double> times(static_cast<std::size_t>(mass), kInf);
  for (auto& t : times) {
    if (rng.uniform() < params.eta()) t = u + sample_action_time(params.alpha(), params.beta(), rng);
  }
  auto event_times = times;
  auto counts = hourly_counts(times, horizon);
  return Trajectory(std::move(counts), mass, u, std::move(event_times));
}

Trajectory simulate_re_trajectory(const ReParams& params, int mass, int horizon, Rng& rng) {
  check_sizes(mass, horizon);
  const double rho = params.rho();
  double a = 0.0, b = 0.0;
  for (int draw = 0;; ++draw) {
    if (draw == 1000000) throw RejectionBudgetExceeded("no positive slope in 10^6 random-effect draws");
    const double z1 = rng.normal(), z2 = rng.normal();
    a = params.mu1() + params.sigma1() * z1;
    b = params.mu2() + params.sigma2() * (rho * z1 + std::sqrt(1.0 - rho * rho) * z2);
    if (b > 0) break;
  }
  std::vector<double> times(static_cast<std::size_t>(mass), kInf);
  for (auto& t : times) {
    if (rng.uniform() < params.eta()) t = sample_action_time(a, b, rng);
  }
  auto event_times = times;
  auto counts = hourly_counts(times, horizon);
  return Trajectory(std::move(counts), mass, 0.0, std::move(event_times));
}

std::vector<Trajectory> simulate_ensemble(const SsbParams& params, const SimConfig& cfg) {
  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(cfg.n_trajectories));
  for (int h = 0; h < cfg.n_trajectories; ++h) {
    auto rng = Rng::substream(cfg.seed, static_cast<std::uint64_t>(h), kSsbStream);
    out.push_back(simulate_trajectory(params, cfg.mass, cfg.horizon, rng));
  }
  return out;
}

std::vector<Trajectory> simulate_re_ensemble(const ReParams& params, const SimConfig& cfg) {
  std::vector<Trajectory> out;
  out.reserve(static_cast<std::size_t>(cfg.n_trajectories));
  for (int h = 0; h < cfg.n_trajectories; ++h) {
    auto rng = Rng::substream(cfg.seed, static_cast<std::uint64_t>(h), kReStream);
    out.push_back(simulate_re_trajectory(params, cfg.mass, cfg.horizon, rng));
  }
  return out;
}

int sacrifice_count(const Trajectory& trajectory, double t, SacrificeRule rule) {
  const double window = rule == SacrificeRule::HourPlusOne ? t + 1.0 : t;
  if (const auto& times = trajectory.event_times()) {
    return static_cast<int>(std::count_if(times->begin(), times->end(), [&](double x) { return x <= window; }));
  }
  // Hourly counts only: counts(tau) covers [0, tau + 1].
  const double tau = window - 1.0;
  if (tau != std::floor(tau) || tau < 0 || tau > trajectory.horizon()) {
    throw DomainError("schedule", "sacrifice time is off the hourly grid and no event times are stored");
  }
  return trajectory.count_at(static_cast<int>(tau));
}

CountDataset sacrifice_sample(const std::vector<Trajectory>& trajectories, const std::vector<double>& schedule,
                              int replicates, Rng& rng, SacrificeRule rule) {
  if (replicates < 1) throw DomainError("replicates", "must be >= 1");
  if (trajectories.size() != schedule.size() * static_cast<std::size_t>(replicates)) {
    throw SizeMismatch("need exactly schedule length times replicates trajectories");
  }
  if (trajectories.empty()) throw SizeMismatch("no trajectories to sacrifice");
  const int mass = trajectories.front().mass();
  std::vector<std::size_t> order(trajectories.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng.engine());
  std::vector<std::vector<int>> counts(schedule.size());
  for (std::size_t i = 0; i < schedule.size(); ++i) {
    for (int j = 0; j < replicates; ++j) {
      const auto& tr = trajectories[order[i * static_cast<std::size_t>(replicates) + static_cast<std::size_t>(j)]];
      if (tr.mass() != mass) throw SizeMismatch("trajectories have different masses");
      counts[i].push_back(sacrifice_count(tr, schedule[i], rule));
    }
  }
  return CountDataset(schedule, std::move(counts), mass);
}

ProtocolResult run_protocol(const SsbParams& theta0, const SimConfig& sim, EstimationConfig est) {
  sim.validate();
  auto ssb_ensemble = simulate_ensemble(theta0, sim);
  auto rng = Rng::substream(sim.seed, 0, kSacrificeStream);
  auto dataset = sacrifice_sample(ssb_ensemble, sim.schedule, sim.replicates, rng, sim.sacrifice_rule);
  est.re_with_eta = false;
  auto lrm_fit = fit_model(dataset, ModelKind::Lrm, est);
  auto ssb_fit = fit_model(dataset, ModelKind::Ssb, est);
  auto re_fit = fit_model(dataset, ModelKind::LrmRe, est);
  const auto& r = re_fit.estimates;
  auto re_ensemble = simulate_re_ensemble(ReParams(r[0], r[1], r[2], r[3], r[4]), sim);
  const double log_lr = ssb_fit.loglik - re_fit.loglik;
  return {std::move(ssb_ensemble), std::move(re_ensemble), std::move(dataset), std::move(lrm_fit),
          std::move(ssb_fit),         std::move(re_fit),      log_lr};
}

std::vector<SummaryStat> summarize(const std::vector<ReplicateRow>& rows) {
  const std::vector<std::pair<std::string, double ReplicateRow::*>> columns{
      {"lambda0", &ReplicateRow::lambda0}, {"gamma0", &ReplicateRow::gamma0}, {"alpha", &ReplicateRow::alpha},
      {"beta", &ReplicateRow::beta},       {"lambda", &ReplicateRow::lambda}, {"gamma", &ReplicateRow::gamma}};
  std::vector<SummaryStat> out;
  for (const auto& [name, member] : columns) {
    double sum = 0.0;
    int n = 0;
    for (const auto& r : rows) {
      if (!r.ok) continue;
      sum += r.*member;
      ++n;
    }
    SummaryStat s{name, n > 0 ? sum / n : std::numeric_limits<double>::quiet_NaN(),
                  std::numeric_limits<double>::quiet_NaN()};
    if (n >= 2) {
      double ss = 0.0;
      for (const auto& r : rows) {
        if (r.ok) ss += (r.*member - s.mean) * (r.*member - s.mean);
      }
      s.sd = std::sqrt(ss / (n - 1));
    }
    out.push_back(std::move(s));
  }
  return out;
}

ReplicateStudy replicate_study(const SsbParams& theta0, const SimConfig& sim, int n_reps, EstimationConfig est,
                               unsigned threads) {
  if (n_reps < 1) throw DomainError("n_reps", "must be >= 1");
  sim.validate();
  est.compute_info = false;
  est.threads = 1;
  ReplicateStudy study;
  study.rows.resize(static_cast<std::size_t>(n_reps));
  parallel_for(static_cast<std::size_t>(n_reps), threads, [&](std::size_t r) {
    auto& row = study.rows[r];
    row.replicate = static_cast<int>(r);
    try {
      SimConfig rep = sim;
      rep.seed = Rng::substream(sim.seed, r, kReplicateStream).next();
      const auto ensemble = simulate_ensemble(theta0, rep);
      auto rng = Rng::substream(rep.seed, 0, kSacrificeStream);
      const auto data = sacrifice_sample(ensemble, rep.schedule, rep.replicates, rng, rep.sacrifice_rule);
      const auto init = weibull_current_status_init(data, est.weibull_grid);
      const auto fit = profile_iterate(data, {init.lambda, init.gamma}, ModelKind::Ssb, est);
      row.lambda0 = init.lambda;
      row.gamma0 = init.gamma;
      row.alpha = fit.estimates[0];
      row.beta = fit.estimates[1];
      row.lambda = fit.estimates[2];
      row.gamma = fit.estimates[3];
      row.loglik = fit.loglik;
      row.converged = fit.converged;
      row.ok = true;
    } catch (const Error& e) {
      row.error = e.what();
    }
  });
  for (const auto& r : study.rows) study.n_failed += r.ok ? 0 : 1;
  study.summary = summarize(study.rows);
  return study;
}

}  // namespace ssb
