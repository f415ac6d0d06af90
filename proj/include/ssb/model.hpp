#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace ssb {

// The five count models compared on real data.
enum class ModelKind { Lrm, LrmPlus, LrmRe, Ssb, SsbPlus };

std::string_view to_string(ModelKind kind);
ModelKind parse_model_kind(std::string_view name);  // accepts "SSB_PLUS", "ssb+", "ssb_plus", ...

// Number of free parameters p used by BIC. LRM_RE has 6 when eta is free.
int n_params(ModelKind kind, bool re_with_eta = false);

// Latent-Weibull lead time + logistic action time + Bernoulli phase.
// eta == 1 is the plain SSB sub-model.
class SsbParams {
 public:
  SsbParams(double alpha, double beta, double lambda, double gamma, double eta = 1.0);

  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }
  double lambda() const noexcept { return lambda_; }
  double gamma() const noexcept { return gamma_; }
  double eta() const noexcept { return eta_; }

  SsbParams with_logistic(double alpha, double beta, double eta) const;
  SsbParams with_weibull(double lambda, double gamma) const;

  friend bool operator==(const SsbParams&, const SsbParams&) = default;

 private:
  double alpha_, beta_, lambda_, gamma_, eta_;
};

// Fixed-effect logistic count model, no lead time.
class LrmParams {
 public:
  LrmParams(double alpha, double beta, double eta = 1.0);

  double alpha() const noexcept { return alpha_; }
  double beta() const noexcept { return beta_; }
  double eta() const noexcept { return eta_; }

  friend bool operator==(const LrmParams&, const LrmParams&) = default;

 private:
  double alpha_, beta_, eta_;
};

// Bivariate normal random effect on (alpha, beta).
class ReParams {
 public:
  ReParams(double mu1, double mu2, double rho, double sigma1, double sigma2, double eta = 1.0);

  double mu1() const noexcept { return mu1_; }
  double mu2() const noexcept { return mu2_; }
  double rho() const noexcept { return rho_; }
  double sigma1() const noexcept { return sigma1_; }
  double sigma2() const noexcept { return sigma2_; }
  double eta() const noexcept { return eta_; }

  Eigen::Vector2d mean() const { return {mu1_, mu2_}; }
  Eigen::Matrix2d covariance() const;

  friend bool operator==(const ReParams&, const ReParams&) = default;

 private:
  double mu1_, mu2_, rho_, sigma1_, sigma2_, eta_;
};

using AnyParams = std::variant<LrmParams, SsbParams, ReParams>;
using NamedValues = std::map<std::string, double>;

// Checks that `raw` carries the fields `kind` needs and that each lies in its
// domain. Throws DomainError naming the field.
AnyParams validate_params(const NamedValues& raw, ModelKind kind);

// Inverse of validate_params; field names match what validate_params expects.
NamedValues to_named(const AnyParams& params);

// Sacrifice schedule t_1 < ... < t_I with replicate counts per time and a
// common agent mass M.
class CountDataset {
 public:
  CountDataset(std::vector<double> schedule, std::vector<std::vector<int>> counts, int mass);

  std::span<const double> schedule() const noexcept { return schedule_; }
  const std::vector<std::vector<int>>& counts() const noexcept { return counts_; }
  std::span<const int> counts_at(std::size_t i) const { return counts_.at(i); }
  int mass() const noexcept { return mass_; }

  std::size_t n_times() const noexcept { return schedule_.size(); }
  // Total number of count observations N_ij.
  std::size_t n_obs() const noexcept;
  // Times with at least one observation.
  std::size_t n_observed_times() const noexcept;

  friend bool operator==(const CountDataset&, const CountDataset&) = default;

 private:
  std::vector<double> schedule_;
  std::vector<std::vector<int>> counts_;
  int mass_;
};

// Hourly cumulative event counts N(tau), tau = 0..horizon, of one system.
class Trajectory {
 public:
  Trajectory(std::vector<int> counts, int mass, double lead_time,
             std::optional<std::vector<double>> event_times = std::nullopt);

  std::span<const int> counts() const noexcept { return counts_; }
  int count_at(int hour) const { return counts_.at(static_cast<std::size_t>(hour)); }
  int horizon() const noexcept { return static_cast<int>(counts_.size()) - 1; }
  int mass() const noexcept { return mass_; }
  double lead_time() const noexcept { return lead_time_; }
  const std::optional<std::vector<double>>& event_times() const noexcept { return event_times_; }

  friend bool operator==(const Trajectory&, const Trajectory&) = default;

 private:
  std::vector<int> counts_;
  int mass_;
  double lead_time_;
  std::optional<std::vector<double>> event_times_;
};

struct TraceEntry {
  std::string step;
  double loglik;
};

// Outcome of fitting one model. `info` is the observed Fisher information in
// the natural parameterisation, ordered like `names`.
struct FitResult {
  ModelKind model = ModelKind::Lrm;
  std::vector<std::string> names;
  std::vector<double> estimates;
  double loglik = 0.0;
  std::optional<Eigen::MatrixXd> info;
  // NaN marks a parameter whose SE is unavailable (boundary estimate).
  std::optional<std::vector<double>> std_errors;
  std::vector<bool> at_boundary;
  int n_params = 0;
  bool converged = false;
  int iterations = 0;
  std::vector<TraceEntry> trace;

  double estimate(std::string_view name) const;
};

}  // namespace ssb
