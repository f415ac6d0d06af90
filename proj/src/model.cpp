#include "ssb/model.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <sstream>

#include "ssb/errors.hpp"

namespace ssb {

namespace {

void require(bool ok, const char* field, const std::string& bound, double value) {
  if (!ok) {
    std::ostringstream os;
    os << "must satisfy " << bound << ", got " << value;
    throw DomainError(field, os.str());
  }
}

void require_finite(const char* field, double value) {
  require(std::isfinite(value), field, "finite", value);
}

double take(const NamedValues& raw, const char* field) {
  auto it = raw.find(field);
  if (it == raw.end()) throw DomainError(field, "missing");
  return it->second;
}

double take_or(const NamedValues& raw, const char* field, double fallback) {
  auto it = raw.find(field);
  return it == raw.end() ? fallback : it->second;
}

}  // namespace

std::string_view to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Lrm: return "LRM";
    case ModelKind::LrmPlus: return "LRM_PLUS";
    case ModelKind::LrmRe: return "LRM_RE";
    case ModelKind::Ssb: return "SSB";
    case ModelKind::SsbPlus: return "SSB_PLUS";
  }
  return "?";
}

ModelKind parse_model_kind(std::string_view name) {
  std::string key;
  for (char c : name) {
    if (c == '-' || c == '+') {
      if (c == '+') key += "_PLUS";
      else key += '_';
      continue;
    }
    key += static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  }
  if (key == "LRM") return ModelKind::Lrm;
  if (key == "LRM_PLUS" || key == "LRMPLUS") return ModelKind::LrmPlus;
  if (key == "LRM_RE" || key == "LRMRE" || key == "RE") return ModelKind::LrmRe;
  if (key == "SSB") return ModelKind::Ssb;
  if (key == "SSB_PLUS" || key == "SSBPLUS") return ModelKind::SsbPlus;
  throw DomainError("model", "unknown model '" + std::string(name) + "'");
}

int n_params(ModelKind kind, bool re_with_eta) {
  switch (kind) {
    case ModelKind::Lrm: return 2;
    case ModelKind::LrmPlus: return 3;
    case ModelKind::LrmRe: return re_with_eta ? 6 : 5;
    case ModelKind::Ssb: return 4;
    case ModelKind::SsbPlus: return 5;
  }
  return 0;
}

SsbParams::SsbParams(double alpha, double beta, double lambda, double gamma, double eta)
    : alpha_(alpha), beta_(beta), lambda_(lambda), gamma_(gamma), eta_(eta) {
  require_finite("alpha", alpha);
  // beta == 0 is admitted for evaluation only (alpha and the lead time
  // separate there); every optimizer keeps beta strictly positive.
  require(beta >= 0 && std::isfinite(beta), "beta", "0 <= beta", beta);
  require(lambda > 0 && std::isfinite(lambda), "lambda", "0 < lambda", lambda);
  require(gamma > 0 && std::isfinite(gamma), "gamma", "0 < gamma", gamma);
  require(eta >= 0 && eta <= 1, "eta", "0 <= eta <= 1", eta);
}

SsbParams SsbParams::with_logistic(double alpha, double beta, double eta) const {
  return {alpha, beta, lambda_, gamma_, eta};
}

SsbParams SsbParams::with_weibull(double lambda, double gamma) const {
  return {alpha_, beta_, lambda, gamma, eta_};
}

LrmParams::LrmParams(double alpha, double beta, double eta) : alpha_(alpha), beta_(beta), eta_(eta) {
  require_finite("alpha", alpha);
  require(beta > 0 && std::isfinite(beta), "beta", "0 < beta", beta);
  require(eta >= 0 && eta <= 1, "eta", "0 <= eta <= 1", eta);
}

ReParams::ReParams(double mu1, double mu2, double rho, double sigma1, double sigma2, double eta)
    : mu1_(mu1), mu2_(mu2), rho_(rho), sigma1_(sigma1), sigma2_(sigma2), eta_(eta) {
  require_finite("mu1", mu1);
  require_finite("mu2", mu2);
  require(rho > -1 && rho < 1, "rho", "-1 < rho < 1", rho);
  require(sigma1 > 0 && std::isfinite(sigma1), "sigma1", "0 < sigma1", sigma1);
  require(sigma2 > 0 && std::isfinite(sigma2), "sigma2", "0 < sigma2", sigma2);
  require(eta >= 0 && eta <= 1, "eta", "0 <= eta <= 1", eta);
}

Eigen::Matrix2d ReParams::covariance() const {
  Eigen::Matrix2d cov;
  const double off = rho_ * sigma1_ * sigma2_;
  cov << sigma1_ * sigma1_, off, off, sigma2_ * sigma2_;
  return cov;
}

AnyParams validate_params(const NamedValues& raw, ModelKind kind) {
  switch (kind) {
    case ModelKind::Lrm: {
      const double eta = take_or(raw, "eta", 1.0);
      require(eta == 1.0, "eta", "eta == 1 for LRM", eta);
      return LrmParams(take(raw, "alpha"), take(raw, "beta"));
    }
    case ModelKind::LrmPlus:
      return LrmParams(take(raw, "alpha"), take(raw, "beta"), take(raw, "eta"));
    case ModelKind::LrmRe:
      return ReParams(take(raw, "mu1"), take(raw, "mu2"), take(raw, "rho"), take(raw, "sigma1"),
                      take(raw, "sigma2"), take_or(raw, "eta", 1.0));
    case ModelKind::Ssb: {
      require(take(raw, "beta") > 0, "beta", "0 < beta", take(raw, "beta"));
      const double eta = take_or(raw, "eta", 1.0);
      require(eta == 1.0, "eta", "eta == 1 for SSB", eta);
      return SsbParams(take(raw, "alpha"), take(raw, "beta"), take(raw, "lambda"), take(raw, "gamma"));
    }
    case ModelKind::SsbPlus:
      require(take(raw, "beta") > 0, "beta", "0 < beta", take(raw, "beta"));
      return SsbParams(take(raw, "alpha"), take(raw, "beta"), take(raw, "lambda"), take(raw, "gamma"),
                       take(raw, "eta"));
  }
  throw DomainError("model", "unhandled model kind");
}

NamedValues to_named(const AnyParams& params) {
  struct Visitor {
    NamedValues operator()(const LrmParams& p) const {
      return {{"alpha", p.alpha()}, {"beta", p.beta()}, {"eta", p.eta()}};
    }
    NamedValues operator()(const SsbParams& p) const {
      return {{"alpha", p.alpha()}, {"beta", p.beta()}, {"lambda", p.lambda()}, {"gamma", p.gamma()},
              {"eta", p.eta()}};
    }
    NamedValues operator()(const ReParams& p) const {
      return {{"mu1", p.mu1()},       {"mu2", p.mu2()},       {"rho", p.rho()},
              {"sigma1", p.sigma1()}, {"sigma2", p.sigma2()}, {"eta", p.eta()}};
    }
  };
  return std::visit(Visitor{}, params);
}

CountDataset::CountDataset(std::vector<double> schedule, std::vector<std::vector<int>> counts, int mass)
    : schedule_(std::move(schedule)), counts_(std::move(counts)), mass_(mass) {
  if (mass_ < 1) throw DomainError("mass", "must be >= 1, got " + std::to_string(mass_));
  if (schedule_.empty()) throw DomainError("schedule", "needs at least one sacrifice time");
  if (counts_.size() != schedule_.size()) {
    throw DomainError("counts", "one count column per sacrifice time is required");
  }
  for (std::size_t i = 0; i < schedule_.size(); ++i) {
    const double t = schedule_[i];
    require(std::isfinite(t) && t > 0, "schedule", "t > 0", t);
    if (i > 0 && !(t > schedule_[i - 1])) {
      throw DomainError("schedule", "sacrifice times must be strictly increasing");
    }
    for (int n : counts_[i]) {
      if (n < 0 || n > mass_) {
        throw DomainError("counts", "count " + std::to_string(n) + " at t=" + std::to_string(t) +
                                        " outside [0, " + std::to_string(mass_) + "]");
      }
    }
  }
}

std::size_t CountDataset::n_obs() const noexcept {
  std::size_t n = 0;
  for (const auto& col : counts_) n += col.size();
  return n;
}

std::size_t CountDataset::n_observed_times() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(counts_.begin(), counts_.end(), [](const auto& col) { return !col.empty(); }));
}

Trajectory::Trajectory(std::vector<int> counts, int mass, double lead_time,
                       std::optional<std::vector<double>> event_times)
    : counts_(std::move(counts)), mass_(mass), lead_time_(lead_time), event_times_(std::move(event_times)) {
  if (counts_.empty()) throw DomainError("counts", "trajectory needs at least the 0-hour count");
  if (lead_time_ < 0 || std::isnan(lead_time_)) throw DomainError("lead_time", "must be >= 0");
  for (std::size_t tau = 0; tau < counts_.size(); ++tau) {
    if (counts_[tau] < 0 || counts_[tau] > mass_) throw DomainError("counts", "count outside [0, M]");
    if (tau > 0 && counts_[tau] < counts_[tau - 1]) throw DomainError("counts", "must be nondecreasing");
  }
}

double FitResult::estimate(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return estimates[i];
  }
  throw DomainError(std::string(name), "not estimated by " + std::string(to_string(model)));
}

}  // namespace ssb
