// Acceptance run: one PASS/FAIL line per criterion. Criteria can be selected
// by number on the command line (default: all). The exit status is 0 unless
// a criterion could not be evaluated at all.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ssb/analysis.hpp"
#include "ssb/estimation.hpp"
#include "ssb/io.hpp"
#include "ssb/likelihood.hpp"
#include "ssb/quadrature.hpp"
#include "ssb/simulation.hpp"

using namespace ssb;

namespace {

const SsbParams kTheta0(-3, 0.15, 4, 1.5);

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

bool within(double x, double lo, double hi) { return x >= lo && x <= hi; }

const SummaryStat& stat(const ReplicateStudy& s, const std::string& name) {
  return *std::find_if(s.summary.begin(), s.summary.end(), [&](const SummaryStat& x) { return x.name == name; });
}

Outcome recovery() {
  SimConfig sim;
  const auto study = replicate_study(kTheta0, sim, 100, {}, 0);
  const auto &a = stat(study, "alpha"), &b = stat(study, "beta"), &l = stat(study, "lambda"),
             &g = stat(study, "gamma");
  const bool ok = within(a.mean, -3.1, -2.9) && within(a.sd, 0.06, 0.14) && within(b.mean, 0.145, 0.155) &&
                  within(b.sd, 0.003, 0.008) && within(l.mean, 3.5, 5.5) && within(g.mean, 1.2, 2.2);
  return {ok, fmt("alpha %.4f (sd %.4f), beta %.4f (sd %.4f), lambda %.3f, gamma %.3f, failed %d", a.mean, a.sd,
                  b.mean, b.sd, l.mean, g.mean, study.n_failed)};
}

Outcome identities() {
  const std::vector<SsbParams> thetas{kTheta0, SsbParams(-1, 0.5, 2, 0.7), SsbParams(-5, 0.05, 10, 2.5),
                                      SsbParams(0.5, 1.2, 1, 1.0)};
  double worst = 0.0;
  int n = 0;
  for (const auto& p : thetas) {
    for (double t : {0.5, 2.0, 6.0, 20.0, 60.0}) {
      const double delta = delta_factor(p, 300, t);
      const double p0 = std::exp(ssb_count_loglik(p, 300, t, 0));
      const double cdf = lead_time_cdf(p.lambda(), p.gamma(), t);
      worst = std::max({worst, std::abs(cdf - (1 - p0) - delta),
                        std::abs(p0 - lead_time_survival(p.lambda(), p.gamma(), t) - delta)});
      ++n;
    }
  }
  return {worst < 1e-8, fmt("%d points, max residual %.2e", n, worst)};
}

Outcome oracle() {
  double worst_z = 0.0, worst_sum = 0.0;
  int components = 0;
  std::uint64_t seed = 1000;
  for (int mass : {1, 5, 10}) {
    for (double t : {2.0, 6.0, 20.0}) {
      const auto pmf = marginal_count_pmf(kTheta0, mass, t);
      const auto mc = mc_count_pmf(kTheta0, mass, t, 1'000'000, ++seed);
      double sum = 0.0;
      for (int k = 0; k <= mass; ++k) {
        const double p = pmf.probs[static_cast<std::size_t>(k)];
        sum += p;
        const double se = std::sqrt(p * (1 - p) / 1e6);
        const double diff = std::abs(mc.pmf.probs[static_cast<std::size_t>(k)] - p);
        worst_z = std::max(worst_z, se > 0 ? diff / se : (diff > 0 ? INFINITY : 0.0));
        ++components;
      }
      worst_sum = std::max(worst_sum, std::abs(sum - 1));
    }
  }
  return {worst_z < 3 && worst_sum < 1e-8,
          fmt("%d components, max |MC - pmf| = %.2f SE, max |sum - 1| = %.2e", components, worst_z, worst_sum)};
}

Outcome flat_slope() {
  double worst = 0.0;
  for (double alpha : {-3.0, -1.2, 0.5}) {
    const SsbParams p(alpha, 0.0, 4, 1.5);
    const double q = 1 / (1 + std::exp(-alpha));
    for (double t : {2.0, 6.0, 20.0}) {
      const double started = lead_time_cdf(4, 1.5, t);
      for (int k = 0; k <= 300; ++k) {
        const double binom = std::exp(log_choose(300, k) + k * std::log(q) + (300 - k) * std::log1p(-q));
        const double expected = binom * started + (k == 0 ? 1 - started : 0.0);
        worst = std::max(worst, std::abs(std::exp(ssb_count_loglik(p, 300, t, k)) - expected));
      }
    }
  }
  return {worst < 1e-9, fmt("max |pmf - closed form| = %.2e", worst)};
}

double bic_of(const std::vector<BicRow>& rows, ModelKind m) {
  for (const auto& r : rows) {
    if (r.model == m) return r.delta;
  }
  return NAN;
}

struct CompareRun {
  ProtocolResult run;
  DynamicsReport report;
};

const CompareRun& compare_run() {
  static const CompareRun cached = [] {
    SimConfig sim;
    auto run = run_protocol(kTheta0, sim);
    const std::vector<FitResult> fits{run.lrm_fit, run.ssb_fit, run.re_fit};
    auto report = dynamics_report(run.ssb_ensemble, run.re_ensemble, run.dataset, fits);
    return CompareRun{std::move(run), std::move(report)};
  }();
  return cached;
}

Outcome separation() {
  const auto& c = compare_run();
  const double ssb = bic_of(c.report.bic, ModelKind::Ssb), re = bic_of(c.report.bic, ModelKind::LrmRe);
  return {c.report.log_lr > 20 && ssb < re,
          fmt("log LR %.2f; delta BIC SSB %.2f (p=%d) vs RE %.2f (p=%d)", c.report.log_lr, ssb, c.run.ssb_fit.n_params,
              re, c.run.re_fit.n_params)};
}

Outcome pca() {
  const auto& r = compare_run().report;
  const double ssb = r.spectrum_ssb.cum_frac[0], re = r.spectrum_re.cum_frac[0];
  return {re < 0.5 && ssb - re >= 0.2 && r.re_components_to_ssb_first >= 3,
          fmt("first-component fraction SSB %.3f, RE %.3f; RE needs %d components", ssb, re,
              r.re_components_to_ssb_first)};
}

Outcome cross_section_zero() {
  const auto& ens = compare_run().run.ssb_ensemble;
  const auto rows = cross_section(ens, 4);
  const double zero = !rows.empty() && rows.front().count == 0 ? rows.front().fraction : 0.0;
  return {within(zero, 0.45, 0.75), fmt("zero-count fraction at hour 4 = %.2f over %zu systems", zero, ens.size())};
}

Outcome real_data() {
  const auto data = read_dataset_csv(std::filesystem::path(SSB_DATA_DIR) / "table1_sfeltiae_gmellonella.csv", 300);
  EstimationConfig cfg;
  cfg.compute_info = false;
  std::vector<FitResult> fits;
  for (auto m : {ModelKind::Lrm, ModelKind::LrmPlus, ModelKind::LrmRe, ModelKind::Ssb, ModelKind::SsbPlus}) {
    fits.push_back(fit_model(data, m, cfg));
  }
  auto rows = bic_delta(fits, data.n_obs());
  std::sort(rows.begin(), rows.end(), [](const BicRow& a, const BicRow& b) { return a.delta < b.delta; });
  std::string order;
  for (const auto& r : rows) order += fmt("%s %.2f; ", std::string(to_string(r.model)).c_str(), r.delta);
  const bool ok = rows[0].model == ModelKind::SsbPlus && rows[1].model == ModelKind::Ssb;
  return {ok, "N = " + std::to_string(data.n_obs()) + ", ascending delta BIC: " + order};
}

Outcome numerics() {
  double norm = 0.0;
  for (double g : {0.5, 1.0, 1.5, 2.0}) {
    norm = std::max(norm, std::abs(integrate_weibull([](double) { return 1.0; }, 4, g, INFINITY).value - 1));
  }

  // Jacobi against bisection on the characteristic polynomial.
  Eigen::Matrix3d a;
  a << 2, -1, 0.5, -1, 3, 0.25, 0.5, 0.25, 1;
  auto charpoly = [&](double x) { return (a - x * Eigen::Matrix3d::Identity()).determinant(); };
  std::vector<double> roots;
  const int n = 30000;
  for (int i = 0; i < n; ++i) {
    double lo = -10 + 20.0 * i / n, hi = -10 + 20.0 * (i + 1) / n;
    if ((charpoly(lo) > 0) == (charpoly(hi) > 0)) continue;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      ((charpoly(mid) > 0) == (charpoly(lo) > 0) ? lo : hi) = mid;
    }
    roots.push_back(0.5 * (lo + hi));
  }
  auto ev = jacobi_eigenvalues(a);
  std::vector<double> eig(ev.data(), ev.data() + ev.size());
  std::sort(eig.begin(), eig.end());
  double jacobi = roots.size() == 3 ? 0.0 : INFINITY;
  for (std::size_t i = 0; i < std::min<std::size_t>(3, roots.size()); ++i) jacobi = std::max(jacobi, std::abs(eig[i] - roots[i]));

  // Observed information of -x'Ax/2 near the origin.
  const Objective quad = [&](const std::vector<double>& x) {
    const Eigen::Vector3d v(x[0], x[1], x[2]);
    return -0.5 * v.dot(a * v);
  };
  const auto info = observed_information(quad, {0.01, -0.02, 0.03});
  const double info_err = ((info - a).cwiseAbs().array() / a.cwiseAbs().array().max(1e-300)).maxCoeff();

  // Central-difference gradient of the fixed-effect likelihood.
  const CountDataset d({2, 6, 12}, {{3, 8}, {40, 55}, {200}}, 300);
  double grad = 0.0;
  for (auto [al, be] : {std::pair{-2.0, 0.1}, std::pair{-4.0, 0.5}}) {
    double ga = 0, gb = 0;
    for (std::size_t i = 0; i < d.n_times(); ++i) {
      const double t = d.schedule()[i];
      for (int k : d.counts_at(i)) {
        const double r = k - 300 / (1 + std::exp(-(al + be * t)));
        ga += r;
        gb += r * t;
      }
    }
    const double h = 1e-6;
    const double fa = (lrm_loglik(al + h, be, 1, d) - lrm_loglik(al - h, be, 1, d)) / (2 * h);
    const double fb = (lrm_loglik(al, be + h, 1, d) - lrm_loglik(al, be - h, 1, d)) / (2 * h);
    grad = std::max({grad, std::abs(fa - ga) / std::abs(ga), std::abs(fb - gb) / std::abs(gb)});
  }
  return {norm < 1e-10 && jacobi < 1e-9 && info_err < 1e-6 && grad < 1e-5,
          fmt("normalisation %.1e, Jacobi %.1e, information %.1e, gradient %.1e", norm, jacobi, info_err, grad)};
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"parameter recovery", recovery},      {"exact identities", identities},
      {"Monte Carlo oracle", oracle},        {"flat-slope closed form", flat_slope},
      {"model separation", separation},      {"PCA contrast", pca},
      {"hour-4 cross-section", cross_section_zero}, {"real-data BIC ordering", real_data},
      {"numerical suite", numerics},
  };
  std::set<int> selected;
  for (int i = 1; i < argc; ++i) selected.insert(std::atoi(argv[i]));

  int passed = 0, run = 0, errors = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int id = static_cast<int>(i) + 1;
    if (!selected.empty() && !selected.count(id)) continue;
    ++run;
    const auto start = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("error: ") + e.what()};
      ++errors;
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    passed += o.pass;
    std::printf("%s criterion %d (%s): %s [%.0f s]\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", passed, run);
  return errors == 0 ? 0 : 1;
}
