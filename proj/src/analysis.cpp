#include "ssb/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>

#include "ssb/errors.hpp"

namespace ssb {

namespace {

int common_horizon(std::span<const Trajectory> trajectories) {
  if (trajectories.empty()) throw GridMismatch("ensemble is empty");
  const int horizon = trajectories.front().horizon();
  for (const auto& t : trajectories) {
    if (t.horizon() != horizon) throw GridMismatch("trajectories have different horizons");
  }
  return horizon;
}

}  // namespace

std::vector<double> mean_curve(std::span<const Trajectory> trajectories) {
  const int horizon = common_horizon(trajectories);
  std::vector<double> mean(static_cast<std::size_t>(horizon) + 1, 0.0);
  for (const auto& t : trajectories) {
    const auto c = t.counts();
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += c[i];
  }
  for (auto& m : mean) m /= static_cast<double>(trajectories.size());
  return mean;
}

std::vector<FrequencyRow> cross_section(std::span<const Trajectory> trajectories, int hour) {
  const int horizon = common_horizon(trajectories);
  if (hour < 0 || hour > horizon) throw GridMismatch("hour outside the trajectory grid");
  std::map<int, int> tally;
  for (const auto& t : trajectories) ++tally[t.count_at(hour)];
  std::vector<FrequencyRow> rows;
  for (const auto& [count, n] : tally) {
    rows.push_back({count, n, static_cast<double>(n) / static_cast<double>(trajectories.size())});
  }
  return rows;
}

Eigen::MatrixXd trajectory_covariance(std::span<const Trajectory> trajectories) {
  const int horizon = common_horizon(trajectories);
  const auto n = static_cast<Eigen::Index>(trajectories.size());
  if (n < 2) throw GridMismatch("covariance needs at least two trajectories");
  Eigen::MatrixXd x(n, horizon);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto c = trajectories[static_cast<std::size_t>(r)].counts();
    for (int h = 1; h <= horizon; ++h) x(r, h - 1) = c[static_cast<std::size_t>(h)];
  }
  const Eigen::RowVectorXd mean = x.colwise().mean();
  const Eigen::MatrixXd centred = x.rowwise() - mean;
  Eigen::MatrixXd cov = (centred.transpose() * centred) / static_cast<double>(n - 1);
  // Mirror the lower triangle so symmetry is exact.
  for (Eigen::Index i = 0; i < cov.rows(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) cov(j, i) = cov(i, j);
  }
  return cov;
}

Eigen::VectorXd jacobi_eigenvalues(const Eigen::MatrixXd& input, double tol, int max_sweeps) {
  Eigen::MatrixXd a = input;
  const Eigen::Index n = a.rows();
  const double scale = std::max(std::abs(a.trace()), std::numeric_limits<double>::min());
  auto off_norm = [&] {
    double s = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i + 1; j < n; ++j) s += 2.0 * a(i, j) * a(i, j);
    }
    return std::sqrt(s);
  };
  for (int sweep = 0; sweep < max_sweeps && off_norm() >= tol * scale; ++sweep) {
    for (Eigen::Index p = 0; p < n; ++p) {
      for (Eigen::Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Rotation angle that zeroes a(p, q).
        const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0), s = t * c;
        for (Eigen::Index k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (Eigen::Index k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        a(p, q) = a(q, p) = 0.0;
      }
    }
  }
  return a.diagonal();
}

Spectrum pca_cumvar(const Eigen::MatrixXd& cov) {
  if (cov.rows() != cov.cols() || cov.rows() == 0) throw NotSymmetric("covariance must be a non-empty square matrix");
  const double largest = std::max(cov.cwiseAbs().maxCoeff(), std::numeric_limits<double>::min());
  for (Eigen::Index i = 0; i < cov.rows(); ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      if (std::abs(cov(i, j) - cov(j, i)) > 1e-10 * largest) throw NotSymmetric("covariance is not symmetric");
    }
  }
  const Eigen::VectorXd ev = jacobi_eigenvalues(cov);
  Spectrum s;
  s.eigenvalues.assign(ev.data(), ev.data() + ev.size());
  std::sort(s.eigenvalues.begin(), s.eigenvalues.end(), std::greater<>());
  double total = 0.0;
  for (double v : s.eigenvalues) total += v;
  double partial = 0.0;
  for (double v : s.eigenvalues) {
    partial += v;
    s.cum_frac.push_back(total > 0 ? std::clamp(partial / total, 0.0, 1.0) : 1.0);
  }
  s.cum_frac.back() = 1.0;
  return s;
}

int components_to_reach(const Spectrum& spectrum, double level) {
  for (std::size_t i = 0; i < spectrum.cum_frac.size(); ++i) {
    if (spectrum.cum_frac[i] >= level - 1e-12) return static_cast<int>(i) + 1;
  }
  return static_cast<int>(spectrum.cum_frac.size());
}

DynamicsReport dynamics_report(std::span<const Trajectory> ssb_ensemble, std::span<const Trajectory> re_ensemble,
                               const CountDataset& dataset, std::span<const FitResult> fits,
                               const std::vector<int>& hours) {
  if (common_horizon(ssb_ensemble) != common_horizon(re_ensemble)) {
    throw GridMismatch("the two ensembles have different horizons");
  }
  DynamicsReport r;
  r.mean_ssb = mean_curve(ssb_ensemble);
  r.mean_re = mean_curve(re_ensemble);
  for (int h : hours) r.cross_sections.push_back({h, cross_section(ssb_ensemble, h), cross_section(re_ensemble, h)});
  r.spectrum_ssb = pca_cumvar(trajectory_covariance(ssb_ensemble));
  r.spectrum_re = pca_cumvar(trajectory_covariance(re_ensemble));
  r.re_components_to_ssb_first = components_to_reach(r.spectrum_re, r.spectrum_ssb.cum_frac.front());

  const FitResult* ssb = nullptr;
  const FitResult* re = nullptr;
  bool have_lrm = false;
  for (const auto& f : fits) {
    if (f.model == ModelKind::Ssb) ssb = &f;
    if (f.model == ModelKind::LrmRe) re = &f;
    have_lrm = have_lrm || f.model == ModelKind::Lrm;
  }
  r.log_lr = ssb && re ? ssb->loglik - re->loglik : std::numeric_limits<double>::quiet_NaN();
  if (have_lrm) r.bic = bic_delta(fits, dataset.n_obs());
  r.fits.assign(fits.begin(), fits.end());
  return r;
}

}  // namespace ssb
