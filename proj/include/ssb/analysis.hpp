#pragma once

#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "ssb/estimation.hpp"
#include "ssb/model.hpp"

namespace ssb {

// Pointwise mean of counts(tau), tau = 0..horizon. Throws GridMismatch.
std::vector<double> mean_curve(std::span<const Trajectory> trajectories);

struct FrequencyRow {
  int count;
  int n;
  double fraction;
};

// Distribution of counts(hour) across the ensemble, ascending by count.
std::vector<FrequencyRow> cross_section(std::span<const Trajectory> trajectories, int hour);

// Sample covariance (divisor n - 1) of (counts(1), ..., counts(horizon)).
Eigen::MatrixXd trajectory_covariance(std::span<const Trajectory> trajectories);

// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, stopping
// once the off-diagonal Frobenius norm drops below tol * |trace|. Unsorted.
Eigen::VectorXd jacobi_eigenvalues(const Eigen::MatrixXd& a, double tol = 1e-12, int max_sweeps = 100);

struct Spectrum {
  std::vector<double> eigenvalues;  // descending
  std::vector<double> cum_frac;     // last entry 1
};

// Throws NotSymmetric when |a_ij - a_ji| exceeds 1e-10 of the largest entry.
Spectrum pca_cumvar(const Eigen::MatrixXd& cov);

// Smallest number of leading components whose cumulative fraction reaches
// `level` (minus a 1e-12 slack).
int components_to_reach(const Spectrum& spectrum, double level);

struct CrossSectionPair {
  int hour;
  std::vector<FrequencyRow> ssb;
  std::vector<FrequencyRow> re;
};

struct DynamicsReport {
  std::vector<double> mean_ssb;
  std::vector<double> mean_re;
  std::vector<CrossSectionPair> cross_sections;
  Spectrum spectrum_ssb;
  Spectrum spectrum_re;
  int re_components_to_ssb_first = 0;
  double log_lr = 0.0;  // NaN unless both SSB and LRM_RE fits are supplied
  std::vector<BicRow> bic;  // empty without an LRM fit
  std::vector<FitResult> fits;
};

DynamicsReport dynamics_report(std::span<const Trajectory> ssb_ensemble, std::span<const Trajectory> re_ensemble,
                               const CountDataset& dataset, std::span<const FitResult> fits,
                               const std::vector<int>& hours = {4, 16, 30});

}  // namespace ssb
