#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "ssb/analysis.hpp"
#include "ssb/errors.hpp"
#include "ssb/simulation.hpp"

using namespace ssb;

namespace {

// Roots of det(A - x I) for a symmetric 3x3 matrix, by bisection between the
// Gershgorin bounds on each sign change of the characteristic polynomial.
std::vector<double> cubic_roots(const Eigen::Matrix3d& a) {
  auto p = [&](double x) { return (a - x * Eigen::Matrix3d::Identity()).determinant(); };
  double r = 0.0;
  for (int i = 0; i < 3; ++i) r = std::max(r, std::abs(a(i, i)) + a.row(i).cwiseAbs().sum());
  const int n = 20000;
  std::vector<double> roots;
  for (int i = 0; i < n; ++i) {
    double lo = -r + 2 * r * i / n, hi = -r + 2 * r * (i + 1) / n;
    if (p(lo) == 0.0) {
      roots.push_back(lo);
      continue;
    }
    if ((p(lo) > 0) == (p(hi) > 0)) continue;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      ((p(mid) > 0) == (p(lo) > 0) ? lo : hi) = mid;
    }
    roots.push_back(0.5 * (lo + hi));
  }
  std::sort(roots.begin(), roots.end());
  return roots;
}

std::vector<double> sorted(const Eigen::VectorXd& v) {
  std::vector<double> out(v.data(), v.data() + v.size());
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("Jacobi eigenvalues against characteristic-polynomial roots") {
  std::mt19937_64 eng(4);
  std::uniform_real_distribution<double> u(-2, 2);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::Matrix3d a;
    for (int i = 0; i < 3; ++i) {
      for (int j = i; j < 3; ++j) a(i, j) = a(j, i) = u(eng);
    }
    const auto roots = cubic_roots(a);
    REQUIRE(roots.size() == 3u);
    const auto ev = sorted(jacobi_eigenvalues(a));
    for (int i = 0; i < 3; ++i) CHECK(std::abs(ev[i] - roots[i]) < 1e-9);
    CHECK(std::accumulate(ev.begin(), ev.end(), 0.0) == doctest::Approx(a.trace()).epsilon(1e-12));
  }
}

TEST_CASE("Jacobi eigenvalues on larger matrices") {
  std::mt19937_64 eng(8);
  std::normal_distribution<double> z;
  Eigen::MatrixXd x(30, 12);
  for (int i = 0; i < x.rows(); ++i) {
    for (int j = 0; j < x.cols(); ++j) x(i, j) = z(eng);
  }
  const Eigen::MatrixXd a = x.transpose() * x;
  const auto ev = sorted(jacobi_eigenvalues(a));
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(a);
  for (int i = 0; i < 12; ++i) CHECK(ev[i] == doctest::Approx(ref.eigenvalues()(i)).epsilon(1e-10));

  // A symmetric permutation leaves the spectrum alone.
  Eigen::PermutationMatrix<Eigen::Dynamic> perm(12);
  perm.setIdentity();
  std::shuffle(perm.indices().data(), perm.indices().data() + 12, eng);
  const Eigen::MatrixXd b = perm * a * perm.transpose();
  const auto evb = sorted(jacobi_eigenvalues(b));
  for (int i = 0; i < 12; ++i) CHECK(evb[i] == doctest::Approx(ev[i]).epsilon(1e-10));
}

TEST_CASE("cumulative variance fractions") {
  const auto id = pca_cumvar(Eigen::MatrixXd::Identity(4, 4));
  CHECK(id.cum_frac[0] == doctest::Approx(0.25));
  CHECK(id.cum_frac[1] == doctest::Approx(0.5));
  CHECK(id.cum_frac[3] == 1.0);
  CHECK(components_to_reach(id, 0.5) == 2);

  Eigen::VectorXd v(3);
  v << 1, 2, 3;
  const auto rank1 = pca_cumvar(v * v.transpose());
  CHECK(rank1.eigenvalues[0] == doctest::Approx(14));
  CHECK(rank1.cum_frac[0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(components_to_reach(rank1, 0.99) == 1);

  const auto s = pca_cumvar((Eigen::MatrixXd(2, 2) << 3, 0, 0, 1).finished());
  CHECK(s.eigenvalues == std::vector<double>{3, 1});

  Eigen::MatrixXd bad(2, 2);
  bad << 1, 0.5, 0.4, 1;
  CHECK_THROWS_AS(pca_cumvar(bad), NotSymmetric);
}

TEST_CASE("trajectory covariance") {
  // Two trajectories differing by a constant shift over hours 1..3.
  const std::vector<Trajectory> pair{Trajectory({0, 1, 2, 3}, 10, 0), Trajectory({0, 3, 4, 5}, 10, 0)};
  const auto c = trajectory_covariance(pair);
  REQUIRE(c.rows() == 3);
  CHECK((c - Eigen::MatrixXd::Constant(3, 3, 2.0)).norm() < 1e-14);

  const std::vector<Trajectory> anti{Trajectory({0, 0, 4}, 10, 0), Trajectory({0, 2, 2}, 10, 0),
                                     Trajectory({0, 1, 3}, 10, 0)};
  const auto d = trajectory_covariance(anti);
  CHECK(d(0, 0) == doctest::Approx(1.0));
  CHECK(d(0, 1) == doctest::Approx(-1.0));
  CHECK(d(1, 0) == d(0, 1));
}

TEST_CASE("mean curves and cross sections") {
  const std::vector<Trajectory> ens{Trajectory({0, 2, 4}, 10, 0), Trajectory({0, 0, 6}, 10, 0),
                                    Trajectory({1, 1, 5}, 10, 0)};
  const auto m = mean_curve(ens);
  CHECK(m == std::vector<double>{1.0 / 3, 1.0, 5.0});

  // The mean of a sum of ensembles is the weighted sum of their means.
  const std::vector<Trajectory> two(ens.begin(), ens.begin() + 2);
  const std::vector<Trajectory> one(ens.begin() + 2, ens.end());
  const auto m2 = mean_curve(two), m1 = mean_curve(one);
  for (std::size_t i = 0; i < m.size(); ++i) CHECK(m[i] == doctest::Approx((2 * m2[i] + m1[i]) / 3));

  const auto cs = cross_section(ens, 1);
  REQUIRE(cs.size() == 3u);
  CHECK(cs[0].count == 0);
  CHECK(cs[0].n == 1);
  CHECK(cs[0].fraction == doctest::Approx(1.0 / 3));

  const std::vector<Trajectory> ragged{Trajectory({0, 1}, 10, 0), Trajectory({0, 1, 2}, 10, 0)};
  CHECK_THROWS_AS(mean_curve(ragged), GridMismatch);
}

TEST_CASE("SSB ensembles concentrate variance in one component") {
  SimConfig cfg;
  const auto ens = simulate_ensemble(SsbParams(-3, 0.15, 4, 1.5), cfg);
  const auto spec = pca_cumvar(trajectory_covariance(ens));
  CHECK(spec.cum_frac[0] > 0.5);
  CHECK(std::is_sorted(spec.eigenvalues.rbegin(), spec.eigenvalues.rend()));
}
