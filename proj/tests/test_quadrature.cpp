#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "ssb/errors.hpp"
#include "ssb/quadrature.hpp"

using namespace ssb;

namespace {

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }

}  // namespace

TEST_CASE("adaptive Gauss-Kronrod on smooth and kinked integrands") {
  const std::vector<double> pts{0.0, std::numbers::pi};
  const auto r = integrate_adaptive([](double x) { return std::sin(x); }, pts, {});
  CHECK(r.converged);
  CHECK(r.value == doctest::Approx(2.0).epsilon(1e-13));
  const std::vector<double> kink{-1.0, 1.0};
  const auto a = integrate_adaptive([](double x) { return std::abs(x - 0.3); }, kink, {});
  CHECK(a.value == doctest::Approx(0.5 * 1.3 * 1.3 + 0.5 * 0.7 * 0.7).epsilon(1e-10));
}

TEST_CASE("Weibull density integrates to one") {
  for (double gamma : {0.5, 1.0, 1.5, 2.0}) {
    CAPTURE(gamma);
    const auto r = integrate_weibull([](double) { return 1.0; }, 4.0, gamma, std::numeric_limits<double>::infinity());
    CHECK(std::abs(r.value - 1.0) < 1e-10);
  }
  const auto r = integrate_weibull([](double) { return 1.0; }, 4.0, 1.5, 400.0);
  CHECK(std::abs(r.value - 1.0) < 1e-10);
}

TEST_CASE("exponential CDF") {
  const auto r = integrate_weibull([](double) { return 1.0; }, 4.0, 1.0, 4.0);
  CHECK(r.value == doctest::Approx(1.0 - std::exp(-1.0)).epsilon(1e-12));
  for (double gamma : {0.3, 0.7, 2.5, 6.0}) {
    const auto w = integrate_weibull([](double) { return 1.0; }, 2.0, gamma, 3.0);
    CHECK(w.value == doctest::Approx(-std::expm1(-std::pow(1.5, gamma))).epsilon(1e-11));
  }
}

TEST_CASE("truncated first moment against Monte Carlo") {
  const double lambda = 1.0, gamma = 0.5, t = 50.0;
  const auto r = integrate_weibull([](double u) { return u; }, lambda, gamma, t);
  std::mt19937_64 eng(7);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const int n = 10'000'000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double u = lambda * std::pow(-std::log1p(-unif(eng)), 1.0 / gamma);
    const double x = u < t ? u : 0.0;
    sum += x;
    sum2 += x * x;
  }
  const double mean = sum / n, se = std::sqrt((sum2 / n - mean * mean) / n);
  CHECK(std::abs(r.value - mean) < 3 * se);
}

TEST_CASE("linearity, monotonicity and determinism") {
  auto g1 = [](double u) { return std::exp(-u); };
  auto g2 = [](double u) { return 1.0 / (1.0 + u * u); };
  const QuadConfig cfg;
  const double a = 2.5, b = -0.75;
  const double lhs = integrate_weibull([&](double u) { return a * g1(u) + b * g2(u); }, 4, 1.5, 6, cfg).value;
  const double rhs = a * integrate_weibull(g1, 4, 1.5, 6, cfg).value + b * integrate_weibull(g2, 4, 1.5, 6, cfg).value;
  CHECK(std::abs(lhs - rhs) <= 10 * cfg.rel_tol * std::max(1.0, std::abs(lhs)));

  double prev = 0.0;
  for (double t = 0.5; t <= 30; t += 0.5) {
    const double v = integrate_weibull(g2, 4, 0.7, t).value;
    CHECK(v >= prev);
    prev = v;
  }
  CHECK(integrate_weibull(g2, 4, 0.7, 3.3).value == integrate_weibull(g2, 4, 0.7, 3.3).value);
}

TEST_CASE("log-space integral agrees with the direct one") {
  for (double gamma : {0.4, 1.0, 1.5, 3.0}) {
    for (double t : {0.5, 2.0, 6.0, 40.0}) {
      auto g = [](double u) { return logistic(-3 + 0.15 * u); };
      const double direct = integrate_weibull(g, 4, gamma, t).value;
      const auto lg = integrate_weibull_log([&](double u) { return std::log(g(u)); }, 4, gamma, t);
      CAPTURE(gamma);
      CAPTURE(t);
      CHECK(std::exp(lg.log_value) == doctest::Approx(direct).epsilon(1e-10));
    }
  }
  // A probability far below double range keeps its logarithm.
  const auto tiny = integrate_weibull_log([](double) { return -2000.0; }, 4, 1.5, 6);
  const double expected = -2000.0 + std::log(-std::expm1(-std::pow(1.5, 1.5)));
  CHECK(tiny.log_value == doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("Gauss-Hermite rule") {
  for (int n : {2, 5, 32, 64}) {
    const auto& r = gauss_hermite_rule(n);
    REQUIRE(r.nodes.size() == static_cast<std::size_t>(n));
    double w = 0.0, m2 = 0.0, m4 = 0.0;
    for (int i = 0; i < n; ++i) {
      w += r.weights[i];
      m2 += r.weights[i] * r.nodes[i] * r.nodes[i];
      m4 += r.weights[i] * std::pow(r.nodes[i], 4);
      CHECK(r.nodes[i] == doctest::Approx(-r.nodes[n - 1 - i]).epsilon(1e-12));
    }
    const double sqrt_pi = std::sqrt(std::numbers::pi);
    CHECK(w == doctest::Approx(sqrt_pi).epsilon(1e-13));
    CHECK(m2 == doctest::Approx(sqrt_pi / 2).epsilon(1e-12));
    if (n >= 3) CHECK(m4 == doctest::Approx(3 * sqrt_pi / 4).epsilon(1e-12));
  }
  CHECK_THROWS_AS(gauss_hermite_rule(1), DomainError);
}

TEST_CASE("bivariate normal expectations") {
  const Eigen::Vector2d zero(0, 0);
  Eigen::Matrix2d cov;
  cov << 1, 0.5, 0.5, 1;
  CHECK(integrate_gh2([](double, double) { return 1.0; }, zero, cov) == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(integrate_gh2([](double a, double b) { return a * b; }, zero, cov) == doctest::Approx(0.5).epsilon(1e-12));
  const Eigen::Vector2d mu(1.0, -2.0);
  Eigen::Matrix2d cov2;
  cov2 << 2.0, -0.3, -0.3, 0.5;
  CHECK(integrate_gh2([](double a, double) { return a * a; }, mu, cov2) == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(integrate_gh2([](double, double b) { return b; }, mu, cov2) == doctest::Approx(-2.0).epsilon(1e-12));

  Eigen::Matrix2d bad;
  bad << 1, 2, 2, 1;
  CHECK_THROWS_AS(integrate_gh2([](double, double) { return 1.0; }, zero, bad), DomainError);
}

TEST_CASE("binomial random-effect integrand against Monte Carlo") {
  const double mu1 = -3.5563, mu2 = 0.2438, s1 = 0.997, s2 = 0.0648, rho = 0.6176;
  const double t = 6.0;
  const int mass = 10, k = 3;
  auto f = [&](double a, double b) {
    const double p = logistic(a + b * t);
    return std::pow(p, k) * std::pow(1 - p, mass - k);
  };
  const Eigen::Vector2d mean(mu1, mu2);
  Eigen::Matrix2d cov;
  cov << s1 * s1, rho * s1 * s2, rho * s1 * s2, s2 * s2;
  const double gh = integrate_gh2(f, mean, cov);

  std::mt19937_64 eng(11);
  std::normal_distribution<double> z;
  const int n = 1'000'000;
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double z1 = z(eng), z2 = z(eng);
    const double v = f(mu1 + s1 * z1, mu2 + s2 * (rho * z1 + std::sqrt(1 - rho * rho) * z2));
    sum += v;
    sum2 += v * v;
  }
  const double m = sum / n, se = std::sqrt((sum2 / n - m * m) / n);
  CHECK(std::abs(gh - m) < 3 * se);

  // Adaptive placement gives the same answer as plain nodes here.
  Eigen::Matrix2d proposal = 0.5 * cov;
  const double lg = integrate_gh2_log([&](double a, double b) { return std::log(f(a, b)); }, mean, cov,
                                      mean + Eigen::Vector2d(0.3, 0.01), proposal);
  CHECK(std::exp(lg) == doctest::Approx(gh).epsilon(1e-6));
}

TEST_CASE("configuration validation") {
  QuadConfig c;
  c.rel_tol = 0;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = {};
  c.gh_nodes = 1;
  CHECK_THROWS_AS(c.validate(), DomainError);
  CHECK_NOTHROW(QuadConfig{}.validate());
}
