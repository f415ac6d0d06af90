#include "ssb/optimize.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <limits>
#include <mutex>
#include <numeric>

#include "ssb/errors.hpp"

namespace ssb {

namespace {

double finite_or_inf(double v) { return std::isnan(v) ? std::numeric_limits<double>::infinity() : v; }

// All points of a box, lexicographic with the first axis slowest.
std::vector<std::vector<double>> enumerate_grid(const std::vector<GridAxis>& axes) {
  std::vector<std::vector<double>> points(1);
  for (const auto& axis : axes) {
    std::vector<std::vector<double>> next;
    next.reserve(points.size() * static_cast<std::size_t>(axis.n_points));
    for (const auto& prefix : points) {
      for (int i = 0; i < axis.n_points; ++i) {
        auto p = prefix;
        p.push_back(axis.value(i));
        next.push_back(std::move(p));
      }
    }
    points = std::move(next);
  }
  return points;
}

}  // namespace

double GridAxis::value(int i) const {
  if (n_points == 1) return lo;
  if (i == n_points - 1) return hi;
  return lo + (hi - lo) * static_cast<double>(i) / (n_points - 1);
}

void GridSpec::validate() const {
  if (axes.empty()) throw DomainError("grid", "needs at least one axis");
  for (const auto& a : axes) {
    if (a.n_points == 1) {
      if (a.lo != a.hi) throw DomainError("grid", "a single-point axis needs lo == hi");
    } else if (a.n_points < 3 || !(a.lo < a.hi)) {
      throw DomainError("grid", "axes need lo < hi and n_points >= 3");
    }
  }
  if (refine_levels < 0) throw DomainError("grid", "refine_levels must be >= 0");
  if (!(shrink > 0 && shrink < 1)) throw DomainError("grid", "shrink must lie in (0, 1)");
}

void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::size_t>(threads, n));
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> workers;
  for (unsigned w = 0; w < threads; ++w) {
    workers.emplace_back([&] {
      for (std::size_t i = next++; i < n; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  workers.clear();
  if (failure) std::rethrow_exception(failure);
}

GridResult grid_maximize(const Objective& f, const GridSpec& spec,
                         std::optional<std::pair<std::vector<double>, double>> incumbent, unsigned threads) {
  spec.validate();
  GridResult best;
  best.value = -std::numeric_limits<double>::infinity();
  bool have_best = false;
  if (incumbent) {
    best.x = incumbent->first;
    best.value = incumbent->second;
    have_best = true;
  }

  std::vector<GridAxis> box = spec.axes;
  for (int level = 0; level <= spec.refine_levels; ++level) {
    if (level > 0) {
      for (std::size_t d = 0; d < box.size(); ++d) {
        const auto& outer = spec.axes[d];
        if (outer.fixed()) continue;
        const double width = (box[d].hi - box[d].lo) * spec.shrink;
        double lo = best.x[d] - 0.5 * width, hi = best.x[d] + 0.5 * width;
        if (lo < outer.lo) {
          hi += outer.lo - lo;
          lo = outer.lo;
        }
        if (hi > outer.hi) {
          lo -= hi - outer.hi;
          hi = outer.hi;
        }
        box[d].lo = std::max(lo, outer.lo);
        box[d].hi = hi;
      }
    }
    const auto points = enumerate_grid(box);
    std::vector<double> values(points.size());
    parallel_for(points.size(), threads, [&](std::size_t i) { values[i] = f(points[i]); });
    best.evaluations += static_cast<int>(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (std::isnan(values[i])) continue;
      if (!have_best || values[i] > best.value) {
        best.x = points[i];
        best.value = values[i];
        have_best = true;
      }
    }
    if (!have_best) throw DomainError("grid", "objective is NaN on every grid point");
  }

  for (std::size_t d = 0; d < spec.axes.size(); ++d) {
    const auto& outer = spec.axes[d];
    if (!outer.fixed() && (best.x[d] <= outer.lo || best.x[d] >= outer.hi)) best.on_boundary = true;
  }
  return best;
}

NelderMeadResult nelder_mead(const Objective& f, std::vector<double> x0, const std::vector<double>& steps,
                             const NelderMeadOptions& opts) {
  const std::size_t n = x0.size();
  if (steps.size() != n) throw DomainError("steps", "one step per coordinate is required");
  std::vector<std::vector<double>> simplex(n + 1, x0);
  for (std::size_t i = 0; i < n; ++i) simplex[i + 1][i] += steps[i];
  std::vector<double> fx(n + 1);
  for (std::size_t i = 0; i <= n; ++i) fx[i] = finite_or_inf(f(simplex[i]));

  std::vector<std::size_t> order(n + 1);
  NelderMeadResult out;
  auto point = [&](const std::vector<double>& c, const std::vector<double>& w, double coef) {
    std::vector<double> p(n);
    for (std::size_t j = 0; j < n; ++j) p[j] = c[j] + coef * (w[j] - c[j]);
    return p;
  };

  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return fx[a] < fx[b]; });
    const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];

    double diameter = 0.0;
    for (std::size_t i = 0; i <= n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        diameter = std::max(diameter, std::abs(simplex[i][j] - simplex[best][j]));
      }
    }
    if (std::abs(fx[worst] - fx[best]) <= opts.f_tol * (1.0 + std::abs(fx[best])) && diameter <= opts.x_tol) {
      out.converged = true;
      break;
    }

    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == worst) continue;
      for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j] / static_cast<double>(n);
    }

    const auto reflected = point(centroid, simplex[worst], -1.0);
    const double f_reflected = finite_or_inf(f(reflected));
    if (f_reflected < fx[best]) {
      const auto expanded = point(centroid, simplex[worst], -2.0);
      const double f_expanded = finite_or_inf(f(expanded));
      if (f_expanded < f_reflected) {
        simplex[worst] = expanded;
        fx[worst] = f_expanded;
      } else {
        simplex[worst] = reflected;
        fx[worst] = f_reflected;
      }
      continue;
    }
    if (f_reflected < fx[second]) {
      simplex[worst] = reflected;
      fx[worst] = f_reflected;
      continue;
    }
    const bool outside = f_reflected < fx[worst];
    const auto contracted = outside ? point(centroid, simplex[worst], -0.5) : point(centroid, simplex[worst], 0.5);
    const double f_contracted = finite_or_inf(f(contracted));
    if (f_contracted < std::min(f_reflected, fx[worst])) {
      simplex[worst] = contracted;
      fx[worst] = f_contracted;
      continue;
    }
    // Shrink toward the best vertex.
    for (std::size_t i = 0; i <= n; ++i) {
      if (i == best) continue;
      simplex[i] = point(simplex[best], simplex[i], 0.5);
      fx[i] = finite_or_inf(f(simplex[i]));
    }
  }

  const auto best_it = std::min_element(fx.begin(), fx.end());
  out.x = simplex[static_cast<std::size_t>(best_it - fx.begin())];
  out.value = *best_it;
  out.iterations = iter;
  return out;
}

}  // namespace ssb
