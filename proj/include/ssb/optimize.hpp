#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <thread>
#include <vector>

namespace ssb {

using Objective = std::function<double(const std::vector<double>&)>;

struct GridAxis {
  double lo = 0.0;
  double hi = 0.0;
  int n_points = 3;  // 1 only for a fixed axis with lo == hi

  bool fixed() const noexcept { return n_points == 1; }
  double value(int i) const;
};

// Rectangular grid refined `refine_levels` times by re-gridding a box
// shrunk by `shrink` around the incumbent (clipped to the outer box).
struct GridSpec {
  std::vector<GridAxis> axes;
  int refine_levels = 3;
  double shrink = 0.2;

  void validate() const;  // throws DomainError
};

struct GridResult {
  std::vector<double> x;
  double value = 0.0;
  bool on_boundary = false;  // incumbent sits on the outer box after the last level
  int evaluations = 0;
};

// Maximises f over the grid. Points are scanned lexicographically (first axis
// slowest, ascending); ties keep the earliest point. An optional incumbent is
// kept unless a grid point is strictly better. Grid points may be evaluated
// on `threads` workers; the reduction order is fixed.
GridResult grid_maximize(const Objective& f, const GridSpec& spec,
                         std::optional<std::pair<std::vector<double>, double>> incumbent = std::nullopt,
                         unsigned threads = 1);

struct NelderMeadOptions {
  int max_iter = 2000;
  double f_tol = 1e-10;  // spread of simplex values
  double x_tol = 1e-9;   // simplex diameter
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  bool converged = false;
};

// Minimises f from x0 with an initial simplex x0 + step_i e_i. NaN values are
// treated as +inf.
NelderMeadResult nelder_mead(const Objective& f, std::vector<double> x0, const std::vector<double>& steps,
                             const NelderMeadOptions& opts = {});

// Runs fn(i) for i in [0, n) on up to `threads` workers (0 = hardware).
void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t)>& fn);

}  // namespace ssb
