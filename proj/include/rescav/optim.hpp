#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace rescav {

struct NelderMeadConfig {
  std::size_t max_evals = 4000;
  double ftol = 1e-10;  // relative spread of simplex values
  double xtol = 1e-9;   // simplex diameter
  std::size_t restarts = 2;
};

struct NelderMeadResult {
  std::vector<double> x;
  double f = 0.0;
  std::size_t evals = 0;
  bool converged = false;
};

// Minimizes f from x0. f may return +inf for infeasible points; such vertices
// are never accepted over finite ones. `steps` sets the initial simplex edge
// per coordinate. After convergence the simplex is rebuilt around the best
// point up to `restarts` times, stopping early once a restart gains nothing.
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f, std::vector<double> x0,
                             std::span<const double> steps, const NelderMeadConfig& cfg = {});

}  // namespace rescav
