#include "rescav/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rescav/error.hpp"

namespace rescav {

namespace {

struct Simplex {
  std::vector<std::vector<double>> x;
  std::vector<double> f;
};

bool converged(const Simplex& s, const NelderMeadConfig& cfg) {
  const double fbest = s.f.front();
  const double fworst = s.f.back();
  if (!std::isfinite(fworst)) return false;
  const double spread = std::fabs(fworst - fbest);
  if (spread > cfg.ftol * (std::fabs(fbest) + 1e-12) && spread > 1e-14) return false;
  double diam = 0.0;
  for (std::size_t i = 1; i < s.x.size(); ++i) {
    for (std::size_t j = 0; j < s.x[i].size(); ++j) diam = std::max(diam, std::fabs(s.x[i][j] - s.x[0][j]));
  }
  return diam <= cfg.xtol * (1.0 + std::sqrt(std::inner_product(s.x[0].begin(), s.x[0].end(), s.x[0].begin(), 0.0)));
}

}  // namespace

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f, std::vector<double> x0,
                             std::span<const double> steps, const NelderMeadConfig& cfg) {
  const std::size_t d = x0.size();
  if (d == 0 || steps.size() != d) throw InvalidArgument("nelder_mead: steps must match the dimension");

  NelderMeadResult res;
  auto eval = [&](const std::vector<double>& x) {
    ++res.evals;
    const double v = f(x);
    return std::isnan(v) ? HUGE_VAL : v;
  };

  std::vector<double> best = std::move(x0);
  double fbest = eval(best);

  for (std::size_t round = 0; round <= cfg.restarts; ++round) {
    Simplex s;
    s.x.push_back(best);
    s.f.push_back(fbest);
    for (std::size_t i = 0; i < d; ++i) {
      auto v = best;
      v[i] += steps[i];
      s.x.push_back(v);
      s.f.push_back(eval(v));
    }

    std::vector<std::size_t> order(d + 1);
    std::vector<double> centroid(d), xr(d), xe(d), xc(d);
    bool done = false;
    while (res.evals < cfg.max_evals) {
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return s.f[a] < s.f[b]; });
      Simplex sorted;
      for (std::size_t i : order) {
        sorted.x.push_back(std::move(s.x[i]));
        sorted.f.push_back(s.f[i]);
      }
      s = std::move(sorted);
      if (converged(s, cfg)) {
        done = true;
        break;
      }

      std::fill(centroid.begin(), centroid.end(), 0.0);
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = 0; j < d; ++j) centroid[j] += s.x[i][j];
      }
      for (double& c : centroid) c /= static_cast<double>(d);

      const auto& worst = s.x[d];
      for (std::size_t j = 0; j < d; ++j) xr[j] = centroid[j] + (centroid[j] - worst[j]);
      const double fr = eval(xr);
      if (fr < s.f[0]) {
        for (std::size_t j = 0; j < d; ++j) xe[j] = centroid[j] + 2.0 * (centroid[j] - worst[j]);
        const double fe = eval(xe);
        if (fe < fr) {
          s.x[d] = xe;
          s.f[d] = fe;
        } else {
          s.x[d] = xr;
          s.f[d] = fr;
        }
        continue;
      }
      if (fr < s.f[d - 1]) {
        s.x[d] = xr;
        s.f[d] = fr;
        continue;
      }
      const bool outside = fr < s.f[d];
      for (std::size_t j = 0; j < d; ++j) {
        xc[j] = outside ? centroid[j] + 0.5 * (xr[j] - centroid[j]) : centroid[j] + 0.5 * (worst[j] - centroid[j]);
      }
      const double fc = eval(xc);
      if (fc < (outside ? fr : s.f[d])) {
        s.x[d] = xc;
        s.f[d] = fc;
        continue;
      }
      for (std::size_t i = 1; i <= d; ++i) {
        for (std::size_t j = 0; j < d; ++j) s.x[i][j] = s.x[0][j] + 0.5 * (s.x[i][j] - s.x[0][j]);
        s.f[i] = eval(s.x[i]);
      }
    }

    const auto it = std::min_element(s.f.begin(), s.f.end());
    const double fnew = *it;
    const bool gained = fnew < fbest - cfg.ftol * (std::fabs(fbest) + 1e-12);
    if (fnew <= fbest) {
      best = s.x[static_cast<std::size_t>(it - s.f.begin())];
      fbest = fnew;
    }
    res.converged = done;
    if (!done || (round > 0 && !gained)) break;
  }

  res.x = std::move(best);
  res.f = fbest;
  return res;
}

}  // namespace rescav
