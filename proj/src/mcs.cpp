#include <algorithm>
#include <cmath>
#include <limits>

#include "rescav/error.hpp"
#include "rescav/rng.hpp"
#include "rescav/scoring.hpp"

namespace rescav {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double studentize(double num, double var) {
  if (var > 0.0) return num / std::sqrt(var);
  if (num == 0.0) return 0.0;
  return num > 0.0 ? kInf : -kInf;
}

}  // namespace

McsResult model_confidence_set(std::span<const std::string> models, std::span<const std::vector<double>> losses,
                               const McsConfig& cfg) {
  const std::size_t k = models.size();
  if (k < 2 || losses.size() != k) throw InvalidArgument("mcs needs at least two models with loss series");
  const std::size_t m = losses.front().size();
  if (m < 2) throw InvalidArgument("mcs needs at least two loss observations");
  for (const auto& l : losses) {
    if (l.size() != m) throw InvalidArgument("mcs: loss series have different lengths");
  }
  if (!(cfg.level > 0.0 && cfg.level < 1.0)) throw InvalidArgument("mcs: level must lie in (0, 1)");
  if (cfg.bootstrap < 1) throw InvalidArgument("mcs: bootstrap count must be positive");

  const std::size_t block =
      cfg.block_length > 0 ? cfg.block_length
                           : static_cast<std::size_t>(std::ceil(std::cbrt(static_cast<double>(m)) - 1e-12));
  const std::size_t B = cfg.bootstrap;

  // Sample means and circular moving-block bootstrap means; the same resampled
  // indices serve every elimination step.
  std::vector<double> mean(k, 0.0);
  for (std::size_t i = 0; i < k; ++i) {
    for (double v : losses[i]) mean[i] += v;
    mean[i] /= static_cast<double>(m);
  }
  std::vector<double> boot(B * k, 0.0);  // boot[b * k + i]
  Rng rng(cfg.seed);
  std::vector<std::size_t> idx(m);
  for (std::size_t b = 0; b < B; ++b) {
    for (std::size_t filled = 0; filled < m;) {
      const std::size_t start = uniform_index(rng, m);
      for (std::size_t j = 0; j < block && filled < m; ++j) idx[filled++] = (start + j) % m;
    }
    for (std::size_t i = 0; i < k; ++i) {
      double s = 0.0;
      for (std::size_t t : idx) s += losses[i][t];
      boot[b * k + i] = s / static_cast<double>(m);
    }
  }

  McsResult res;
  res.method = cfg.method;
  res.level = cfg.level;
  std::vector<std::size_t> alive(k);
  for (std::size_t i = 0; i < k; ++i) alive[i] = i;
  double running_p = 0.0;

  while (alive.size() > 1) {
    const std::size_t n = alive.size();
    double stat = 0.0;
    std::vector<double> stat_boot(B, 0.0);
    std::size_t worst = 0;
    if (cfg.method == McsMethod::R) {
      // t_ij = (L_i - L_j) / se; T = max |t_ij|; eliminate argmax_i max_j t_ij.
      std::vector<double> var(n * n, 0.0);
      for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t c = a + 1; c < n; ++c) {
          const double d = mean[alive[a]] - mean[alive[c]];
          double v = 0.0;
          for (std::size_t b = 0; b < B; ++b) {
            const double db = boot[b * k + alive[a]] - boot[b * k + alive[c]] - d;
            v += db * db;
          }
          var[a * n + c] = var[c * n + a] = v / static_cast<double>(B);
        }
      }
      double worst_t = -kInf;
      for (std::size_t a = 0; a < n; ++a) {
        double row_max = -kInf;
        for (std::size_t c = 0; c < n; ++c) {
          if (a == c) continue;
          const double t = studentize(mean[alive[a]] - mean[alive[c]], var[a * n + c]);
          row_max = std::max(row_max, t);
          stat = std::max(stat, std::fabs(t));
        }
        if (row_max > worst_t) {
          worst_t = row_max;
          worst = a;
        }
      }
      for (std::size_t b = 0; b < B; ++b) {
        double s = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
          for (std::size_t c = a + 1; c < n; ++c) {
            const double d = mean[alive[a]] - mean[alive[c]];
            const double db = boot[b * k + alive[a]] - boot[b * k + alive[c]] - d;
            s = std::max(s, std::fabs(studentize(db, var[a * n + c])));
          }
        }
        stat_boot[b] = s;
      }
    } else {
      // T = sum_{i<j} t_ij^2; eliminate the model with the largest t_i.
      std::vector<double> var(n * n, 0.0);
      for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t c = a + 1; c < n; ++c) {
          const double d = mean[alive[a]] - mean[alive[c]];
          double v = 0.0;
          for (std::size_t b = 0; b < B; ++b) {
            const double db = boot[b * k + alive[a]] - boot[b * k + alive[c]] - d;
            v += db * db;
          }
          var[a * n + c] = v / static_cast<double>(B);
          const double t = studentize(d, var[a * n + c]);
          stat += t * t;
        }
      }
      auto avg = [&](const double* row_means) {
        double s = 0.0;
        for (std::size_t a = 0; a < n; ++a) s += row_means[a];
        return s / static_cast<double>(n);
      };
      std::vector<double> cur(n);
      for (std::size_t a = 0; a < n; ++a) cur[a] = mean[alive[a]];
      const double cur_avg = avg(cur.data());
      std::vector<double> vi(n, 0.0);
      std::vector<double> bm(n);
      for (std::size_t b = 0; b < B; ++b) {
        for (std::size_t a = 0; a < n; ++a) bm[a] = boot[b * k + alive[a]];
        const double bavg = avg(bm.data());
        for (std::size_t a = 0; a < n; ++a) {
          const double di = (bm[a] - bavg) - (cur[a] - cur_avg);
          vi[a] += di * di;
        }
      }
      double worst_t = -kInf;
      for (std::size_t a = 0; a < n; ++a) {
        const double t = studentize(cur[a] - cur_avg, vi[a] / static_cast<double>(B));
        if (t > worst_t) {
          worst_t = t;
          worst = a;
        }
      }
      for (std::size_t b = 0; b < B; ++b) {
        double s = 0.0;
        for (std::size_t a = 0; a < n; ++a) {
          for (std::size_t c = a + 1; c < n; ++c) {
            const double d = mean[alive[a]] - mean[alive[c]];
            const double db = boot[b * k + alive[a]] - boot[b * k + alive[c]] - d;
            const double t = studentize(db, var[a * n + c]);
            s += t * t;
          }
        }
        stat_boot[b] = s;
      }
    }
    std::size_t exceed = 0;
    for (double s : stat_boot) exceed += s >= stat ? 1 : 0;
    const double p = static_cast<double>(exceed) / static_cast<double>(B);
    running_p = std::max(running_p, p);
    res.sequence.push_back({models[alive[worst]], running_p});
    alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(worst));
  }
  res.sequence.push_back({models[alive.front()], 1.0});

  const double threshold = 1.0 - cfg.level;
  for (const auto& e : res.sequence) {
    if (e.pvalue >= threshold) {
      res.survivors.push_back(e.model);
    } else {
      res.eliminations.push_back(e);
    }
  }
  return res;
}

}  // namespace rescav
