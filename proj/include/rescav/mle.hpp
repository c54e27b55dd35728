#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rescav/likelihood.hpp"
#include "rescav/model.hpp"

namespace rescav {

// Uniform sampling bounds for the non-quantile parameters.
struct CandidateBox {
  std::vector<std::pair<Param, std::pair<double, double>>> bounds;

  static CandidateBox defaults(Family family);
};

struct MleConfig {
  std::size_t n_candidates = 0;       // 0: 10000 for EXP families, 50000 for AR
  std::size_t beta_candidates = 2000;  // step-1 random starts for the quantile equation
  std::size_t max_evals = 20000;       // local optimizer budget
  std::size_t restarts = 2;
  std::uint64_t seed = 0;
  std::size_t threads = 1;
  // Evaluated alongside the random candidates (e.g. the previous window's fit).
  std::vector<ParamVector> extra_candidates;
  std::optional<InitPolicy> init;  // default: InitPolicy::empirical on the data

  static std::size_t default_candidates(Family family) { return has_ar_es(family) ? 50000 : 10000; }
};

struct MleResult {
  ParamVector params;
  LogLik loglik;
  double best_candidate_loglik = kMinusInf;
  std::size_t evaluations = 0;
  bool converged = false;
  std::vector<std::string> flags;  // "optimizer-not-converged"
};

// Throws NumericalError("no feasible candidate") when every candidate has a
// minus-infinity likelihood.
MleResult fit_ml(const ModelSpec& spec, SeriesView data, const MleConfig& cfg);

// Step 1 alone: (beta0, beta1, beta2) minimizing the check loss of the quantile
// recursion. Returned as a ParamVector with the other entries zero.
ParamVector fit_quantile_equation(const ModelSpec& spec, SeriesView data, const InitPolicy& init,
                                  std::size_t n_candidates, std::uint64_t seed, std::size_t max_evals);

}  // namespace rescav
