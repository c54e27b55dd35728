#include <gtest/gtest.h>

#include <cmath>

#include "rescav/rng.hpp"
#include "rescav/error.hpp"
#include "rescav/forecasting.hpp"
#include "rescav/scoring.hpp"
#include "rescav/simulation.hpp"

using namespace rescav;

namespace {

std::vector<DailyRecord> sim_records(std::size_t n, std::uint64_t seed) {
  DgpSpec d;
  d.n = n;
  d.seed = seed;
  return simulate_dgp(d).records();
}

class ThrowingEstimator final : public Estimator {
 public:
  std::string name() const override { return "throws"; }
  Estimate fit(const ModelSpec&, SeriesView, std::uint64_t seed, const std::optional<ParamVector>&) const override {
    if (seed % 3 == 0) throw NumericalError("no feasible candidate");
    return Estimate{map_truth(DgpSpec{}, 0.01, Family::REESCAV_EXP), std::nullopt, {}};
  }
};

// Records the windows it is given.
class SpyEstimator final : public Estimator {
 public:
  explicit SpyEstimator(std::vector<double>* last) : last_(last) {}
  std::string name() const override { return "spy"; }
  Estimate fit(const ModelSpec&, SeriesView w, std::uint64_t, const std::optional<ParamVector>&) const override {
    last_->assign(w.returns.begin(), w.returns.end());
    return Estimate{map_truth(DgpSpec{}, 0.01, Family::REESCAV_EXP), std::nullopt, {}};
  }

 private:
  std::vector<double>* last_;
};

const ModelSpec kSpec{Family::REESCAV_EXP, 0.01};

}  // namespace

TEST(Rolling, SingleOrigin) {
  const auto data = sim_records(301, 1);
  const FixedEstimator stub(map_truth(DgpSpec{}, 0.01, kSpec.family));
  RollingConfig cfg;
  cfg.window = 300;
  const auto fc = rolling_forecast(kSpec, data, stub, cfg);
  ASSERT_EQ(fc.size(), 1u);
  EXPECT_EQ(fc[0].date, data[300].date);
  EXPECT_EQ(fc[0].origin, 299u);
  EXPECT_EQ(fc[0].model, "re-es-caviar-exp");
  EXPECT_EQ(fc[0].flag, ForecastFlag::ok);
  EXPECT_LT(fc[0].es, fc[0].var);
}

TEST(Rolling, StrideInvariantForFixedStub) {
  const auto data = sim_records(400, 2);
  const FixedEstimator stub(map_truth(DgpSpec{}, 0.01, kSpec.family));
  RollingConfig a;
  a.window = 250;
  RollingConfig b = a;
  b.stride = 1000;
  b.threads = 2;
  const auto fa = rolling_forecast(kSpec, data, stub, a);
  const auto fb = rolling_forecast(kSpec, data, stub, b);
  ASSERT_EQ(fa.size(), 150u);
  EXPECT_EQ(fa, fb);
}

TEST(Rolling, NoLookAhead) {
  auto data = sim_records(320, 3);
  const FixedEstimator stub(map_truth(DgpSpec{}, 0.01, kSpec.family));
  RollingConfig cfg;
  cfg.window = 300;
  const auto before = rolling_forecast(kSpec, data, stub, cfg);
  for (std::size_t t = 311; t < data.size(); ++t) {
    data[t].ret *= -3.0;
    data[t].measure *= 2.0;
  }
  const auto after = rolling_forecast(kSpec, data, stub, cfg);
  for (std::size_t k = 0; k + 299 <= 310; ++k) EXPECT_EQ(before[k], after[k]) << k;

  std::vector<double> seen;
  const SpyEstimator spy(&seen);
  rolling_forecast(kSpec, std::span(data).first(305), spy, cfg);
  ASSERT_EQ(seen.size(), 300u);
  EXPECT_EQ(seen.back(), data[303].ret);
}

TEST(Rolling, FailuresAreFlagged) {
  const auto data = sim_records(330, 4);
  const ThrowingEstimator est;
  RollingConfig cfg;
  cfg.window = 300;
  cfg.seed = 17;
  const auto fc = rolling_forecast(kSpec, data, est, cfg);
  std::size_t failed = 0;
  for (std::size_t k = 0; k < fc.size(); ++k) {
    const bool expect_fail = derive_seed(17, fc[k].origin) % 3 == 0;
    EXPECT_EQ(fc[k].flag == ForecastFlag::failed, expect_fail);
    if (expect_fail) {
      EXPECT_TRUE(std::isnan(fc[k].var));
      ++failed;
    }
  }
  EXPECT_GT(failed, 0u);
}

TEST(Rolling, TruthStubCoverage) {
  const auto data = sim_records(2250, 5);
  const FixedEstimator stub(map_truth(DgpSpec{}, 0.01, kSpec.family));
  RollingConfig cfg;
  cfg.window = 250;
  cfg.stride = 2000;
  const auto fc = rolling_forecast(kSpec, data, stub, cfg);
  ASSERT_EQ(fc.size(), 2000u);
  const auto aligned = align_forecasts(fc, data);
  const double rate = vrate(aligned.r, aligned.var);
  const double se = std::sqrt(0.01 * 0.99 / 2000.0);
  EXPECT_NEAR(rate, 0.01, 2.0 * se);
}

TEST(Rolling, Validation) {
  const auto data = sim_records(100, 6);
  const FixedEstimator stub(map_truth(DgpSpec{}, 0.01, kSpec.family));
  RollingConfig cfg;
  cfg.window = 100;
  EXPECT_THROW(rolling_forecast(kSpec, data, stub, cfg), InvalidArgument);
  cfg.window = 50;
  cfg.stride = 0;
  EXPECT_THROW(rolling_forecast(kSpec, data, stub, cfg), InvalidArgument);
}
