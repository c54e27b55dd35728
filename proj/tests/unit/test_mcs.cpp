#include <gtest/gtest.h>

#include <algorithm>

#include "rescav/error.hpp"
#include "rescav/rng.hpp"
#include "rescav/scoring.hpp"

using namespace rescav;

namespace {

std::vector<double> noise(std::size_t m, std::uint64_t seed, double scale = 1.0) {
  Rng rng(seed);
  NormalSampler z;
  std::vector<double> v(m);
  for (auto& x : v) x = scale * z(rng);
  return v;
}

McsConfig config(McsMethod method, std::uint64_t seed) {
  McsConfig c;
  c.method = method;
  c.bootstrap = 200;
  c.seed = seed;
  return c;
}

bool survives(const McsResult& r, const std::string& m) {
  return std::find(r.survivors.begin(), r.survivors.end(), m) != r.survivors.end();
}

}  // namespace

TEST(Mcs, IdenticalModelsBothSurvive) {
  const auto a = noise(500, 1);
  const std::vector<std::string> names = {"a", "b"};
  const std::vector<std::vector<double>> losses = {a, a};
  for (McsMethod m : {McsMethod::R, McsMethod::SQ}) {
    const auto res = model_confidence_set(names, losses, config(m, 2));
    EXPECT_EQ(res.survivors.size(), 2u);
    EXPECT_TRUE(res.eliminations.empty());
    for (const auto& e : res.sequence) EXPECT_DOUBLE_EQ(e.pvalue, 1.0);
  }
}

TEST(Mcs, ConstantOffsetIsEliminated) {
  const auto a = noise(500, 3);
  auto c = a;
  for (double& x : c) x += 1.0;
  const auto b = [&] {
    auto v = noise(500, 4);
    for (std::size_t t = 0; t < v.size(); ++t) v[t] += a[t];
    return v;
  }();
  const std::vector<std::string> names = {"a", "b", "c"};
  const std::vector<std::vector<double>> losses = {a, b, c};
  for (McsMethod m : {McsMethod::R, McsMethod::SQ}) {
    const auto res = model_confidence_set(names, losses, config(m, 5));
    ASSERT_FALSE(res.eliminations.empty());
    EXPECT_EQ(res.eliminations.front().model, "c");
    EXPECT_FALSE(survives(res, "c"));
    EXPECT_TRUE(survives(res, "a"));
    EXPECT_EQ(res.sequence.size(), 3u);
    EXPECT_DOUBLE_EQ(res.sequence.back().pvalue, 1.0);
    for (std::size_t k = 1; k < res.sequence.size(); ++k) {
      EXPECT_GE(res.sequence[k].pvalue, res.sequence[k - 1].pvalue);
    }
  }
}

TEST(Mcs, InvariantToCommonShiftAndDeterministic) {
  const std::vector<std::string> names = {"a", "b", "c", "d"};
  std::vector<std::vector<double>> losses;
  for (int k = 0; k < 4; ++k) {
    auto v = noise(400, 10 + k);
    for (double& x : v) x += 0.08 * k;
    losses.push_back(v);
  }
  auto shifted = losses;
  for (auto& v : shifted) {
    for (double& x : v) x += 7.0;
  }
  const auto cfg = config(McsMethod::R, 6);
  const auto a = model_confidence_set(names, losses, cfg);
  const auto b = model_confidence_set(names, shifted, cfg);
  EXPECT_EQ(a.survivors, b.survivors);
  ASSERT_EQ(a.sequence.size(), b.sequence.size());
  for (std::size_t k = 0; k < a.sequence.size(); ++k) {
    EXPECT_EQ(a.sequence[k].model, b.sequence[k].model);
    EXPECT_NEAR(a.sequence[k].pvalue, b.sequence[k].pvalue, 1e-12);
  }
  const auto again = model_confidence_set(names, losses, cfg);
  EXPECT_EQ(again.survivors, a.survivors);
  for (const auto& e : a.sequence) {
    EXPECT_GE(e.pvalue, 0.0);
    EXPECT_LE(e.pvalue, 1.0);
  }
}

TEST(Mcs, Errors) {
  const std::vector<std::string> names = {"a", "b"};
  const std::vector<std::vector<double>> uneven = {noise(100, 1), noise(90, 2)};
  EXPECT_THROW(model_confidence_set(names, uneven, config(McsMethod::R, 1)), InvalidArgument);
  const std::vector<std::string> one = {"a"};
  const std::vector<std::vector<double>> single = {noise(100, 1)};
  EXPECT_THROW(model_confidence_set(one, single, config(McsMethod::R, 1)), InvalidArgument);
}
