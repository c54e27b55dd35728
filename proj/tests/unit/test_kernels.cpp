#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "rescav/kernels.hpp"
#include "rescav/rng.hpp"

namespace k = rescav::kernels;

namespace {

struct Data {
  std::vector<double> r, q, es, x, eps, u;
};

Data make_data(std::size_t n, std::uint64_t seed) {
  rescav::Rng rng(seed);
  rescav::NormalSampler z;
  Data d;
  for (std::size_t i = 0; i < n; ++i) {
    const double scale = std::exp(z(rng));
    d.r.push_back(scale * z(rng));
    d.q.push_back(-scale * rescav::uniform(rng, 0.5, 3.0));
    d.es.push_back(d.q.back() * rescav::uniform(rng, 1.0, 1.5));
    d.x.push_back(std::fabs(z(rng)) + 0.1);
  }
  d.eps.resize(n);
  d.u.resize(n);
  return d;
}

// Naive loops written independently of the kernel sources.
double naive_al(const Data& d, double alpha) {
  long double s = 0.0;
  for (std::size_t i = 0; i < d.r.size(); ++i) {
    const double hit = d.r[i] <= d.q[i] ? 1.0 : 0.0;
    s += std::log((alpha - 1.0) / d.es[i]) + (d.r[i] - d.q[i]) * (alpha - hit) / (alpha * d.es[i]);
  }
  return static_cast<double>(s);
}

double naive_check(const Data& d, double alpha) {
  long double s = 0.0;
  for (std::size_t i = 0; i < d.r.size(); ++i) {
    s += (alpha - (d.r[i] < d.q[i] ? 1.0 : 0.0)) * (d.r[i] - d.q[i]);
  }
  return static_cast<double>(s);
}

void expect_rel(double a, double b, double tol) {
  EXPECT_LE(std::fabs(a - b), tol * std::max(1.0, std::fabs(b))) << a << " vs " << b;
}

class KernelIsa : public ::testing::TestWithParam<k::Isa> {
 protected:
  void SetUp() override {
    if (GetParam() == k::Isa::avx2 && (k::avx2_table() == nullptr || !k::cpu_supports_avx2())) {
      GTEST_SKIP() << "AVX2 path not available";
    }
    saved_ = k::active_isa();
    k::select(GetParam());
  }
  void TearDown() override { k::select(saved_); }
  k::Isa saved_ = k::Isa::scalar;
};

}  // namespace

TEST_P(KernelIsa, MatchesNaiveLoops) {
  ASSERT_EQ(k::active_isa(), GetParam());
  for (std::size_t n : {1u, 3u, 4u, 7u, 8u, 9u, 100u, 1901u}) {
    Data d = make_data(n, 1000 + n);
    expect_rel(k::al_score_sum(d.r, d.q, d.es, 0.01), -naive_al(d, 0.01), 1e-12);
    expect_rel(k::check_loss_sum(d.r, d.q, 0.025), naive_check(d, 0.025), 1e-12);
    std::size_t below = 0;
    for (std::size_t i = 0; i < n; ++i) below += d.r[i] < d.q[i] ? 1 : 0;
    EXPECT_EQ(k::count_below(d.r, d.q), below);

    long double ss = 0.0;
    const double s = k::ratio_square_sum(d.r, d.q, d.eps);
    for (std::size_t i = 0; i < n; ++i) {
      EXPECT_NEAR(d.eps[i], d.r[i] / d.q[i], 1e-15 * std::fabs(d.r[i] / d.q[i]));
      ss += (d.r[i] / d.q[i]) * (d.r[i] / d.q[i]);
    }
    expect_rel(s, static_cast<double>(ss), 1e-12);

    const k::MeasurementCoeffs c{0.1, 0.4, 0.05, 0.1, static_cast<double>(ss) / static_cast<double>(n)};
    const double us = k::measurement_residuals(d.x, d.q, d.eps, c, d.u);
    long double uss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double u = d.x[i] - c.xi - c.phi * std::fabs(d.q[i]) - c.tau1 * d.eps[i] -
                       c.tau2 * (d.eps[i] * d.eps[i] - c.eps2bar);
      EXPECT_NEAR(d.u[i], u, 1e-12 * std::max(1.0, std::fabs(u)));
      uss += u * u;
    }
    expect_rel(us, static_cast<double>(uss), 1e-12);
  }
}

// r = q removes the check term, isolating the vector log over a wide magnitude range.
TEST_P(KernelIsa, LogAccuracyAcrossMagnitudes) {
  const double alpha = 0.05;
  for (int e = -300; e <= 300; e += 7) {
    std::vector<double> es, r;
    for (int j = 0; j < 13; ++j) es.push_back(-std::pow(10.0, e) * (1.0 + 0.37 * j));
    r.assign(es.size(), 0.0);
    long double ref = 0.0;
    for (double v : es) ref += std::log(-v) - std::log(1.0 - alpha);
    const double got = k::al_score_sum(r, r, es, alpha);
    EXPECT_NEAR(got, static_cast<double>(ref), 4e-15 * std::max(1.0, std::fabs(static_cast<double>(ref)))) << e;
  }
}

INSTANTIATE_TEST_SUITE_P(Isa, KernelIsa, ::testing::Values(k::Isa::scalar, k::Isa::avx2),
                         [](const auto& info) { return std::string(k::isa_name(info.param)); });

TEST(KernelEquivalence, Avx2AgreesWithScalar) {
  const k::KernelTable* v = k::avx2_table();
  if (v == nullptr || !k::cpu_supports_avx2()) GTEST_SKIP() << "AVX2 path not available";
  const k::KernelTable& s = k::scalar_table();
  for (std::uint64_t seed = 1; seed <= 50; ++seed) {
    const std::size_t n = 50 + 37 * seed;
    Data d = make_data(n, seed);
    expect_rel(v->al_score_sum(d.r.data(), d.q.data(), d.es.data(), n, 0.01),
               s.al_score_sum(d.r.data(), d.q.data(), d.es.data(), n, 0.01), 1e-12);
    expect_rel(v->check_loss_sum(d.r.data(), d.q.data(), n, 0.01), s.check_loss_sum(d.r.data(), d.q.data(), n, 0.01),
               1e-12);
    EXPECT_EQ(v->count_below(d.r.data(), d.q.data(), n), s.count_below(d.r.data(), d.q.data(), n));
    std::vector<double> e2(n), u2(n);
    expect_rel(v->ratio_square_sum(d.r.data(), d.q.data(), n, d.eps.data()),
               s.ratio_square_sum(d.r.data(), d.q.data(), n, e2.data()), 1e-12);
    const k::MeasurementCoeffs c{0.2, 0.3, -0.05, 0.08, 1.3};
    expect_rel(v->measurement_residuals(d.x.data(), d.q.data(), d.eps.data(), n, c, d.u.data()),
               s.measurement_residuals(d.x.data(), d.q.data(), e2.data(), n, c, u2.data()), 1e-12);
    for (std::size_t i = 0; i < n; ++i) ASSERT_NEAR(d.u[i], u2[i], 1e-12 * std::max(1.0, std::fabs(u2[i])));
  }
}

TEST(KernelEquivalence, SelectRejectsUnavailable) {
  if (k::avx2_table() != nullptr && k::cpu_supports_avx2()) GTEST_SKIP() << "AVX2 available here";
  EXPECT_ANY_THROW(k::select(k::Isa::avx2));
}
