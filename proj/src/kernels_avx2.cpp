// Compiled with -mavx2 -mfma; only reached after a CPUID check.
#include <immintrin.h>

#include <bit>
#include <cmath>
#include <cstdint>

#include "rescav/kernels.hpp"

namespace rescav::kernels {

namespace {

inline double hsum(__m256d v) {
  const __m128d lo = _mm256_castpd256_pd128(v);
  const __m128d hi = _mm256_extractf128_pd(v, 1);
  const __m128d s = _mm_add_pd(lo, hi);
  return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

// Natural log for positive, finite, normal inputs. Reduces x = 2^e * m with
// m in [sqrt(1/2), sqrt(2)) and evaluates log(m) = 2 atanh(s), s = (m-1)/(m+1),
// as an odd series in s truncated where s^2 <= 0.0295 makes the tail < 1e-18.
inline __m256d log_pd(__m256d x) {
  const __m256i bits = _mm256_castpd_si256(x);
  const __m256i mant_mask = _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL);
  const __m256i one_bits = _mm256_set1_epi64x(0x3FF0000000000000LL);
  __m256d m = _mm256_castsi256_pd(_mm256_or_si256(_mm256_and_si256(bits, mant_mask), one_bits));

  // Biased exponent as an exact double via the 2^52 magic-number trick.
  const __m256i exp_bits = _mm256_srli_epi64(bits, 52);
  const __m256d magic = _mm256_set1_pd(0x1.0p52);
  __m256d e = _mm256_sub_pd(_mm256_castsi256_pd(_mm256_or_si256(exp_bits, _mm256_castpd_si256(magic))), magic);
  e = _mm256_sub_pd(e, _mm256_set1_pd(1023.0));

  const __m256d sqrt2 = _mm256_set1_pd(1.4142135623730950488);
  const __m256d big = _mm256_cmp_pd(m, sqrt2, _CMP_GT_OQ);
  m = _mm256_blendv_pd(m, _mm256_mul_pd(m, _mm256_set1_pd(0.5)), big);
  e = _mm256_add_pd(e, _mm256_and_pd(big, _mm256_set1_pd(1.0)));

  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d s = _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));
  const __m256d z = _mm256_mul_pd(s, s);

  __m256d p = _mm256_set1_pd(1.0 / 23.0);
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 21.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 19.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 17.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 15.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 13.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 11.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 9.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 7.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 5.0));
  p = _mm256_fmadd_pd(p, z, _mm256_set1_pd(1.0 / 3.0));
  // log(m) = 2s + 2s*z*p
  const __m256d two_s = _mm256_add_pd(s, s);
  const __m256d logm = _mm256_fmadd_pd(_mm256_mul_pd(two_s, z), p, two_s);

  const __m256d ln2_hi = _mm256_set1_pd(0x1.62e42fefa3800p-1);
  const __m256d ln2_lo = _mm256_set1_pd(0x1.ef35793c76730p-45);
  return _mm256_add_pd(_mm256_fmadd_pd(e, ln2_hi, logm), _mm256_mul_pd(e, ln2_lo));
}

double al_score_sum_avx2(const double* r, const double* q, const double* es, std::size_t n, double alpha) {
  const double log1ma = std::log1p(-alpha);
  const __m256d va = _mm256_set1_pd(alpha);
  const __m256d inv_a = _mm256_set1_pd(1.0 / alpha);
  const __m256d one = _mm256_set1_pd(1.0);
  const __m256d sign = _mm256_set1_pd(-0.0);
  __m256d acc0 = _mm256_setzero_pd();
  __m256d acc1 = _mm256_setzero_pd();
  std::size_t t = 0;
  auto term = [&](std::size_t i) {
    const __m256d vr = _mm256_loadu_pd(r + i);
    const __m256d vq = _mm256_loadu_pd(q + i);
    const __m256d ves = _mm256_loadu_pd(es + i);
    const __m256d hit = _mm256_and_pd(_mm256_cmp_pd(vr, vq, _CMP_LE_OQ), one);
    const __m256d w = _mm256_mul_pd(_mm256_sub_pd(vr, vq), _mm256_sub_pd(va, hit));
    const __m256d frac = _mm256_div_pd(_mm256_mul_pd(w, inv_a), ves);
    return _mm256_sub_pd(log_pd(_mm256_xor_pd(ves, sign)), frac);
  };
  for (; t + 8 <= n; t += 8) {
    acc0 = _mm256_add_pd(acc0, term(t));
    acc1 = _mm256_add_pd(acc1, term(t + 4));
  }
  for (; t + 4 <= n; t += 4) acc0 = _mm256_add_pd(acc0, term(t));
  double sum = hsum(_mm256_add_pd(acc0, acc1));
  for (; t < n; ++t) {
    const double hit = r[t] <= q[t] ? 1.0 : 0.0;
    sum += std::log(-es[t]) - (r[t] - q[t]) * (alpha - hit) / (alpha * es[t]);
  }
  return sum - static_cast<double>(n) * log1ma;
}

double check_loss_sum_avx2(const double* r, const double* q, std::size_t n, double alpha) {
  const __m256d va = _mm256_set1_pd(alpha);
  const __m256d one = _mm256_set1_pd(1.0);
  __m256d acc = _mm256_setzero_pd();
  std::size_t t = 0;
  for (; t + 4 <= n; t += 4) {
    const __m256d vr = _mm256_loadu_pd(r + t);
    const __m256d vq = _mm256_loadu_pd(q + t);
    const __m256d hit = _mm256_and_pd(_mm256_cmp_pd(vr, vq, _CMP_LT_OQ), one);
    acc = _mm256_fmadd_pd(_mm256_sub_pd(va, hit), _mm256_sub_pd(vr, vq), acc);
  }
  double sum = hsum(acc);
  for (; t < n; ++t) sum += (alpha - (r[t] < q[t] ? 1.0 : 0.0)) * (r[t] - q[t]);
  return sum;
}

std::size_t count_below_avx2(const double* a, const double* b, std::size_t n) {
  std::size_t count = 0;
  std::size_t t = 0;
  for (; t + 4 <= n; t += 4) {
    const int mask = _mm256_movemask_pd(_mm256_cmp_pd(_mm256_loadu_pd(a + t), _mm256_loadu_pd(b + t), _CMP_LT_OQ));
    count += static_cast<std::size_t>(std::popcount(static_cast<unsigned>(mask)));
  }
  for (; t < n; ++t) count += a[t] < b[t] ? 1 : 0;
  return count;
}

double ratio_square_sum_avx2(const double* r, const double* q, std::size_t n, double* eps) {
  __m256d acc = _mm256_setzero_pd();
  std::size_t t = 0;
  for (; t + 4 <= n; t += 4) {
    const __m256d e = _mm256_div_pd(_mm256_loadu_pd(r + t), _mm256_loadu_pd(q + t));
    _mm256_storeu_pd(eps + t, e);
    acc = _mm256_fmadd_pd(e, e, acc);
  }
  double sum = hsum(acc);
  for (; t < n; ++t) {
    eps[t] = r[t] / q[t];
    sum += eps[t] * eps[t];
  }
  return sum;
}

double measurement_residuals_avx2(const double* x, const double* q, const double* eps, std::size_t n,
                                  const MeasurementCoeffs& c, double* u) {
  const __m256d xi = _mm256_set1_pd(c.xi);
  const __m256d phi = _mm256_set1_pd(c.phi);
  const __m256d tau1 = _mm256_set1_pd(c.tau1);
  const __m256d tau2 = _mm256_set1_pd(c.tau2);
  const __m256d e2bar = _mm256_set1_pd(c.eps2bar);
  const __m256d abs_mask = _mm256_castsi256_pd(_mm256_set1_epi64x(0x7FFFFFFFFFFFFFFFLL));
  __m256d acc = _mm256_setzero_pd();
  std::size_t t = 0;
  for (; t + 4 <= n; t += 4) {
    const __m256d ve = _mm256_loadu_pd(eps + t);
    const __m256d aq = _mm256_and_pd(_mm256_loadu_pd(q + t), abs_mask);
    __m256d v = _mm256_sub_pd(_mm256_loadu_pd(x + t), xi);
    v = _mm256_fnmadd_pd(phi, aq, v);
    v = _mm256_fnmadd_pd(tau1, ve, v);
    v = _mm256_fnmadd_pd(tau2, _mm256_fmsub_pd(ve, ve, e2bar), v);
    _mm256_storeu_pd(u + t, v);
    acc = _mm256_fmadd_pd(v, v, acc);
  }
  double sum = hsum(acc);
  for (; t < n; ++t) {
    u[t] = x[t] - c.xi - c.phi * std::fabs(q[t]) - c.tau1 * eps[t] - c.tau2 * (eps[t] * eps[t] - c.eps2bar);
    sum += u[t] * u[t];
  }
  return sum;
}

constexpr KernelTable kAvx2{Isa::avx2,
                            al_score_sum_avx2,
                            check_loss_sum_avx2,
                            count_below_avx2,
                            ratio_square_sum_avx2,
                            measurement_residuals_avx2};

}  // namespace

const KernelTable* avx2_table_impl() { return &kAvx2; }

}  // namespace rescav::kernels
