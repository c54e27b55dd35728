#pragma once

#include <cstddef>
#include <span>
#include <string_view>

// Data-parallel reductions used by the likelihood and the scoring battery.
// Every kernel has a scalar reference implementation; an AVX2/FMA variant is
// compiled when the toolchain supports it and selected at runtime from CPUID.
// Variants differ only in summation order and the vector log, and are
// equivalence-tested against the scalar path.
namespace rescav::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa);

struct MeasurementCoeffs {
  double xi;
  double phi;
  double tau1;
  double tau2;
  double eps2bar;
};

struct KernelTable {
  Isa isa;
  // sum_t log(-es_t) - log(1-alpha) - (r_t-q_t)(alpha - 1{r_t<=q_t}) / (alpha es_t); requires es_t < 0.
  double (*al_score_sum)(const double* r, const double* q, const double* es, std::size_t n, double alpha);
  // sum_t (alpha - 1{r_t<q_t}) (r_t - q_t)
  double (*check_loss_sum)(const double* r, const double* q, std::size_t n, double alpha);
  // #{t : a_t < b_t}
  std::size_t (*count_below)(const double* a, const double* b, std::size_t n);
  // eps_t = r_t / q_t written to eps; returns sum_t eps_t^2.
  double (*ratio_square_sum)(const double* r, const double* q, std::size_t n, double* eps);
  // u_t = x_t - xi - phi|q_t| - tau1 eps_t - tau2 (eps_t^2 - eps2bar) written to u; returns sum_t u_t^2.
  double (*measurement_residuals)(const double* x, const double* q, const double* eps, std::size_t n,
                                  const MeasurementCoeffs& c, double* u);
};

const KernelTable& scalar_table();
// nullptr when the AVX2 variant was not compiled in.
const KernelTable* avx2_table();
bool cpu_supports_avx2();

// Table used by the library. Chosen once: AVX2 when compiled and supported by
// the CPU, unless RESCAV_ISA=scalar is set in the environment.
const KernelTable& active();
Isa active_isa();
// Overrides the runtime choice (tests, benchmarking). Throws if unavailable.
void select(Isa isa);

double al_score_sum(std::span<const double> r, std::span<const double> q, std::span<const double> es, double alpha);
double check_loss_sum(std::span<const double> r, std::span<const double> q, double alpha);
std::size_t count_below(std::span<const double> a, std::span<const double> b);
double ratio_square_sum(std::span<const double> r, std::span<const double> q, std::span<double> eps);
double measurement_residuals(std::span<const double> x, std::span<const double> q, std::span<const double> eps,
                             const MeasurementCoeffs& c, std::span<double> u);

}  // namespace rescav::kernels
