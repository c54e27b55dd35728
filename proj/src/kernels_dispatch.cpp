#include <atomic>
#include <cstdlib>
#include <cstring>

#include "rescav/error.hpp"
#include "rescav/kernels.hpp"

namespace rescav::kernels {

#ifdef RESCAV_HAVE_AVX2
const KernelTable* avx2_table_impl();
#endif

namespace {

void require_same(std::size_t a, std::size_t b) {
  if (a != b) throw InvalidArgument("kernel inputs must have equal lengths");
}

const KernelTable* initial_table() {
  const char* env = std::getenv("RESCAV_ISA");
  if (env != nullptr && std::strcmp(env, "scalar") == 0) return &scalar_table();
  if (const KernelTable* t = avx2_table(); t != nullptr && cpu_supports_avx2()) return t;
  return &scalar_table();
}

std::atomic<const KernelTable*>& current() {
  static std::atomic<const KernelTable*> table{initial_table()};
  return table;
}

}  // namespace

std::string_view isa_name(Isa isa) { return isa == Isa::avx2 ? "avx2" : "scalar"; }

const KernelTable* avx2_table() {
#ifdef RESCAV_HAVE_AVX2
  return avx2_table_impl();
#else
  return nullptr;
#endif
}

bool cpu_supports_avx2() {
#if defined(__GNUC__) && (defined(__x86_64__) || defined(__i386__))
  return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
  return false;
#endif
}

const KernelTable& active() { return *current().load(std::memory_order_relaxed); }

Isa active_isa() { return active().isa; }

void select(Isa isa) {
  if (isa == Isa::scalar) {
    current().store(&scalar_table());
    return;
  }
  const KernelTable* t = avx2_table();
  if (t == nullptr || !cpu_supports_avx2()) throw InvalidArgument("AVX2 kernels are not available on this build/CPU");
  current().store(t);
}

double al_score_sum(std::span<const double> r, std::span<const double> q, std::span<const double> es, double alpha) {
  require_same(r.size(), q.size());
  require_same(r.size(), es.size());
  return active().al_score_sum(r.data(), q.data(), es.data(), r.size(), alpha);
}

double check_loss_sum(std::span<const double> r, std::span<const double> q, double alpha) {
  require_same(r.size(), q.size());
  return active().check_loss_sum(r.data(), q.data(), r.size(), alpha);
}

std::size_t count_below(std::span<const double> a, std::span<const double> b) {
  require_same(a.size(), b.size());
  return active().count_below(a.data(), b.data(), a.size());
}

double ratio_square_sum(std::span<const double> r, std::span<const double> q, std::span<double> eps) {
  require_same(r.size(), q.size());
  require_same(r.size(), eps.size());
  return active().ratio_square_sum(r.data(), q.data(), r.size(), eps.data());
}

double measurement_residuals(std::span<const double> x, std::span<const double> q, std::span<const double> eps,
                             const MeasurementCoeffs& c, std::span<double> u) {
  require_same(x.size(), q.size());
  require_same(x.size(), eps.size());
  require_same(x.size(), u.size());
  return active().measurement_residuals(x.data(), q.data(), eps.data(), x.size(), c, u.data());
}

}  // namespace rescav::kernels
