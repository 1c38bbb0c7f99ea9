#include "reidlab/kernels.hpp"

#include <cassert>
#include <cstdlib>
#include <limits>

namespace reidlab::kernels {

namespace scalar {

double dot(std::span<const double> x, std::span<const double> y) {
  assert(x.size() == y.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) acc += x[i] * y[i];
  return acc;
}

double squared_l2(std::span<const double> x, std::span<const double> y) {
  assert(x.size() == y.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - y[i];
    acc += d * d;
  }
  return acc;
}

double sum(std::span<const double> x) {
  double acc = 0.0;
  for (double v : x) acc += v;
  return acc;
}

double max(std::span<const double> x) {
  double m = -std::numeric_limits<double>::infinity();
  for (double v : x)
    if (v > m) m = v;
  return m;
}

void axpy(double a, std::span<const double> x, std::span<double> y) {
  assert(x.size() == y.size());
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += a * x[i];
}

}  // namespace scalar

namespace {

enum class Backend { kScalar, kAvx2 };

Backend pick_backend() {
  if (const char* env = std::getenv("REID_LAB_KERNELS")) {
    if (std::string_view(env) == "scalar") return Backend::kScalar;
  }
#if REIDLAB_HAVE_AVX2_BUILD
  if (__builtin_cpu_supports("avx2")) return Backend::kAvx2;
#endif
  return Backend::kScalar;
}

const Backend g_backend = pick_backend();

}  // namespace

std::string_view active_backend() {
  return g_backend == Backend::kScalar ? "scalar" : "avx2";
}

#if REIDLAB_HAVE_AVX2_BUILD
#define REIDLAB_DISPATCH(fn, ...) \
  return g_backend == Backend::kAvx2 ? avx2::fn(__VA_ARGS__) : scalar::fn(__VA_ARGS__)
#else
#define REIDLAB_DISPATCH(fn, ...) return scalar::fn(__VA_ARGS__)
#endif

double dot(std::span<const double> x, std::span<const double> y) {
  REIDLAB_DISPATCH(dot, x, y);
}

double squared_l2(std::span<const double> x, std::span<const double> y) {
  REIDLAB_DISPATCH(squared_l2, x, y);
}

double sum(std::span<const double> x) { REIDLAB_DISPATCH(sum, x); }

double max(std::span<const double> x) { REIDLAB_DISPATCH(max, x); }

void axpy(double a, std::span<const double> x, std::span<double> y) {
#if REIDLAB_HAVE_AVX2_BUILD
  if (g_backend == Backend::kAvx2) {
    avx2::axpy(a, x, y);
    return;
  }
#endif
  scalar::axpy(a, x, y);
}

}  // namespace reidlab::kernels
