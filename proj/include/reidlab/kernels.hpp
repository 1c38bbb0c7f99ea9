#pragma once

// Double-precision inner-loop kernels with a scalar reference implementation
// and an AVX2 variant selected at runtime. The scalar namespace is the
// semantic reference; SIMD variants must agree with it to tight tolerance
// (see tests) but are not required to be bit-identical.

#include <cstddef>
#include <span>
#include <string_view>

namespace reidlab::kernels {

namespace scalar {
double dot(std::span<const double> x, std::span<const double> y);
double squared_l2(std::span<const double> x, std::span<const double> y);
double sum(std::span<const double> x);
double max(std::span<const double> x);
// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);
}  // namespace scalar

#if defined(__x86_64__) || defined(_M_X64)
#define REIDLAB_HAVE_AVX2_BUILD 1
namespace avx2 {
double dot(std::span<const double> x, std::span<const double> y);
double squared_l2(std::span<const double> x, std::span<const double> y);
double sum(std::span<const double> x);
double max(std::span<const double> x);
void axpy(double a, std::span<const double> x, std::span<double> y);
}  // namespace avx2
#else
#define REIDLAB_HAVE_AVX2_BUILD 0
#endif

// Name of the backend the dispatched entry points below resolve to,
// "avx2" or "scalar". Decided once per process; REID_LAB_KERNELS=scalar
// forces the reference path.
std::string_view active_backend();

double dot(std::span<const double> x, std::span<const double> y);
double squared_l2(std::span<const double> x, std::span<const double> y);
double sum(std::span<const double> x);
double max(std::span<const double> x);
void axpy(double a, std::span<const double> x, std::span<double> y);

}  // namespace reidlab::kernels
