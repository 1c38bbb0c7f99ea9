#include "reidlab/numerics.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

#include "reidlab/kernels.hpp"

namespace reidlab {

namespace {

// splitmix64 finalizer; full avalanche, so key ^ mix(counter) is well mixed.
std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::uint64_t hash_label(std::string_view label) {
  // FNV-1a
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

RngStream::RngStream(std::uint64_t seed) : key_(mix64(seed)), counter_(0) {}

RngStream RngStream::substream(std::string_view label) const {
  return RngStream(mix64(key_ ^ hash_label(label)), 0);
}

RngStream RngStream::substream(std::uint64_t index) const {
  return RngStream(mix64(key_ ^ mix64(index ^ 0xa02bdbf7bb3c0a7ULL)), 0);
}

std::uint64_t RngStream::next_u64() { return mix64(key_ ^ mix64(counter_++)); }

double RngStream::uniform() {
  // 53 random bits -> [0, 1)
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
  return lo + (hi - lo) * uniform();
}

double RngStream::normal() {
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t RngStream::next_below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("next_below: n must be positive");
  // Rejection-free modulo is fine here: n is tiny relative to 2^64, and
  // determinism matters more than the ~n/2^64 bias.
  return next_u64() % n;
}

bool all_finite(std::span<const double> v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

double logsumexp(std::span<const double> logits) {
  if (logits.empty()) throw std::invalid_argument("logsumexp: empty input");
  if (!all_finite(logits))
    throw std::invalid_argument("logsumexp: non-finite input");
  const double m = kernels::max(logits);
  double acc = 0.0;
  for (double z : logits) acc += std::exp(z - m);
  return m + std::log(acc);
}

RealVector log_softmax(std::span<const double> logits) {
  const double lse = logsumexp(logits);
  RealVector out(logits.size());
  for (std::size_t i = 0; i < logits.size(); ++i) out[i] = logits[i] - lse;
  return out;
}

RealVector softmax(std::span<const double> logits) {
  RealVector out = log_softmax(logits);
  for (double& v : out) v = std::exp(v);
  return out;
}

RealVector finite_diff_grad(const std::function<double(const RealVector&)>& f,
                            const RealVector& x, double h) {
  if (h <= 0.0) throw std::invalid_argument("finite_diff_grad: h must be > 0");
  RealVector grad(x.size());
  RealVector probe = x;
  for (std::size_t i = 0; i < x.size(); ++i) {
    probe[i] = x[i] + h;
    const double fp = f(probe);
    probe[i] = x[i] - h;
    const double fm = f(probe);
    probe[i] = x[i];
    if (!std::isfinite(fp) || !std::isfinite(fm))
      throw std::runtime_error("finite_diff_grad: non-finite f at coordinate " +
                               std::to_string(i));
    grad[i] = (fp - fm) / (2.0 * h);
  }
  return grad;
}

}  // namespace reidlab
