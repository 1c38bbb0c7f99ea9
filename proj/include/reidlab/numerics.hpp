#pragma once

// Stable softmax primitives, a counter-based deterministic RNG, and the
// central-difference gradient checker used as oracle throughout the tests.

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

namespace reidlab {

using RealVector = std::vector<double>;

// Row-major dense matrix of doubles.
struct RealMatrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> data;

  RealMatrix() = default;
  RealMatrix(std::size_t r, std::size_t c, double fill = 0.0)
      : rows(r), cols(c), data(r * c, fill) {}

  double& at(std::size_t r, std::size_t c) { return data[r * cols + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols + c]; }
  std::span<double> row(std::size_t r) { return {data.data() + r * cols, cols}; }
  std::span<const double> row(std::size_t r) const {
    return {data.data() + r * cols, cols};
  }
};

// Counter-based deterministic stream: the draw sequence is a pure function
// of (seed, substream labels, draw index). Substreams derived by label let
// per-sample noise replay identically regardless of worker count.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);

  RngStream substream(std::string_view label) const;
  RngStream substream(std::uint64_t index) const;

  std::uint64_t next_u64();
  // Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  // Standard normal via Box-Muller; consumes two uniform draws.
  double normal();
  // Uniform integer in [0, n).
  std::uint64_t next_below(std::uint64_t n);

 private:
  RngStream(std::uint64_t key, std::uint64_t counter)
      : key_(key), counter_(counter) {}

  std::uint64_t key_;
  std::uint64_t counter_;
};

double logsumexp(std::span<const double> logits);
RealVector log_softmax(std::span<const double> logits);
RealVector softmax(std::span<const double> logits);

// Central differences (f(x+h e_i) - f(x-h e_i)) / 2h per coordinate.
RealVector finite_diff_grad(const std::function<double(const RealVector&)>& f,
                            const RealVector& x, double h);

bool all_finite(std::span<const double> v);

}  // namespace reidlab
