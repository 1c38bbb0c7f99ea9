#pragma once

// AMSGrad with Adam-style bias correction, and the step-decay learning
// rate schedule (divide by 10 at the start of epochs 20 and 40, 1-indexed).

#include <cstdint>
#include <span>
#include <vector>

#include "reidlab/numerics.hpp"

namespace reidlab {

struct AmsGradConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TensorState {
  RealVector m;     // first moment
  RealVector v;     // second moment
  RealVector vhat;  // running max of v, non-decreasing per coordinate
};

struct OptimizerState {
  AmsGradConfig cfg;
  std::int64_t step = 0;  // completed updates
  std::vector<TensorState> slots;

  TensorState& slot(std::size_t index, std::size_t size);
};

// One AMSGrad step on a flat parameter tensor. `step` is 1-based.
void amsgrad_update(std::span<double> param, std::span<const double> grad,
                    TensorState& state, std::int64_t step, double lr,
                    const AmsGradConfig& cfg);

double lr_schedule(int epoch, double base_lr);

}  // namespace reidlab
