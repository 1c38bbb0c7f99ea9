#pragma once

// Finite-difference verification of every analytic gradient: the loss
// family with respect to logits and latent parameters, and the full
// model parameter gradient with frozen reparameterization noise.

#include <string>
#include <vector>

#include "reidlab/trainer.hpp"

namespace reidlab {

struct GradCheckCase {
  std::string name;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  bool pass = false;
};

// Infinity-norm relative disagreement between analytic and reference.
double grad_rel_err(const RealVector& analytic, const RealVector& reference);

// Loss-level checks (tolerance 1e-6): each variant and combination,
// gradients with respect to logits and, for VIB, latent mu/sigma.
std::vector<GradCheckCase> loss_gradchecks(std::uint64_t seed,
                                           bool inject_fault = false);

// End-to-end parameter gradients on a 2-layer model (tolerance 1e-5).
std::vector<GradCheckCase> model_gradchecks(std::uint64_t seed,
                                            bool inject_fault = false);

// Parameter (de)serialization in the optimizer's slot order.
RealVector flatten_params(const EncoderModel& model, const ClassifierHead& head);
void unflatten_params(const RealVector& flat, EncoderModel& model,
                      ClassifierHead& head);
RealVector flatten_grads(const EncoderModel& model, const BatchGrads& grads);

}  // namespace reidlab
