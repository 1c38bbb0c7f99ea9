#pragma once

// Cross-entropy regularized with a KL term, in three flavors: label
// smoothing (smoothed target), confidence penalty (negative predicted
// entropy), and the VIB latent KL (see vib.hpp). All gradients analytic.

#include <optional>
#include <vector>

#include "reidlab/numerics.hpp"

namespace reidlab {

struct LatentGaussian;  // vib.hpp

enum class LossVariant { kPlainXent, kLabelSmoothing, kConfidencePenalty, kVib };

const char* loss_variant_name(LossVariant v);
LossVariant loss_variant_from_name(const std::string& name);

struct LossTerm {
  LossVariant variant = LossVariant::kPlainXent;
  double beta = 0.0;  // ignored for plain xent
};

struct LossConfig {
  std::vector<LossTerm> terms;
  double alpha = 1.0;
  int num_classes = 2;

  void validate() const;  // throws std::invalid_argument
  bool has(LossVariant v) const;
  double beta_of(LossVariant v) const;  // 0 when variant absent
};

struct TargetDistribution {
  RealVector probs;

  void validate() const;
};

TargetDistribution uniform_distribution(int num_classes);

struct LossOutput {
  double loss = 0.0;
  RealVector grad_logits;
  RealVector grad_latent_mu;     // VIB only, else empty
  RealVector grad_latent_sigma;  // VIB only, else empty
  double predicted_entropy = 0.0;
};

LossOutput cross_entropy(const RealVector& logits, int target, double alpha);

TargetDistribution smooth_labels(int target, int num_classes, double beta);

LossOutput label_smoothing_loss(const RealVector& logits, int target,
                                double alpha, double beta);

// -sum p ln p, with 0 ln 0 = 0. Rejects invalid probability vectors.
double entropy(const RealVector& probs);

// sum p ln(p/q). A zero in q under support of p is an error, not +inf.
double kl_categorical(const TargetDistribution& p, const TargetDistribution& q);

LossOutput confidence_penalty_loss(const RealVector& logits, int target,
                                   double alpha, double beta);

// One alpha*H(q, p) term (q label-smoothed when LS is enabled) plus each
// enabled penalty scaled by its own beta. A VIB term requires the latent.
LossOutput compose_losses(const LossConfig& config, const RealVector& logits,
                          int target, const LatentGaussian* latent = nullptr);

}  // namespace reidlab
