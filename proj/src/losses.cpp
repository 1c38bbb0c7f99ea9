#include "reidlab/losses.hpp"

#include <cmath>
#include <stdexcept>

#include "reidlab/vib.hpp"

namespace reidlab {

const char* loss_variant_name(LossVariant v) {
  switch (v) {
    case LossVariant::kPlainXent: return "xent";
    case LossVariant::kLabelSmoothing: return "ls";
    case LossVariant::kConfidencePenalty: return "cp";
    case LossVariant::kVib: return "vib";
  }
  return "?";
}

LossVariant loss_variant_from_name(const std::string& name) {
  if (name == "xent" || name == "plain_xent") return LossVariant::kPlainXent;
  if (name == "ls" || name == "label_smoothing") return LossVariant::kLabelSmoothing;
  if (name == "cp" || name == "confidence_penalty")
    return LossVariant::kConfidencePenalty;
  if (name == "vib") return LossVariant::kVib;
  throw std::invalid_argument("unknown loss variant: " + name);
}

void LossConfig::validate() const {
  if (alpha < 0.0) throw std::invalid_argument("LossConfig: alpha must be >= 0");
  if (num_classes < 2)
    throw std::invalid_argument("LossConfig: num_classes must be >= 2");
  int vib_terms = 0;
  for (const auto& t : terms) {
    if (t.beta < 0.0) throw std::invalid_argument("LossConfig: beta must be >= 0");
    if (t.variant == LossVariant::kLabelSmoothing && t.beta >= 1.0)
      throw std::invalid_argument("LossConfig: label-smoothing beta must be < 1");
    if (t.variant == LossVariant::kVib) ++vib_terms;
  }
  if (vib_terms > 1)
    throw std::invalid_argument("LossConfig: at most one VIB term");
  if (terms.empty()) throw std::invalid_argument("LossConfig: no terms");
}

bool LossConfig::has(LossVariant v) const {
  for (const auto& t : terms)
    if (t.variant == v) return true;
  return false;
}

double LossConfig::beta_of(LossVariant v) const {
  for (const auto& t : terms)
    if (t.variant == v) return t.beta;
  return 0.0;
}

void TargetDistribution::validate() const {
  double sum = 0.0;
  for (double p : probs) {
    if (!(p >= 0.0) || !std::isfinite(p))
      throw std::invalid_argument("TargetDistribution: entries must be >= 0");
    sum += p;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    throw std::invalid_argument("TargetDistribution: entries must sum to 1");
}

TargetDistribution uniform_distribution(int num_classes) {
  if (num_classes < 1)
    throw std::invalid_argument("uniform_distribution: need >= 1 class");
  return {RealVector(num_classes, 1.0 / num_classes)};
}

namespace {

void check_target(const RealVector& logits, int target) {
  if (logits.empty()) throw std::invalid_argument("loss: empty logits");
  if (!all_finite(logits))
    throw std::invalid_argument("loss: non-finite logits");
  if (target < 0 || static_cast<std::size_t>(target) >= logits.size())
    throw std::invalid_argument("loss: target index out of range");
}

// alpha * H(q, p) for an arbitrary target distribution q, with gradient
// alpha * (softmax(z) - q).
LossOutput xent_against(const RealVector& logits, const TargetDistribution& q,
                        double alpha) {
  const RealVector logp = log_softmax(logits);
  double loss = 0.0;
  for (std::size_t i = 0; i < logp.size(); ++i)
    if (q.probs[i] != 0.0) loss -= q.probs[i] * logp[i];
  LossOutput out;
  out.loss = alpha * loss;
  out.grad_logits.resize(logits.size());
  double pred_entropy = 0.0;
  for (std::size_t i = 0; i < logp.size(); ++i) {
    const double p = std::exp(logp[i]);
    out.grad_logits[i] = alpha * (p - q.probs[i]);
    pred_entropy -= p * logp[i];
  }
  out.predicted_entropy = pred_entropy;
  return out;
}

}  // namespace

LossOutput cross_entropy(const RealVector& logits, int target, double alpha) {
  check_target(logits, target);
  TargetDistribution q{RealVector(logits.size(), 0.0)};
  q.probs[target] = 1.0;
  return xent_against(logits, q, alpha);
}

TargetDistribution smooth_labels(int target, int num_classes, double beta) {
  if (num_classes < 2)
    throw std::invalid_argument("smooth_labels: need >= 2 classes");
  if (target < 0 || target >= num_classes)
    throw std::invalid_argument("smooth_labels: target out of range");
  if (beta < 0.0 || beta >= 1.0)
    throw std::invalid_argument("smooth_labels: beta must be in [0, 1)");
  TargetDistribution q{RealVector(num_classes, beta / num_classes)};
  q.probs[target] = 1.0 - (num_classes - 1) * beta / num_classes;
  return q;
}

LossOutput label_smoothing_loss(const RealVector& logits, int target,
                                double alpha, double beta) {
  check_target(logits, target);
  const auto q = smooth_labels(target, static_cast<int>(logits.size()), beta);
  return xent_against(logits, q, alpha);
}

double entropy(const RealVector& probs) {
  TargetDistribution p{probs};
  p.validate();
  double h = 0.0;
  for (double v : probs)
    if (v > 0.0) h -= v * std::log(v);
  return h;
}

double kl_categorical(const TargetDistribution& p, const TargetDistribution& q) {
  p.validate();
  q.validate();
  if (p.probs.size() != q.probs.size())
    throw std::invalid_argument("kl_categorical: size mismatch");
  double kl = 0.0;
  for (std::size_t i = 0; i < p.probs.size(); ++i) {
    if (p.probs[i] == 0.0) continue;
    if (q.probs[i] == 0.0)
      throw std::invalid_argument(
          "kl_categorical: q has zero mass where p > 0 (KL undefined)");
    kl += p.probs[i] * std::log(p.probs[i] / q.probs[i]);
  }
  return kl;
}

LossOutput confidence_penalty_loss(const RealVector& logits, int target,
                                   double alpha, double beta) {
  check_target(logits, target);
  if (beta < 0.0)
    throw std::invalid_argument("confidence_penalty_loss: beta must be >= 0");
  LossOutput out = cross_entropy(logits, target, alpha);
  const RealVector logp = log_softmax(logits);
  const double h = out.predicted_entropy;
  out.loss -= beta * h;
  // dH/dz_j = -p_j (log p_j + H)
  for (std::size_t j = 0; j < logits.size(); ++j) {
    const double p = std::exp(logp[j]);
    out.grad_logits[j] += beta * p * (logp[j] + h);
  }
  return out;
}

LossOutput compose_losses(const LossConfig& config, const RealVector& logits,
                          int target, const LatentGaussian* latent) {
  config.validate();
  check_target(logits, target);
  if (static_cast<int>(logits.size()) != config.num_classes)
    throw std::invalid_argument("compose_losses: logits length != num_classes");
  if (config.has(LossVariant::kVib) && latent == nullptr)
    throw std::invalid_argument("compose_losses: VIB term requires a latent");

  LossOutput out;
  if (config.has(LossVariant::kLabelSmoothing)) {
    out = label_smoothing_loss(logits, target, config.alpha,
                               config.beta_of(LossVariant::kLabelSmoothing));
  } else {
    out = cross_entropy(logits, target, config.alpha);
  }

  if (config.has(LossVariant::kConfidencePenalty)) {
    const double beta = config.beta_of(LossVariant::kConfidencePenalty);
    const RealVector logp = log_softmax(logits);
    const double h = out.predicted_entropy;
    out.loss -= beta * h;
    for (std::size_t j = 0; j < logits.size(); ++j)
      out.grad_logits[j] += beta * std::exp(logp[j]) * (logp[j] + h);
  }

  if (config.has(LossVariant::kVib)) {
    const double beta = config.beta_of(LossVariant::kVib);
    const GaussianKl kl = kl_gaussian_standard(*latent);
    out.loss += beta * kl.value;
    out.grad_latent_mu.resize(kl.grad_mu.size());
    out.grad_latent_sigma.resize(kl.grad_sigma.size());
    for (std::size_t d = 0; d < kl.grad_mu.size(); ++d) {
      out.grad_latent_mu[d] = beta * kl.grad_mu[d];
      out.grad_latent_sigma[d] = beta * kl.grad_sigma[d];
    }
  }
  return out;
}

}  // namespace reidlab
