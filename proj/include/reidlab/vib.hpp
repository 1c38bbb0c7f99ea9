#pragma once

// Variational information bottleneck head: diagonal-Gaussian posterior,
// reparameterized sampling, analytic KL against the standard-normal prior.

#include "reidlab/losses.hpp"
#include "reidlab/numerics.hpp"

namespace reidlab {

struct LatentGaussian {
  RealVector mu;
  RealVector sigma;  // strictly positive

  void validate() const;  // throws std::invalid_argument
  std::size_t dim() const { return mu.size(); }
};

struct LatentSample {
  RealVector z;
  RealVector noise;  // the epsilon that produced z
};

// z = mu + sigma (.) eps, eps ~ N(0, I) from the stream.
LatentSample reparameterize(const LatentGaussian& g, RngStream& rng);

struct GaussianKl {
  double value = 0.0;
  RealVector grad_mu;
  RealVector grad_sigma;
};

// KL(N(mu, diag sigma^2) || N(0, I)) = 1/2 sum (mu^2 + sigma^2 - 1 - ln sigma^2)
GaussianKl kl_gaussian_standard(const LatentGaussian& g);

// alpha * xent(logits, target) + beta * KL(g || N(0, I)).
// grad_latent_mu/sigma carry only the KL part; the trainer chains the
// classification gradient through z itself.
LossOutput vib_loss(const RealVector& logits, int target,
                    const LatentGaussian& g, double alpha, double beta);

}  // namespace reidlab
