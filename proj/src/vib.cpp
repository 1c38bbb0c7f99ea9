#include "reidlab/vib.hpp"

#include <cmath>
#include <stdexcept>

namespace reidlab {

void LatentGaussian::validate() const {
  if (mu.size() != sigma.size())
    throw std::invalid_argument("LatentGaussian: mu/sigma length mismatch");
  if (mu.empty()) throw std::invalid_argument("LatentGaussian: empty");
  if (!all_finite(mu) || !all_finite(sigma))
    throw std::invalid_argument("LatentGaussian: non-finite parameters");
  for (double s : sigma)
    if (s <= 0.0)
      throw std::invalid_argument("LatentGaussian: sigma must be > 0");
}

LatentSample reparameterize(const LatentGaussian& g, RngStream& rng) {
  g.validate();
  LatentSample s;
  s.noise.resize(g.dim());
  s.z.resize(g.dim());
  for (std::size_t d = 0; d < g.dim(); ++d) {
    s.noise[d] = rng.normal();
    s.z[d] = g.mu[d] + g.sigma[d] * s.noise[d];
  }
  return s;
}

GaussianKl kl_gaussian_standard(const LatentGaussian& g) {
  g.validate();
  GaussianKl out;
  out.grad_mu.resize(g.dim());
  out.grad_sigma.resize(g.dim());
  for (std::size_t d = 0; d < g.dim(); ++d) {
    const double mu = g.mu[d];
    const double sigma = g.sigma[d];
    out.value += 0.5 * (mu * mu + sigma * sigma - 1.0 -
                        2.0 * std::log(sigma));
    out.grad_mu[d] = mu;
    out.grad_sigma[d] = sigma - 1.0 / sigma;
  }
  return out;
}

LossOutput vib_loss(const RealVector& logits, int target,
                    const LatentGaussian& g, double alpha, double beta) {
  if (beta < 0.0) throw std::invalid_argument("vib_loss: beta must be >= 0");
  LossOutput out = cross_entropy(logits, target, alpha);
  const GaussianKl kl = kl_gaussian_standard(g);
  out.loss += beta * kl.value;
  out.grad_latent_mu.resize(g.dim());
  out.grad_latent_sigma.resize(g.dim());
  for (std::size_t d = 0; d < g.dim(); ++d) {
    out.grad_latent_mu[d] = beta * kl.grad_mu[d];
    out.grad_latent_sigma[d] = beta * kl.grad_sigma[d];
  }
  return out;
}

}  // namespace reidlab
