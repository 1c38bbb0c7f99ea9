#pragma once

// Small fully-connected encoder plus classifier head with explicit forward
// and backward passes. Stands in for a conv backbone at desk scale; the
// optional VIB head maps the feature to (mu, raw sigma).

#include <string>
#include <vector>

#include "reidlab/numerics.hpp"

namespace reidlab {

enum class Activation { kRelu, kTanh };

Activation activation_from_name(const std::string& name);
const char* activation_name(Activation a);

struct EncoderSpec {
  // input dim, hidden dims..., feature dim
  std::vector<int> layer_sizes;
  Activation activation = Activation::kRelu;
  bool vib_head = false;
  int latent_dim = 0;  // required when vib_head

  void validate() const;
};

struct EncoderModel {
  EncoderSpec spec;
  std::vector<RealMatrix> weights;  // (out, in) per layer
  std::vector<RealVector> biases;
  // VIB head, present iff spec.vib_head
  RealMatrix w_mu, w_sigma;
  RealVector b_mu, b_sigma;

  int input_dim() const { return spec.layer_sizes.front(); }
  int feature_dim() const { return spec.layer_sizes.back(); }
  // Dimension of the vector fed to the classifier / used for ranking.
  int embedding_dim() const {
    return spec.vib_head ? spec.latent_dim : feature_dim();
  }
};

struct ClassifierHead {
  RealMatrix w;  // (num_classes, embedding_dim)
  RealVector b;
  int num_classes() const { return static_cast<int>(w.rows); }
};

// Fan-in-scaled uniform init (bound sqrt(6 / fan_in)), zero biases.
EncoderModel init_model(const EncoderSpec& spec, std::uint64_t seed);
ClassifierHead init_head(int embedding_dim, int num_classes,
                         std::uint64_t seed);

struct ForwardCache {
  // act[0] is the input; act[i] the output of layer i (post-activation for
  // hidden layers, linear for the last). pre[i] is layer i's pre-activation.
  std::vector<RealVector> act;
  std::vector<RealVector> pre;
};

// Feature is cache.act.back().
ForwardCache forward(const EncoderModel& model, const RealVector& input);

// Accumulates d(loss)/d(params) given d(loss)/d(feature); returns
// d(loss)/d(input) implicitly discarded.
struct EncoderGrads {
  std::vector<RealMatrix> weights;
  std::vector<RealVector> biases;
  RealMatrix w_mu, w_sigma;
  RealVector b_mu, b_sigma;
};

EncoderGrads zero_grads(const EncoderModel& model);

void encoder_backward(const EncoderModel& model, const ForwardCache& cache,
                      const RealVector& dfeature, EncoderGrads& grads);

// y = W x + b
RealVector affine(const RealMatrix& w, const RealVector& b,
                  const RealVector& x);
// Given dy, accumulates dW += dy x^T, db += dy and returns dx = W^T dy.
RealVector affine_backward(const RealMatrix& w, const RealVector& x,
                           const RealVector& dy, RealMatrix& dw,
                           RealVector& db);

}  // namespace reidlab
