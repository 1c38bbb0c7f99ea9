#include "reidlab/model.hpp"

#include <cmath>
#include <stdexcept>

#include "reidlab/kernels.hpp"

namespace reidlab {

Activation activation_from_name(const std::string& name) {
  if (name == "relu") return Activation::kRelu;
  if (name == "tanh") return Activation::kTanh;
  throw std::invalid_argument("unknown activation: " + name);
}

const char* activation_name(Activation a) {
  return a == Activation::kRelu ? "relu" : "tanh";
}

void EncoderSpec::validate() const {
  if (layer_sizes.size() < 2)
    throw std::invalid_argument("EncoderSpec: need at least input and feature dims");
  for (int s : layer_sizes)
    if (s <= 0) throw std::invalid_argument("EncoderSpec: zero-width layer");
  if (vib_head && latent_dim <= 0)
    throw std::invalid_argument("EncoderSpec: vib head requires latent_dim > 0");
}

namespace {

RealMatrix init_weight(std::size_t out, std::size_t in, RngStream& rng) {
  RealMatrix w(out, in);
  const double bound = std::sqrt(6.0 / static_cast<double>(in));
  for (double& v : w.data) v = rng.uniform(-bound, bound);
  return w;
}

}  // namespace

EncoderModel init_model(const EncoderSpec& spec, std::uint64_t seed) {
  spec.validate();
  EncoderModel m;
  m.spec = spec;
  RngStream rng = RngStream(seed).substream("model-init");
  for (std::size_t i = 0; i + 1 < spec.layer_sizes.size(); ++i) {
    auto layer_rng = rng.substream(i);
    m.weights.push_back(init_weight(spec.layer_sizes[i + 1],
                                    spec.layer_sizes[i], layer_rng));
    m.biases.emplace_back(spec.layer_sizes[i + 1], 0.0);
  }
  if (spec.vib_head) {
    auto mu_rng = rng.substream("mu");
    auto sigma_rng = rng.substream("sigma");
    m.w_mu = init_weight(spec.latent_dim, spec.layer_sizes.back(), mu_rng);
    m.w_sigma = init_weight(spec.latent_dim, spec.layer_sizes.back(), sigma_rng);
    m.b_mu.assign(spec.latent_dim, 0.0);
    m.b_sigma.assign(spec.latent_dim, 0.0);
  }
  return m;
}

ClassifierHead init_head(int embedding_dim, int num_classes,
                         std::uint64_t seed) {
  if (embedding_dim <= 0 || num_classes < 2)
    throw std::invalid_argument("init_head: bad dimensions");
  RngStream rng = RngStream(seed).substream("head-init");
  ClassifierHead h;
  h.w = init_weight(num_classes, embedding_dim, rng);
  h.b.assign(num_classes, 0.0);
  return h;
}

RealVector affine(const RealMatrix& w, const RealVector& b,
                  const RealVector& x) {
  if (w.cols != x.size() || w.rows != b.size())
    throw std::invalid_argument("affine: shape mismatch");
  RealVector y(w.rows);
  for (std::size_t r = 0; r < w.rows; ++r)
    y[r] = kernels::dot(w.row(r), x) + b[r];
  return y;
}

RealVector affine_backward(const RealMatrix& w, const RealVector& x,
                           const RealVector& dy, RealMatrix& dw,
                           RealVector& db) {
  RealVector dx(w.cols, 0.0);
  for (std::size_t r = 0; r < w.rows; ++r) {
    kernels::axpy(dy[r], x, dw.row(r));
    db[r] += dy[r];
    kernels::axpy(dy[r], w.row(r), dx);
  }
  return dx;
}

ForwardCache forward(const EncoderModel& model, const RealVector& input) {
  if (input.size() != static_cast<std::size_t>(model.input_dim()))
    throw std::invalid_argument("forward: input length mismatch");
  ForwardCache cache;
  cache.act.push_back(input);
  cache.pre.resize(model.weights.size());
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    cache.pre[l] = affine(model.weights[l], model.biases[l], cache.act.back());
    RealVector out = cache.pre[l];
    if (l + 1 < model.weights.size()) {
      // hidden layers only; the feature layer stays linear
      if (model.spec.activation == Activation::kRelu) {
        for (double& v : out) v = v > 0.0 ? v : 0.0;
      } else {
        for (double& v : out) v = std::tanh(v);
      }
    }
    cache.act.push_back(std::move(out));
  }
  return cache;
}

EncoderGrads zero_grads(const EncoderModel& model) {
  EncoderGrads g;
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    g.weights.emplace_back(model.weights[l].rows, model.weights[l].cols);
    g.biases.emplace_back(model.biases[l].size(), 0.0);
  }
  if (model.spec.vib_head) {
    g.w_mu = RealMatrix(model.w_mu.rows, model.w_mu.cols);
    g.w_sigma = RealMatrix(model.w_sigma.rows, model.w_sigma.cols);
    g.b_mu.assign(model.b_mu.size(), 0.0);
    g.b_sigma.assign(model.b_sigma.size(), 0.0);
  }
  return g;
}

void encoder_backward(const EncoderModel& model, const ForwardCache& cache,
                      const RealVector& dfeature, EncoderGrads& grads) {
  RealVector delta = dfeature;
  for (std::size_t l = model.weights.size(); l-- > 0;) {
    if (l + 1 < model.weights.size()) {
      // chain through the hidden activation
      for (std::size_t i = 0; i < delta.size(); ++i) {
        if (model.spec.activation == Activation::kRelu) {
          if (cache.pre[l][i] <= 0.0) delta[i] = 0.0;
        } else {
          const double t = std::tanh(cache.pre[l][i]);
          delta[i] *= 1.0 - t * t;
        }
      }
    }
    delta = affine_backward(model.weights[l], cache.act[l], delta,
                            grads.weights[l], grads.biases[l]);
  }
}

}  // namespace reidlab
