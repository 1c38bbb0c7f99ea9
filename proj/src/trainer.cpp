#include "reidlab/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <set>
#include <stdexcept>

#include "reidlab/kernels.hpp"
#include "reidlab/vib.hpp"

namespace reidlab {

namespace {

double softplus(double s) { return s > 30.0 ? s : std::log1p(std::exp(s)); }
double sigmoid(double s) { return 1.0 / (1.0 + std::exp(-s)); }

constexpr double kSigmaFloor = 1e-6;

}  // namespace

RealVector prepare_input(const Sample& sample, const PipelineConfig& pipeline,
                         bool train, RngStream& rng) {
  if (!sample.is_image()) return sample.features();
  Image img = resize(sample.image(), pipeline.target_height,
                     pipeline.target_width);
  if (train) {
    img = random_erase(img, pipeline.erase_probability, pipeline.erase_area,
                       pipeline.erase_aspect, rng);
    img = random_flip(img, pipeline.flip_probability, rng);
  }
  return normalize(img, pipeline.mean, pipeline.stddev);
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("TrainConfig: batch_size >= 1");
  if (epochs < 1) throw std::invalid_argument("TrainConfig: epochs >= 1");
  if (vib_samples < 1) throw std::invalid_argument("TrainConfig: vib_samples >= 1");
  if (!(base_lr > 0.0)) throw std::invalid_argument("TrainConfig: base_lr > 0");
}

BatchEval evaluate_batch(const EncoderModel& model, const ClassifierHead& head,
                         const std::vector<RealVector>& inputs,
                         const std::vector<int>& targets,
                         const LossConfig& loss,
                         const std::vector<RealVector>& noise) {
  if (inputs.empty()) throw std::invalid_argument("evaluate_batch: empty batch");
  if (inputs.size() != targets.size())
    throw std::invalid_argument("evaluate_batch: inputs/targets mismatch");
  if (head.num_classes() != loss.num_classes)
    throw std::invalid_argument("evaluate_batch: head/loss class mismatch");
  const bool vib = model.spec.vib_head;
  if (loss.has(LossVariant::kVib) != vib)
    throw std::invalid_argument("evaluate_batch: VIB loss requires a VIB head");
  std::size_t draws = 1;
  if (vib) {
    if (noise.empty() || noise.size() % inputs.size() != 0)
      throw std::invalid_argument("evaluate_batch: need per-sample noise for VIB");
    draws = noise.size() / inputs.size();
  }

  BatchEval eval;
  eval.grads.encoder = zero_grads(model);
  eval.grads.head_w = RealMatrix(head.w.rows, head.w.cols);
  eval.grads.head_b.assign(head.b.size(), 0.0);

  const double weight = 1.0 / static_cast<double>(inputs.size() * draws);

  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const ForwardCache cache = forward(model, inputs[i]);
    const RealVector& feature = cache.act.back();

    if (!vib) {
      const RealVector logits = affine(head.w, head.b, feature);
      LossOutput out = compose_losses(loss, logits, targets[i]);
      eval.loss += weight * out.loss;
      eval.mean_predicted_entropy += weight * out.predicted_entropy;
      for (double& g : out.grad_logits) g *= weight;
      const RealVector dfeature =
          affine_backward(head.w, feature, out.grad_logits, eval.grads.head_w,
                          eval.grads.head_b);
      encoder_backward(model, cache, dfeature, eval.grads.encoder);
      continue;
    }

    const RealVector mu = affine(model.w_mu, model.b_mu, feature);
    const RealVector sraw = affine(model.w_sigma, model.b_sigma, feature);
    RealVector sigma(sraw.size());
    for (std::size_t d = 0; d < sraw.size(); ++d)
      sigma[d] = softplus(sraw[d]) + kSigmaFloor;
    const LatentGaussian latent{mu, sigma};

    RealVector dfeature(feature.size(), 0.0);
    for (std::size_t k = 0; k < draws; ++k) {
      const RealVector& eps = noise[i * draws + k];
      if (eps.size() != mu.size())
        throw std::invalid_argument("evaluate_batch: latent dimension mismatch");
      RealVector z(mu.size());
      for (std::size_t d = 0; d < z.size(); ++d)
        z[d] = mu[d] + sigma[d] * eps[d];
      const RealVector logits = affine(head.w, head.b, z);
      LossOutput out = compose_losses(loss, logits, targets[i], &latent);
      eval.loss += weight * out.loss;
      eval.mean_predicted_entropy += weight * out.predicted_entropy;
      eval.mean_sigma += weight * kernels::sum(sigma) / sigma.size();

      for (double& g : out.grad_logits) g *= weight;
      const RealVector dz = affine_backward(head.w, z, out.grad_logits,
                                            eval.grads.head_w,
                                            eval.grads.head_b);
      RealVector dmu(mu.size());
      RealVector dsraw(mu.size());
      for (std::size_t d = 0; d < mu.size(); ++d) {
        dmu[d] = dz[d] + weight * out.grad_latent_mu[d];
        const double dsigma = dz[d] * eps[d] + weight * out.grad_latent_sigma[d];
        dsraw[d] = dsigma * sigmoid(sraw[d]);
      }
      const RealVector dfeat_mu = affine_backward(
          model.w_mu, feature, dmu, eval.grads.encoder.w_mu,
          eval.grads.encoder.b_mu);
      const RealVector dfeat_sigma = affine_backward(
          model.w_sigma, feature, dsraw, eval.grads.encoder.w_sigma,
          eval.grads.encoder.b_sigma);
      for (std::size_t d = 0; d < dfeature.size(); ++d)
        dfeature[d] += dfeat_mu[d] + dfeat_sigma[d];
    }
    encoder_backward(model, cache, dfeature, eval.grads.encoder);
  }
  return eval;
}

namespace {

// Fixed slot order keeps optimizer state stable across steps.
template <typename ModelT, typename GradsT, typename Fn>
void for_each_param(ModelT& model, ClassifierHead& head, GradsT& grads,
                    Fn&& fn) {
  std::size_t slot = 0;
  for (std::size_t l = 0; l < model.weights.size(); ++l) {
    fn(slot++, std::span<double>(model.weights[l].data),
       std::span<const double>(grads.encoder.weights[l].data));
    fn(slot++, std::span<double>(model.biases[l]),
       std::span<const double>(grads.encoder.biases[l]));
  }
  if (model.spec.vib_head) {
    fn(slot++, std::span<double>(model.w_mu.data),
       std::span<const double>(grads.encoder.w_mu.data));
    fn(slot++, std::span<double>(model.b_mu),
       std::span<const double>(grads.encoder.b_mu));
    fn(slot++, std::span<double>(model.w_sigma.data),
       std::span<const double>(grads.encoder.w_sigma.data));
    fn(slot++, std::span<double>(model.b_sigma),
       std::span<const double>(grads.encoder.b_sigma));
  }
  fn(slot++, std::span<double>(head.w.data),
     std::span<const double>(grads.head_w.data));
  fn(slot++, std::span<double>(head.b),
     std::span<const double>(grads.head_b));
}

}  // namespace

BatchEval train_step(EncoderModel& model, ClassifierHead& head,
                     const std::vector<RealVector>& inputs,
                     const std::vector<int>& targets, const LossConfig& loss,
                     OptimizerState& opt, double lr, RngStream& rng,
                     int vib_samples) {
  std::vector<RealVector> noise;
  if (model.spec.vib_head) {
    noise.resize(inputs.size() * vib_samples);
    for (auto& eps : noise) {
      eps.resize(model.spec.latent_dim);
      for (double& e : eps) e = rng.normal();
    }
  }
  BatchEval eval = evaluate_batch(model, head, inputs, targets, loss, noise);
  ++opt.step;
  for_each_param(model, head, eval.grads,
                 [&](std::size_t slot, std::span<double> param,
                     std::span<const double> grad) {
                   amsgrad_update(param, grad, opt.slot(slot, param.size()),
                                  opt.step, lr, opt.cfg);
                 });
  return eval;
}

TrainResult train(const Dataset& dataset, const EncoderSpec& encoder_spec,
                  const TrainConfig& config) {
  config.validate();
  encoder_spec.validate();
  if (dataset.train.empty())
    throw std::invalid_argument("train: empty train split");

  TrainResult result;
  {
    std::set<int> ids;
    for (const auto& s : dataset.train) {
      if (s.identity < 0)
        throw std::invalid_argument("train: negative identity label");
      ids.insert(s.identity);
    }
    int next = 0;
    for (int id : ids) result.class_of_identity[id] = next++;
  }
  const int num_classes = static_cast<int>(result.class_of_identity.size());
  if (num_classes < 2)
    throw std::invalid_argument("train: need >= 2 identities to classify");

  LossConfig loss = config.loss;
  loss.num_classes = num_classes;
  loss.validate();

  RngStream root(config.seed);
  result.model = init_model(encoder_spec, config.seed);
  result.head = init_head(result.model.embedding_dim(), num_classes,
                          config.seed);

  // Precompute targets; inputs are prepared per epoch so augmentations
  // resample every pass.
  std::vector<int> targets(dataset.train.size());
  for (std::size_t i = 0; i < targets.size(); ++i)
    targets[i] = result.class_of_identity.at(dataset.train[i].identity);

  OptimizerState opt;
  opt.cfg = config.optim;
  RngStream noise_rng = root.substream("vib-noise");

  const std::size_t n = dataset.train.size();
  std::vector<std::size_t> order(n);
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const double lr = lr_schedule(epoch, config.base_lr);
    auto shuffle_rng = root.substream("shuffle").substream(epoch);
    for (std::size_t i = 0; i < n; ++i) order[i] = i;
    for (std::size_t i = n; i > 1; --i)
      std::swap(order[i - 1], order[shuffle_rng.next_below(i)]);

    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = lr;
    double seen = 0.0;
    for (std::size_t start = 0; start < n; start += config.batch_size) {
      const std::size_t stop = std::min(n, start + config.batch_size);
      std::vector<RealVector> inputs;
      std::vector<int> batch_targets;
      inputs.reserve(stop - start);
      for (std::size_t i = start; i < stop; ++i) {
        const std::size_t idx = order[i];
        auto aug_rng =
            root.substream("augment").substream(epoch).substream(idx);
        inputs.push_back(prepare_input(dataset.train[idx], config.pipeline,
                                       /*train=*/true, aug_rng));
        batch_targets.push_back(targets[idx]);
      }
      const BatchEval eval =
          train_step(result.model, result.head, inputs, batch_targets, loss,
                     opt, lr, noise_rng, config.vib_samples);
      const double w = static_cast<double>(inputs.size());
      rec.mean_loss += w * eval.loss;
      rec.mean_predicted_entropy += w * eval.mean_predicted_entropy;
      rec.mean_sigma += w * eval.mean_sigma;
      seen += w;
    }
    rec.mean_loss /= seen;
    rec.mean_predicted_entropy /= seen;
    rec.mean_sigma /= seen;
    result.report.epochs.push_back(rec);
  }
  return result;
}

RealMatrix extract_features(const EncoderModel& model,
                            const std::vector<Sample>& samples,
                            FeatureMode mode, const PipelineConfig& pipeline) {
  if (mode == FeatureMode::kVibMean && !model.spec.vib_head)
    throw std::invalid_argument("extract_features: vib_mean needs a VIB head");
  RealMatrix out(samples.size(), mode == FeatureMode::kVibMean
                                     ? model.spec.latent_dim
                                     : model.feature_dim());
  RngStream unused(0);
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const RealVector input =
        prepare_input(samples[i], pipeline, /*train=*/false, unused);
    const ForwardCache cache = forward(model, input);
    RealVector feature = cache.act.back();
    if (mode == FeatureMode::kVibMean)
      feature = affine(model.w_mu, model.b_mu, feature);
    std::copy(feature.begin(), feature.end(), out.row(i).begin());
  }
  return out;
}

// ---- checkpoint io ----------------------------------------------------

namespace {

constexpr std::uint32_t kMagic = 0x524c4b31;  // "RLK1"

void write_bytes(std::ofstream& out, const void* p, std::size_t n) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
}

template <typename T>
void write_pod(std::ofstream& out, T v) {
  write_bytes(out, &v, sizeof(T));
}

void write_vec(std::ofstream& out, const RealVector& v) {
  write_pod<std::uint64_t>(out, v.size());
  write_bytes(out, v.data(), v.size() * sizeof(double));
}

void write_mat(std::ofstream& out, const RealMatrix& m) {
  write_pod<std::uint64_t>(out, m.rows);
  write_pod<std::uint64_t>(out, m.cols);
  write_bytes(out, m.data.data(), m.data.size() * sizeof(double));
}

void read_bytes(std::ifstream& in, void* p, std::size_t n) {
  if (!in.read(static_cast<char*>(p), static_cast<std::streamsize>(n)))
    throw std::runtime_error("checkpoint: truncated file");
}

template <typename T>
T read_pod(std::ifstream& in) {
  T v;
  read_bytes(in, &v, sizeof(T));
  return v;
}

RealVector read_vec(std::ifstream& in) {
  RealVector v(read_pod<std::uint64_t>(in));
  read_bytes(in, v.data(), v.size() * sizeof(double));
  return v;
}

RealMatrix read_mat(std::ifstream& in) {
  const auto rows = read_pod<std::uint64_t>(in);
  const auto cols = read_pod<std::uint64_t>(in);
  RealMatrix m(rows, cols);
  read_bytes(in, m.data.data(), m.data.size() * sizeof(double));
  return m;
}

}  // namespace

void save_checkpoint(const std::string& path, const EncoderModel& model,
                     const ClassifierHead& head, const OptimizerState& opt) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  write_pod(out, kMagic);
  write_pod<std::uint32_t>(out, 1);  // version
  write_pod<std::uint64_t>(out, model.spec.layer_sizes.size());
  for (int s : model.spec.layer_sizes) write_pod<std::int32_t>(out, s);
  write_pod<std::uint8_t>(out, model.spec.activation == Activation::kRelu ? 0 : 1);
  write_pod<std::uint8_t>(out, model.spec.vib_head ? 1 : 0);
  write_pod<std::int32_t>(out, model.spec.latent_dim);
  for (const auto& w : model.weights) write_mat(out, w);
  for (const auto& b : model.biases) write_vec(out, b);
  if (model.spec.vib_head) {
    write_mat(out, model.w_mu);
    write_vec(out, model.b_mu);
    write_mat(out, model.w_sigma);
    write_vec(out, model.b_sigma);
  }
  write_mat(out, head.w);
  write_vec(out, head.b);
  write_pod(out, opt.cfg.beta1);
  write_pod(out, opt.cfg.beta2);
  write_pod(out, opt.cfg.eps);
  write_pod<std::int64_t>(out, opt.step);
  write_pod<std::uint64_t>(out, opt.slots.size());
  for (const auto& slot : opt.slots) {
    write_vec(out, slot.m);
    write_vec(out, slot.v);
    write_vec(out, slot.vhat);
  }
  if (!out) throw std::runtime_error("save_checkpoint: write failed: " + path);
}

void load_checkpoint(const std::string& path, EncoderModel& model,
                     ClassifierHead& head, OptimizerState& opt) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  if (read_pod<std::uint32_t>(in) != kMagic)
    throw std::runtime_error("load_checkpoint: not a reidlab checkpoint");
  if (read_pod<std::uint32_t>(in) != 1)
    throw std::runtime_error("load_checkpoint: unsupported version");
  EncoderSpec spec;
  spec.layer_sizes.resize(read_pod<std::uint64_t>(in));
  for (int& s : spec.layer_sizes) s = read_pod<std::int32_t>(in);
  spec.activation = read_pod<std::uint8_t>(in) == 0 ? Activation::kRelu
                                                    : Activation::kTanh;
  spec.vib_head = read_pod<std::uint8_t>(in) != 0;
  spec.latent_dim = read_pod<std::int32_t>(in);
  model = EncoderModel{};
  model.spec = spec;
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l)
    model.weights.push_back(read_mat(in));
  for (std::size_t l = 0; l + 1 < spec.layer_sizes.size(); ++l)
    model.biases.push_back(read_vec(in));
  if (spec.vib_head) {
    model.w_mu = read_mat(in);
    model.b_mu = read_vec(in);
    model.w_sigma = read_mat(in);
    model.b_sigma = read_vec(in);
  }
  head.w = read_mat(in);
  head.b = read_vec(in);
  opt = OptimizerState{};
  opt.cfg.beta1 = read_pod<double>(in);
  opt.cfg.beta2 = read_pod<double>(in);
  opt.cfg.eps = read_pod<double>(in);
  opt.step = read_pod<std::int64_t>(in);
  opt.slots.resize(read_pod<std::uint64_t>(in));
  for (auto& slot : opt.slots) {
    slot.m = read_vec(in);
    slot.v = read_vec(in);
    slot.vhat = read_vec(in);
  }
}

}  // namespace reidlab
