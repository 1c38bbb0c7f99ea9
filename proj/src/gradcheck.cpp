#include "reidlab/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

#include "reidlab/vib.hpp"

namespace reidlab {

double grad_rel_err(const RealVector& analytic, const RealVector& reference) {
  if (analytic.size() != reference.size())
    throw std::invalid_argument("grad_rel_err: length mismatch");
  double diff = 0.0, scale = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff = std::max(diff, std::abs(analytic[i] - reference[i]));
    scale = std::max(scale, std::abs(reference[i]));
  }
  return diff / std::max(scale, 1e-12);
}

namespace {

constexpr double kH = 1e-5;
constexpr double kLossTol = 1e-6;
constexpr double kModelTol = 1e-5;

struct Combo {
  std::string name;
  std::vector<LossTerm> terms;
};

std::vector<Combo> all_combos() {
  const LossTerm ls{LossVariant::kLabelSmoothing, 0.1};
  const LossTerm cp{LossVariant::kConfidencePenalty, 0.085};
  const LossTerm vib{LossVariant::kVib, 0.01};
  return {
      {"xent", {{LossVariant::kPlainXent, 0.0}}},
      {"ls", {ls}},
      {"cp", {cp}},
      {"vib", {vib}},
      {"ls+cp", {ls, cp}},
      {"ls+vib", {ls, vib}},
      {"cp+vib", {cp, vib}},
      {"ls+cp+vib", {ls, cp, vib}},
  };
}

GradCheckCase make_case(std::string name, double err, double tol) {
  return {std::move(name), err, tol, err <= tol};
}

}  // namespace

std::vector<GradCheckCase> loss_gradchecks(std::uint64_t seed,
                                           bool inject_fault) {
  RngStream rng(seed);
  const int num_classes = 6;
  const int latent_dim = 5;
  std::vector<GradCheckCase> cases;

  for (const Combo& combo : all_combos()) {
    LossConfig cfg{combo.terms, /*alpha=*/1.3, num_classes};
    double worst = 0.0;
    for (int trial = 0; trial < 5; ++trial) {
      RealVector logits(num_classes);
      for (double& z : logits) z = rng.uniform(-4.0, 4.0);
      const int target = static_cast<int>(rng.next_below(num_classes));

      LatentGaussian latent;
      const bool has_vib = cfg.has(LossVariant::kVib);
      if (has_vib) {
        latent.mu.resize(latent_dim);
        latent.sigma.resize(latent_dim);
        for (double& m : latent.mu) m = rng.uniform(-2.0, 2.0);
        for (double& s : latent.sigma) s = rng.uniform(0.3, 3.0);
      }
      const LatentGaussian* latent_ptr = has_vib ? &latent : nullptr;

      LossOutput out = compose_losses(cfg, logits, target, latent_ptr);
      if (inject_fault)
        for (double& g : out.grad_logits) g = -g;

      const RealVector fd_logits = finite_diff_grad(
          [&](const RealVector& z) {
            return compose_losses(cfg, z, target, latent_ptr).loss;
          },
          logits, kH);
      worst = std::max(worst, grad_rel_err(out.grad_logits, fd_logits));

      if (has_vib) {
        const RealVector fd_mu = finite_diff_grad(
            [&](const RealVector& mu) {
              LatentGaussian g{mu, latent.sigma};
              return compose_losses(cfg, logits, target, &g).loss;
            },
            latent.mu, kH);
        worst = std::max(worst, grad_rel_err(out.grad_latent_mu, fd_mu));
        const RealVector fd_sigma = finite_diff_grad(
            [&](const RealVector& sigma) {
              LatentGaussian g{latent.mu, sigma};
              return compose_losses(cfg, logits, target, &g).loss;
            },
            latent.sigma, kH);
        worst = std::max(worst, grad_rel_err(out.grad_latent_sigma, fd_sigma));
      }
    }
    cases.push_back(make_case("loss/" + combo.name, worst, kLossTol));
  }
  return cases;
}

RealVector flatten_params(const EncoderModel& model,
                          const ClassifierHead& head) {
  RealVector flat;
  for (const auto& w : model.weights)
    flat.insert(flat.end(), w.data.begin(), w.data.end());
  for (const auto& b : model.biases) flat.insert(flat.end(), b.begin(), b.end());
  if (model.spec.vib_head) {
    flat.insert(flat.end(), model.w_mu.data.begin(), model.w_mu.data.end());
    flat.insert(flat.end(), model.b_mu.begin(), model.b_mu.end());
    flat.insert(flat.end(), model.w_sigma.data.begin(), model.w_sigma.data.end());
    flat.insert(flat.end(), model.b_sigma.begin(), model.b_sigma.end());
  }
  flat.insert(flat.end(), head.w.data.begin(), head.w.data.end());
  flat.insert(flat.end(), head.b.begin(), head.b.end());
  return flat;
}

void unflatten_params(const RealVector& flat, EncoderModel& model,
                      ClassifierHead& head) {
  std::size_t pos = 0;
  auto take = [&](auto& container) {
    for (double& v : container) v = flat[pos++];
  };
  for (auto& w : model.weights) take(w.data);
  for (auto& b : model.biases) take(b);
  if (model.spec.vib_head) {
    take(model.w_mu.data);
    take(model.b_mu);
    take(model.w_sigma.data);
    take(model.b_sigma);
  }
  take(head.w.data);
  take(head.b);
  if (pos != flat.size())
    throw std::invalid_argument("unflatten_params: length mismatch");
}

RealVector flatten_grads(const EncoderModel& model, const BatchGrads& grads) {
  RealVector flat;
  for (const auto& w : grads.encoder.weights)
    flat.insert(flat.end(), w.data.begin(), w.data.end());
  for (const auto& b : grads.encoder.biases)
    flat.insert(flat.end(), b.begin(), b.end());
  if (model.spec.vib_head) {
    flat.insert(flat.end(), grads.encoder.w_mu.data.begin(),
                grads.encoder.w_mu.data.end());
    flat.insert(flat.end(), grads.encoder.b_mu.begin(),
                grads.encoder.b_mu.end());
    flat.insert(flat.end(), grads.encoder.w_sigma.data.begin(),
                grads.encoder.w_sigma.data.end());
    flat.insert(flat.end(), grads.encoder.b_sigma.begin(),
                grads.encoder.b_sigma.end());
  }
  flat.insert(flat.end(), grads.head_w.data.begin(), grads.head_w.data.end());
  flat.insert(flat.end(), grads.head_b.begin(), grads.head_b.end());
  return flat;
}

std::vector<GradCheckCase> model_gradchecks(std::uint64_t seed,
                                            bool inject_fault) {
  RngStream rng(seed);
  const int num_classes = 3;
  std::vector<GradCheckCase> cases;

  for (const Combo& combo : all_combos()) {
    LossConfig cfg{combo.terms, /*alpha=*/1.0, num_classes};
    const bool has_vib = cfg.has(LossVariant::kVib);

    EncoderSpec spec;
    spec.layer_sizes = {4, 6, 5};
    spec.activation = Activation::kTanh;  // smooth, so FD is clean
    spec.vib_head = has_vib;
    spec.latent_dim = has_vib ? 3 : 0;

    EncoderModel model = init_model(spec, seed + 17);
    ClassifierHead head = init_head(model.embedding_dim(), num_classes,
                                    seed + 17);

    std::vector<RealVector> inputs;
    std::vector<int> targets;
    for (int i = 0; i < 4; ++i) {
      RealVector x(4);
      for (double& v : x) v = rng.uniform(-1.0, 1.0);
      inputs.push_back(std::move(x));
      targets.push_back(static_cast<int>(rng.next_below(num_classes)));
    }
    std::vector<RealVector> noise;
    if (has_vib)
      for (std::size_t i = 0; i < inputs.size(); ++i) {
        RealVector eps(spec.latent_dim);
        for (double& e : eps) e = rng.normal();
        noise.push_back(std::move(eps));
      }

    const BatchEval eval = evaluate_batch(model, head, inputs, targets, cfg, noise);
    RealVector analytic = flatten_grads(model, eval.grads);
    if (inject_fault)
      for (double& g : analytic) g = -g;

    const RealVector theta = flatten_params(model, head);
    const RealVector fd = finite_diff_grad(
        [&](const RealVector& t) {
          EncoderModel m = model;
          ClassifierHead h = head;
          unflatten_params(t, m, h);
          return evaluate_batch(m, h, inputs, targets, cfg, noise).loss;
        },
        theta, kH);
    cases.push_back(make_case("model/" + combo.name,
                              grad_rel_err(analytic, fd), kModelTol));
  }
  return cases;
}

}  // namespace reidlab
