#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <string>

#include "reidlab/losses.hpp"
#include "reidlab/vib.hpp"

using namespace reidlab;

namespace {

RealVector random_logits(std::size_t n, RngStream& rng, double span = 5.0) {
  RealVector z(n);
  for (double& v : z) v = rng.uniform(-span, span);
  return z;
}

TargetDistribution random_probs(std::size_t n, RngStream& rng) {
  TargetDistribution p{RealVector(n)};
  double sum = 0.0;
  for (double& v : p.probs) {
    v = rng.uniform(0.01, 1.0);
    sum += v;
  }
  for (double& v : p.probs) v /= sum;
  return p;
}

}  // namespace

TEST_CASE("cross entropy on symmetric logits") {
  const LossOutput out = cross_entropy(RealVector{0, 0, 0, 0}, 2, 1.0);
  CHECK(out.loss == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  CHECK(out.grad_logits[0] == doctest::Approx(0.25));
  CHECK(out.grad_logits[2] == doctest::Approx(-0.75));
}

TEST_CASE("cross entropy on confident logits") {
  const LossOutput out = cross_entropy(RealVector{10, 0, 0}, 0, 1.0);
  // logsumexp oracle: ln(1 + 2 e^-10)
  CHECK(out.loss == doctest::Approx(std::log1p(2.0 * std::exp(-10.0))).epsilon(1e-12));
}

TEST_CASE("cross entropy scales with alpha and validates the target") {
  const LossOutput a1 = cross_entropy(RealVector{1, 2, 3}, 1, 1.0);
  const LossOutput a2 = cross_entropy(RealVector{1, 2, 3}, 1, 2.5);
  CHECK(a2.loss == doctest::Approx(2.5 * a1.loss));
  CHECK_THROWS_AS(cross_entropy(RealVector{1, 2}, 2, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(cross_entropy(RealVector{1, 2}, -1, 1.0), std::invalid_argument);
}

TEST_CASE("smooth labels closed form and validity") {
  const TargetDistribution q = smooth_labels(2, 4, 0.4);
  CHECK(q.probs[0] == doctest::Approx(0.1));
  CHECK(q.probs[1] == doctest::Approx(0.1));
  CHECK(q.probs[2] == doctest::Approx(0.7));
  CHECK(q.probs[3] == doctest::Approx(0.1));

  const TargetDistribution onehot = smooth_labels(1, 3, 0.0);
  CHECK(onehot.probs[1] == 1.0);
  CHECK(onehot.probs[0] == 0.0);

  RngStream rng(1);
  for (int trial = 0; trial < 500; ++trial) {
    const int c = 2 + static_cast<int>(rng.next_below(49));
    const double beta = rng.uniform(0.0, 0.999);
    const auto dist = smooth_labels(static_cast<int>(rng.next_below(c)), c, beta);
    dist.validate();
    double sum = 0.0;
    for (double p : dist.probs) sum += p;
    CHECK(std::abs(sum - 1.0) <= 1e-12);
  }
  CHECK_THROWS_AS(smooth_labels(0, 4, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(smooth_labels(0, 4, -0.1), std::invalid_argument);
}

TEST_CASE("label smoothing reduces to cross entropy at beta 0") {
  RngStream rng(2);
  const RealVector z = random_logits(5, rng);
  const LossOutput ls = label_smoothing_loss(z, 3, 1.7, 0.0);
  const LossOutput xe = cross_entropy(z, 3, 1.7);
  CHECK(ls.loss == doctest::Approx(xe.loss).epsilon(1e-14));
  for (std::size_t i = 0; i < z.size(); ++i)
    CHECK(ls.grad_logits[i] == doctest::Approx(xe.grad_logits[i]).epsilon(1e-14));
}

TEST_CASE("label smoothing at uniform logits is ln C") {
  for (double beta : {0.0, 0.1, 0.5}) {
    const LossOutput out =
        label_smoothing_loss(RealVector{0, 0, 0, 0}, 1, 1.0, beta);
    CHECK(out.loss == doctest::Approx(std::log(4.0)).epsilon(1e-12));
  }
}

TEST_CASE("label smoothing identity: convex mixture form") {
  // (1-b) H(q,p) + b KL[u,p] = H(q_ls, p) - b ln C
  RngStream rng(4);
  for (int trial = 0; trial < 1000; ++trial) {
    const int c = 2 + static_cast<int>(rng.next_below(12));
    const RealVector z = random_logits(c, rng);
    const int target = static_cast<int>(rng.next_below(c));
    const double beta = rng.uniform(0.0, 0.99);

    const double h_qp = cross_entropy(z, target, 1.0).loss;
    TargetDistribution p{softmax(z)};
    const double kl_up = kl_categorical(uniform_distribution(c), p);
    const double lhs = (1.0 - beta) * h_qp + beta * kl_up;

    const double h_ls = label_smoothing_loss(z, target, 1.0, beta).loss;
    CHECK(std::abs(lhs - (h_ls - beta * std::log(c))) <= 1e-10);
  }
}

TEST_CASE("entropy closed forms and validation") {
  CHECK(entropy(RealVector(10, 0.1)) == doctest::Approx(std::log(10.0)));
  CHECK(entropy(RealVector{0, 1, 0}) == 0.0);
  CHECK(entropy(RealVector{0.5, 0.5}) == doctest::Approx(std::log(2.0)));
  CHECK_THROWS_AS(entropy(RealVector{0.5, 0.6}), std::invalid_argument);
  CHECK_THROWS_AS(entropy(RealVector{-0.1, 1.1}), std::invalid_argument);
}

TEST_CASE("kl of equal distributions is zero") {
  RngStream rng(6);
  const TargetDistribution p = random_probs(7, rng);
  CHECK(kl_categorical(p, p) == doctest::Approx(0.0).epsilon(1e-14));
}

TEST_CASE("kl against uniform equals ln C minus entropy") {
  RngStream rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const int c = 2 + static_cast<int>(rng.next_below(49));
    const TargetDistribution p = random_probs(c, rng);
    const double kl = kl_categorical(p, uniform_distribution(c));
    CHECK(std::abs(kl - (std::log(c) - entropy(p.probs))) <= 1e-10);
    CHECK(kl >= 0.0);
  }
}

TEST_CASE("kl of uniform against a skewed distribution") {
  // direct summation oracle: sum_i (1/4) ln((1/4)/p_i)
  const TargetDistribution p{RealVector{0.7, 0.1, 0.1, 0.1}};
  double expected = 0.0;
  for (double pi : p.probs) expected += 0.25 * std::log(0.25 / pi);
  CHECK(expected == doctest::Approx(0.429814).epsilon(1e-6));
  CHECK(kl_categorical(uniform_distribution(4), p) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("kl rejects zero support mismatch") {
  const TargetDistribution p{RealVector{0.5, 0.5}};
  const TargetDistribution q{RealVector{1.0, 0.0}};
  CHECK_THROWS_AS(kl_categorical(p, q), std::invalid_argument);
}

TEST_CASE("confidence penalty closed form at uniform logits") {
  const LossOutput out =
      confidence_penalty_loss(RealVector{0, 0, 0, 0}, 0, 1.0, 0.085);
  CHECK(out.loss == doctest::Approx((1.0 - 0.085) * std::log(4.0)).epsilon(1e-12));
  CHECK(out.loss == doctest::Approx(1.268459).epsilon(1e-6));
}

TEST_CASE("confidence penalty reduces to cross entropy at beta 0") {
  RngStream rng(8);
  const RealVector z = random_logits(6, rng);
  const LossOutput cp = confidence_penalty_loss(z, 2, 1.0, 0.0);
  const LossOutput xe = cross_entropy(z, 2, 1.0);
  CHECK(cp.loss == doctest::Approx(xe.loss).epsilon(1e-14));
}

TEST_CASE("confidence penalty identity: reverse-KL form") {
  // a H(q,p) + b KL[p,u] = a H(q,p) - b H(p) + b ln C
  RngStream rng(9);
  for (int trial = 0; trial < 1000; ++trial) {
    const int c = 2 + static_cast<int>(rng.next_below(12));
    const RealVector z = random_logits(c, rng);
    const int target = static_cast<int>(rng.next_below(c));
    const double alpha = rng.uniform(0.1, 3.0);
    const double beta = rng.uniform(0.0, 1.0);

    TargetDistribution p{softmax(z)};
    const double lhs = alpha * cross_entropy(z, target, 1.0).loss +
                       beta * kl_categorical(p, uniform_distribution(c));
    const double rhs =
        confidence_penalty_loss(z, target, alpha, beta).loss + beta * std::log(c);
    CHECK(std::abs(lhs - rhs) <= 1e-10);
  }
}

TEST_CASE("entropy identity: KL[p,u] + H(p) = ln C") {
  RngStream rng(10);
  for (int c : {2, 5, 10, 50}) {
    for (int trial = 0; trial < 250; ++trial) {
      const TargetDistribution p = random_probs(c, rng);
      const double sum = kl_categorical(p, uniform_distribution(c)) +
                         entropy(p.probs);
      CHECK(std::abs(sum - std::log(c)) <= 1e-10);
    }
  }
}

TEST_CASE("analytic gradients match finite differences") {
  RngStream rng(11);
  const double h = 1e-5;
  for (int trial = 0; trial < 1000; ++trial) {
    const int c = 2 + static_cast<int>(rng.next_below(8));
    const RealVector z = random_logits(c, rng, 4.0);
    const int target = static_cast<int>(rng.next_below(c));
    const double alpha = rng.uniform(0.1, 3.0);
    const double beta_ls = rng.uniform(0.0, 0.95);
    const double beta_cp = rng.uniform(0.0, 1.0);

    const auto check = [&](const LossOutput& out, auto&& fn) {
      const RealVector fd = finite_diff_grad(fn, z, h);
      for (std::size_t i = 0; i < z.size(); ++i) {
        const double scale = std::max(1.0, std::abs(fd[i]));
        CHECK(std::abs(out.grad_logits[i] - fd[i]) <= 1e-6 * scale);
      }
    };
    check(cross_entropy(z, target, alpha), [&](const RealVector& x) {
      return cross_entropy(x, target, alpha).loss;
    });
    check(label_smoothing_loss(z, target, alpha, beta_ls),
          [&](const RealVector& x) {
            return label_smoothing_loss(x, target, alpha, beta_ls).loss;
          });
    check(confidence_penalty_loss(z, target, alpha, beta_cp),
          [&](const RealVector& x) {
            return confidence_penalty_loss(x, target, alpha, beta_cp).loss;
          });
  }
}

TEST_CASE("larger beta raises the entropy of the CP minimizer") {
  // 2-class closed form: one-hot q, p parameterized directly
  const auto minimizer_entropy = [](double beta) {
    double best_p = 0.5, best = 1e300;
    for (double p = 1e-4; p < 1.0; p += 1e-4) {
      const double loss = -std::log(p) -
                          beta * (-(p * std::log(p) +
                                    (1 - p) * std::log(1 - p)));
      if (loss < best) {
        best = loss;
        best_p = p;
      }
    }
    return -(best_p * std::log(best_p) + (1 - best_p) * std::log(1 - best_p));
  };
  double prev = minimizer_entropy(0.0);
  for (double beta : {0.2, 0.4, 0.6, 0.8}) {
    const double h = minimizer_entropy(beta);
    CHECK(h > prev);
    prev = h;
  }
}

TEST_CASE("compose single term equals the direct call") {
  RngStream rng(12);
  const RealVector z = random_logits(5, rng);
  LossConfig cfg{{{LossVariant::kConfidencePenalty, 0.085}}, 1.3, 5};
  const LossOutput composed = compose_losses(cfg, z, 1);
  const LossOutput direct = confidence_penalty_loss(z, 1, 1.3, 0.085);
  CHECK(composed.loss == doctest::Approx(direct.loss).epsilon(1e-14));
  for (std::size_t i = 0; i < z.size(); ++i)
    CHECK(composed.grad_logits[i] ==
          doctest::Approx(direct.grad_logits[i]).epsilon(1e-14));
}

TEST_CASE("compose with zero betas is plain cross entropy") {
  RngStream rng(13);
  const RealVector z = random_logits(4, rng);
  LossConfig cfg{{{LossVariant::kLabelSmoothing, 0.0},
                  {LossVariant::kConfidencePenalty, 0.0}},
                 1.0, 4};
  const LossOutput composed = compose_losses(cfg, z, 2);
  const LossOutput xe = cross_entropy(z, 2, 1.0);
  CHECK(composed.loss == doctest::Approx(xe.loss).epsilon(1e-14));
}

TEST_CASE("compose ls+cp matches the term-sum oracle") {
  // convention: one alpha*H(q_ls, p) plus the CP penalty; equivalently the
  // sum of both standalone losses minus the duplicated alpha*H(q, p)
  RngStream rng(14);
  for (int trial = 0; trial < 100; ++trial) {
    const int c = 2 + static_cast<int>(rng.next_below(8));
    const RealVector z = random_logits(c, rng);
    const int target = static_cast<int>(rng.next_below(c));
    const double alpha = rng.uniform(0.5, 2.0);

    LossConfig cfg{{{LossVariant::kLabelSmoothing, 0.1},
                    {LossVariant::kConfidencePenalty, 0.085}},
                   alpha, c};
    const double composed = compose_losses(cfg, z, target).loss;
    const double oracle = label_smoothing_loss(z, target, alpha, 0.1).loss +
                          confidence_penalty_loss(z, target, alpha, 0.085).loss -
                          cross_entropy(z, target, alpha).loss;
    CHECK(std::abs(composed - oracle) <= 1e-12);
  }
}

TEST_CASE("compose rejects a VIB term without a latent") {
  LossConfig cfg{{{LossVariant::kVib, 0.01}}, 1.0, 3};
  CHECK_THROWS_AS(compose_losses(cfg, RealVector{0, 0, 0}, 0),
                  std::invalid_argument);
}

TEST_CASE("loss config validation") {
  CHECK_THROWS_AS(
      (LossConfig{{{LossVariant::kLabelSmoothing, 1.0}}, 1.0, 4}).validate(),
      std::invalid_argument);
  CHECK_THROWS_AS((LossConfig{{{LossVariant::kPlainXent, 0.0}}, -1.0, 4}).validate(),
                  std::invalid_argument);
  CHECK_THROWS_AS(
      (LossConfig{{{LossVariant::kVib, 0.1}, {LossVariant::kVib, 0.1}}, 1.0, 4})
          .validate(),
      std::invalid_argument);
}
