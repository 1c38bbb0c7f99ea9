#include <doctest.h>

#include <cmath>
#include <stdexcept>
#include <string>

#include "reidlab/trainer.hpp"

using namespace reidlab;

namespace {

Dataset separable_toy(int per_class, double sigma, std::uint64_t seed) {
  const double centers[3][2] = {{0.0, 0.0}, {5.0, 0.0}, {0.0, 5.0}};
  RngStream rng(seed);
  Dataset ds;
  for (int c = 0; c < 3; ++c)
    for (int i = 0; i < per_class; ++i) {
      Sample s;
      s.payload = RealVector{centers[c][0] + sigma * rng.normal(),
                             centers[c][1] + sigma * rng.normal()};
      s.identity = c;
      s.camera = i % 2;
      ds.train.push_back(std::move(s));
    }
  return ds;
}

TrainConfig quick_config(std::vector<LossTerm> terms, int epochs,
                         double lr = 5e-3) {
  TrainConfig tc;
  tc.loss.terms = std::move(terms);
  tc.loss.alpha = 1.0;
  tc.base_lr = lr;
  tc.epochs = epochs;
  tc.batch_size = 16;
  tc.seed = 11;
  return tc;
}

}  // namespace

TEST_CASE("training is bit-deterministic given the seed") {
  const Dataset ds = separable_toy(10, 0.3, 1);
  EncoderSpec spec;
  spec.layer_sizes = {2, 8, 4};
  const TrainConfig tc = quick_config({{LossVariant::kPlainXent, 0.0}}, 5);

  const TrainResult a = train(ds, spec, tc);
  const TrainResult b = train(ds, spec, tc);
  REQUIRE(a.report.epochs.size() == 5);
  for (std::size_t e = 0; e < 5; ++e) {
    CHECK(a.report.epochs[e].mean_loss == b.report.epochs[e].mean_loss);
    CHECK(a.report.epochs[e].mean_predicted_entropy ==
          b.report.epochs[e].mean_predicted_entropy);
  }
  CHECK(a.model.weights[0].data == b.model.weights[0].data);
}

TEST_CASE("separable toy data converges under plain cross entropy") {
  const Dataset ds = separable_toy(20, 0.3, 2);
  EncoderSpec spec;
  spec.layer_sizes = {2, 8, 4};
  const TrainResult r =
      train(ds, spec, quick_config({{LossVariant::kPlainXent, 0.0}}, 50));
  CHECK(r.report.epochs.back().mean_loss < 0.1);
}

TEST_CASE("report has one record per epoch with the scheduled lr") {
  const Dataset ds = separable_toy(5, 0.3, 3);
  EncoderSpec spec;
  spec.layer_sizes = {2, 4, 3};
  const TrainResult r =
      train(ds, spec, quick_config({{LossVariant::kPlainXent, 0.0}}, 25));
  REQUIRE(r.report.epochs.size() == 25);
  CHECK(r.report.epochs[0].epoch == 1);
  CHECK(r.report.epochs[18].lr == doctest::Approx(5e-3));
  CHECK(r.report.epochs[19].lr == doctest::Approx(5e-4));
}

TEST_CASE("vib training runs and tracks mean sigma") {
  const Dataset ds = separable_toy(10, 0.3, 4);
  EncoderSpec spec;
  spec.layer_sizes = {2, 8, 4};
  spec.vib_head = true;
  spec.latent_dim = 2;
  const TrainResult r =
      train(ds, spec, quick_config({{LossVariant::kVib, 0.01}}, 5));
  for (const auto& rec : r.report.epochs) CHECK(rec.mean_sigma > 0.0);
}

TEST_CASE("train rejects bad datasets") {
  Dataset empty;
  EncoderSpec spec;
  spec.layer_sizes = {2, 4, 3};
  CHECK_THROWS_AS(train(empty, spec, quick_config({{LossVariant::kPlainXent, 0.0}}, 1)),
                  std::invalid_argument);

  Dataset bad = separable_toy(5, 0.3, 5);
  bad.train[0].identity = -3;
  CHECK_THROWS_AS(train(bad, spec, quick_config({{LossVariant::kPlainXent, 0.0}}, 1)),
                  std::invalid_argument);
}

TEST_CASE("feature extraction is deterministic and mode-checked") {
  const Dataset ds = separable_toy(6, 0.3, 6);
  EncoderSpec spec;
  spec.layer_sizes = {2, 6, 3};
  const TrainResult r =
      train(ds, spec, quick_config({{LossVariant::kPlainXent, 0.0}}, 3));

  const RealMatrix f1 =
      extract_features(r.model, ds.train, FeatureMode::kDeterministic);
  const RealMatrix f2 =
      extract_features(r.model, ds.train, FeatureMode::kDeterministic);
  CHECK(f1.data == f2.data);
  CHECK(f1.rows == ds.train.size());
  CHECK(f1.cols == 3);
  CHECK_THROWS_AS(extract_features(r.model, ds.train, FeatureMode::kVibMean),
                  std::invalid_argument);
}

TEST_CASE("vib_mean features come from the mu head") {
  EncoderSpec spec;
  spec.layer_sizes = {2, 4};
  spec.vib_head = true;
  spec.latent_dim = 3;
  EncoderModel model = init_model(spec, 7);
  for (double& w : model.w_mu.data) w = 0.0;

  Sample s;
  s.payload = RealVector{0.4, -0.2};
  const RealMatrix f = extract_features(model, {s}, FeatureMode::kVibMean);
  CHECK(f.cols == 3);
  for (double v : f.data) CHECK(v == 0.0);
}

TEST_CASE("eval inputs skip the train-only augmentations") {
  Image img;
  img.height = 8;
  img.width = 6;
  img.channels = 3;
  img.pixels.assign(8 * 6 * 3, 0.0);
  for (std::size_t i = 0; i < img.pixels.size(); ++i)
    img.pixels[i] = static_cast<double>(i % 256);
  Sample s;
  s.payload = img;

  PipelineConfig pipeline;
  pipeline.target_height = 8;
  pipeline.target_width = 6;
  RngStream rng(8);
  const RealVector a = prepare_input(s, pipeline, /*train=*/false, rng);
  const RealVector b = prepare_input(s, pipeline, /*train=*/false, rng);
  CHECK(a == b);  // no randomness consumed outside training
}
