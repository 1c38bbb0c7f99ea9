#pragma once

// The training loop: per-epoch shuffle, mini-batching, explicit backward
// through the classifier (and VIB head) into the encoder, AMSGrad updates,
// and feature extraction for ranking.

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "reidlab/data.hpp"
#include "reidlab/losses.hpp"
#include "reidlab/model.hpp"
#include "reidlab/optim.hpp"

namespace reidlab {

// Image-payload preprocessing. Feature payloads pass through untouched.
struct PipelineConfig {
  int target_height = 256;
  int target_width = 128;
  double flip_probability = 0.5;
  double erase_probability = 0.5;
  std::pair<double, double> erase_area = {0.02, 0.4};
  std::pair<double, double> erase_aspect = {0.3, 3.33};
  RealVector mean = {0.485, 0.456, 0.406};  // ImageNet statistics
  RealVector stddev = {0.229, 0.224, 0.225};
};

// Augmentations run only when `train` is set; eval inputs get resize +
// normalize alone.
RealVector prepare_input(const Sample& sample, const PipelineConfig& pipeline,
                         bool train, RngStream& rng);

struct TrainConfig {
  LossConfig loss;  // num_classes is overwritten from the train split
  double base_lr = 5e-4;
  int epochs = 60;
  int batch_size = 32;
  std::uint64_t seed = 0;
  int vib_samples = 1;
  AmsGradConfig optim;
  PipelineConfig pipeline;

  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double mean_loss = 0.0;
  double mean_predicted_entropy = 0.0;
  double mean_sigma = 0.0;  // VIB only, else 0
  double lr = 0.0;
};

struct TrainReport {
  std::vector<EpochRecord> epochs;
};

struct TrainResult {
  EncoderModel model;
  ClassifierHead head;
  TrainReport report;
  // train identity -> contiguous class index used by the classifier
  std::map<int, int> class_of_identity;
};

struct BatchGrads {
  EncoderGrads encoder;
  RealMatrix head_w;
  RealVector head_b;
};

struct BatchEval {
  double loss = 0.0;
  double mean_predicted_entropy = 0.0;
  double mean_sigma = 0.0;
  BatchGrads grads;
};

// Mean loss and gradients over a batch. For VIB models `noise` holds one
// epsilon vector per (sample, draw); pass the exact draws to make the
// evaluation a deterministic function for gradient checking.
BatchEval evaluate_batch(const EncoderModel& model, const ClassifierHead& head,
                         const std::vector<RealVector>& inputs,
                         const std::vector<int>& targets,
                         const LossConfig& loss,
                         const std::vector<RealVector>& noise = {});

// One optimizer step over a prepared batch; returns the batch evaluation.
BatchEval train_step(EncoderModel& model, ClassifierHead& head,
                     const std::vector<RealVector>& inputs,
                     const std::vector<int>& targets, const LossConfig& loss,
                     OptimizerState& opt, double lr, RngStream& rng,
                     int vib_samples = 1);

TrainResult train(const Dataset& dataset, const EncoderSpec& encoder_spec,
                  const TrainConfig& config);

enum class FeatureMode { kDeterministic, kVibMean };

// Row per sample, input order preserved. kVibMean returns the posterior
// means; kDeterministic the encoder feature (no noise drawn in either).
RealMatrix extract_features(const EncoderModel& model,
                            const std::vector<Sample>& samples,
                            FeatureMode mode,
                            const PipelineConfig& pipeline = {});

// Versioned binary checkpoint: encoder spec + parameters + head +
// optimizer state. Round trips bit-exactly.
void save_checkpoint(const std::string& path, const EncoderModel& model,
                     const ClassifierHead& head, const OptimizerState& opt);
void load_checkpoint(const std::string& path, EncoderModel& model,
                     ClassifierHead& head, OptimizerState& opt);

}  // namespace reidlab
