#pragma once

// Dataset containers, the synthetic confusable-identity generator, the
// market-style directory loader and the training augmentations.

#include <cstdint>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "reidlab/numerics.hpp"

namespace reidlab {

// Interleaved HWC raster, values in [0, 255].
struct Image {
  int height = 0;
  int width = 0;
  int channels = 0;
  std::vector<double> pixels;

  double& at(int y, int x, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
  double at(int y, int x, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * channels + c];
  }
};

struct Sample {
  std::variant<RealVector, Image> payload;
  int identity = 0;
  int camera = 0;

  bool is_image() const { return std::holds_alternative<Image>(payload); }
  const RealVector& features() const { return std::get<RealVector>(payload); }
  const Image& image() const { return std::get<Image>(payload); }
};

struct Dataset {
  std::vector<Sample> train;
  std::vector<Sample> query;
  std::vector<Sample> gallery;

  void validate() const;  // query/gallery identity overlap, nonempty checks
};

struct SyntheticSpec {
  int num_identities = 64;
  int samples_per_identity = 12;
  int feature_dim = 32;
  int confusable_pairs = 8;
  double sigma_within = 0.35;
  double delta_pair = 1.0;   // center distance within a confusable pair
  double delta_far = 4.0;    // minimum center distance otherwise
  int num_cameras = 4;
  // Re-id convention: train identities disjoint from query/gallery ones.
  bool disjoint_train_test = true;

  void validate() const;
};

Dataset generate_confusable(const SyntheticSpec& spec, std::uint64_t seed);

// Market1501-style layout: bounding_box_train / query / bounding_box_test,
// filenames "<id>_c<camera>...". Junk ids (-1) skipped.
Dataset load_market_dir(const std::string& path);
// Parses identity and camera from a filename; returns false for junk/-1.
bool parse_market_name(const std::string& filename, int& identity, int& camera);

// Bilinear, corner-anchored (the four corners map exactly).
Image resize(const Image& img, int target_height, int target_width);

Image random_flip(const Image& img, double p, RngStream& rng);

Image random_erase(const Image& img, double probability,
                   std::pair<double, double> area_range,
                   std::pair<double, double> aspect_range, RngStream& rng);

// (value/255 - mean[c]) / std[c], flattened channel-major: all of channel 0
// in row-major pixel order, then channel 1, ...
RealVector normalize(const Image& img, const RealVector& mean,
                     const RealVector& stddev);

// Columnar text round trip for feature-payload datasets: header, then one
// sample per line (split id camera values...).
void save_dataset(const Dataset& ds, const std::string& path);
Dataset load_dataset(const std::string& path);

}  // namespace reidlab
