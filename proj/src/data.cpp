#include "reidlab/data.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "reidlab/kernels.hpp"

namespace reidlab {

void Dataset::validate() const {
  if (query.empty() != gallery.empty())
    throw std::invalid_argument("Dataset: query/gallery must both be present or absent");
  if (!query.empty()) {
    std::set<int> gallery_ids;
    for (const auto& s : gallery) gallery_ids.insert(s.identity);
    bool overlap = false;
    for (const auto& s : query)
      if (gallery_ids.count(s.identity)) {
        overlap = true;
        break;
      }
    if (!overlap)
      throw std::invalid_argument("Dataset: no query identity appears in gallery");
  }
}

void SyntheticSpec::validate() const {
  if (num_identities < 2) throw std::invalid_argument("SyntheticSpec: need >= 2 identities");
  if (samples_per_identity < 2)
    throw std::invalid_argument("SyntheticSpec: need >= 2 samples per identity");
  if (feature_dim < 1) throw std::invalid_argument("SyntheticSpec: feature_dim >= 1");
  if (confusable_pairs < 0 || 2 * confusable_pairs > num_identities)
    throw std::invalid_argument("SyntheticSpec: more confusable pairs than identity pairs");
  if (!(sigma_within > 0.0)) throw std::invalid_argument("SyntheticSpec: sigma_within > 0");
  if (!(delta_pair < delta_far))
    throw std::invalid_argument("SyntheticSpec: delta_pair must be < delta_far");
  if (num_cameras < 1) throw std::invalid_argument("SyntheticSpec: need >= 1 camera");
}

namespace {

RealVector random_unit(int dim, RngStream& rng) {
  RealVector u(dim);
  double norm2 = 0.0;
  do {
    for (double& v : u) v = rng.normal();
    norm2 = kernels::dot(u, u);
  } while (norm2 < 1e-12);
  const double inv = 1.0 / std::sqrt(norm2);
  for (double& v : u) v *= inv;
  return u;
}

}  // namespace

Dataset generate_confusable(const SyntheticSpec& spec, std::uint64_t seed) {
  spec.validate();
  RngStream root(seed);

  const int pairs = spec.confusable_pairs;
  const int singles = spec.num_identities - 2 * pairs;
  const int num_bases = pairs + singles;
  const double min_base_dist = spec.delta_far + spec.delta_pair;

  // Base points by rejection; the Gaussian scale makes collisions rare.
  auto base_rng = root.substream("bases");
  std::vector<RealVector> bases;
  while (static_cast<int>(bases.size()) < num_bases) {
    RealVector cand(spec.feature_dim);
    for (double& v : cand) v = spec.delta_far * base_rng.normal();
    bool ok = true;
    for (const auto& b : bases)
      if (kernels::squared_l2(cand, b) < min_base_dist * min_base_dist) {
        ok = false;
        break;
      }
    if (ok) bases.push_back(std::move(cand));
  }

  // Identity centers: ids [0, 2*pairs) are pair members, the rest singles.
  auto dir_rng = root.substream("pair-directions");
  std::vector<RealVector> centers(spec.num_identities);
  for (int j = 0; j < pairs; ++j) {
    const RealVector u = random_unit(spec.feature_dim, dir_rng);
    centers[2 * j] = bases[j];
    centers[2 * j + 1] = bases[j];
    for (int d = 0; d < spec.feature_dim; ++d) {
      centers[2 * j][d] += 0.5 * spec.delta_pair * u[d];
      centers[2 * j + 1][d] -= 0.5 * spec.delta_pair * u[d];
    }
  }
  for (int k = 0; k < singles; ++k) centers[2 * pairs + k] = bases[pairs + k];

  // Interleave pairs and singles between train and test identity sets so
  // both contain confusable structure.
  auto is_test_identity = [&](int id) {
    if (!spec.disjoint_train_test) return false;  // splits are per-sample
    if (id < 2 * pairs) return (id / 2) % 2 == 0;
    return (id - 2 * pairs) % 2 == 0;
  };

  Dataset ds;
  const int n = spec.samples_per_identity;
  for (int id = 0; id < spec.num_identities; ++id) {
    auto id_rng = root.substream("identity").substream(static_cast<std::uint64_t>(id));
    for (int s = 0; s < n; ++s) {
      Sample sample;
      RealVector x = centers[id];
      for (double& v : x) v += spec.sigma_within * id_rng.normal();
      sample.payload = std::move(x);
      sample.identity = id;
      sample.camera = s % spec.num_cameras;
      if (spec.disjoint_train_test) {
        if (!is_test_identity(id))
          ds.train.push_back(std::move(sample));
        else if (s < n / 2)
          ds.gallery.push_back(std::move(sample));
        else
          ds.query.push_back(std::move(sample));
      } else {
        if (s < n / 2)
          ds.gallery.push_back(std::move(sample));
        else if (s == n / 2)
          ds.query.push_back(std::move(sample));
        else
          ds.train.push_back(std::move(sample));
      }
    }
  }
  ds.validate();
  return ds;
}

Image resize(const Image& img, int target_height, int target_width) {
  if (img.pixels.empty()) throw std::invalid_argument("resize: empty image");
  if (target_height < 1 || target_width < 1)
    throw std::invalid_argument("resize: target dims must be >= 1");
  Image out;
  out.height = target_height;
  out.width = target_width;
  out.channels = img.channels;
  out.pixels.resize(static_cast<std::size_t>(target_height) * target_width *
                    img.channels);
  const double sy = target_height > 1
                        ? static_cast<double>(img.height - 1) / (target_height - 1)
                        : 0.0;
  const double sx = target_width > 1
                        ? static_cast<double>(img.width - 1) / (target_width - 1)
                        : 0.0;
  for (int y = 0; y < target_height; ++y) {
    const double fy = y * sy;
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < target_width; ++x) {
      const double fx = x * sx;
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < img.channels; ++c) {
        const double top = (1.0 - wx) * img.at(y0, x0, c) + wx * img.at(y0, x1, c);
        const double bot = (1.0 - wx) * img.at(y1, x0, c) + wx * img.at(y1, x1, c);
        out.at(y, x, c) = (1.0 - wy) * top + wy * bot;
      }
    }
  }
  return out;
}

Image random_flip(const Image& img, double p, RngStream& rng) {
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("random_flip: p in [0,1]");
  if (rng.uniform() >= p) return img;
  Image out = img;
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < img.channels; ++c)
        out.at(y, x, c) = img.at(y, img.width - 1 - x, c);
  return out;
}

Image random_erase(const Image& img, double probability,
                   std::pair<double, double> area_range,
                   std::pair<double, double> aspect_range, RngStream& rng) {
  if (probability < 0.0 || probability > 1.0)
    throw std::invalid_argument("random_erase: probability in [0,1]");
  if (area_range.first <= 0.0 || area_range.second > 1.0 ||
      area_range.first > area_range.second)
    throw std::invalid_argument("random_erase: bad area range");
  if (aspect_range.first <= 0.0 || aspect_range.first > aspect_range.second)
    throw std::invalid_argument("random_erase: bad aspect range");
  if (rng.uniform() >= probability) return img;

  const double total = static_cast<double>(img.height) * img.width;
  for (int attempt = 0; attempt < 10; ++attempt) {
    const double area = rng.uniform(area_range.first, area_range.second) * total;
    const double aspect = rng.uniform(aspect_range.first, aspect_range.second);
    const int rh = static_cast<int>(std::round(std::sqrt(area * aspect)));
    const int rw = static_cast<int>(std::round(std::sqrt(area / aspect)));
    if (rh < 1 || rw < 1 || rh > img.height || rw > img.width) continue;
    const int top = static_cast<int>(rng.next_below(img.height - rh + 1));
    const int left = static_cast<int>(rng.next_below(img.width - rw + 1));
    Image out = img;
    for (int y = top; y < top + rh; ++y)
      for (int x = left; x < left + rw; ++x)
        for (int c = 0; c < img.channels; ++c)
          out.at(y, x, c) = rng.uniform(0.0, 255.0);
    return out;
  }
  return img;  // degenerate geometry, give up
}

RealVector normalize(const Image& img, const RealVector& mean,
                     const RealVector& stddev) {
  if (static_cast<int>(mean.size()) != img.channels ||
      static_cast<int>(stddev.size()) != img.channels)
    throw std::invalid_argument("normalize: mean/std length != channels");
  for (double s : stddev)
    if (!(s > 0.0)) throw std::invalid_argument("normalize: std must be > 0");
  RealVector out(img.pixels.size());
  const std::size_t plane = static_cast<std::size_t>(img.height) * img.width;
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x)
        out[c * plane + y * img.width + x] =
            (img.at(y, x, c) / 255.0 - mean[c]) / stddev[c];
  return out;
}

namespace {

const char* split_name(int i) {
  switch (i) {
    case 0: return "train";
    case 1: return "query";
    default: return "gallery";
  }
}

}  // namespace

void save_dataset(const Dataset& ds, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("save_dataset: cannot open " + path);
  std::size_t dim = 0;
  const std::vector<Sample>* splits[3] = {&ds.train, &ds.query, &ds.gallery};
  for (const auto* split : splits)
    for (const auto& s : *split) {
      if (s.is_image())
        throw std::invalid_argument("save_dataset: image payloads not supported");
      if (dim == 0) dim = s.features().size();
      if (s.features().size() != dim)
        throw std::invalid_argument("save_dataset: inconsistent feature dims");
    }
  out << "reidlab-dataset v1 " << dim << "\n";
  out.precision(17);
  for (int i = 0; i < 3; ++i)
    for (const auto& s : *splits[i]) {
      out << split_name(i) << ' ' << s.identity << ' ' << s.camera;
      for (double v : s.features()) out << ' ' << v;
      out << '\n';
    }
  if (!out) throw std::runtime_error("save_dataset: write failed: " + path);
}

Dataset load_dataset(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("load_dataset: cannot open " + path);
  std::string magic, version;
  std::size_t dim = 0;
  in >> magic >> version >> dim;
  if (magic != "reidlab-dataset" || version != "v1")
    throw std::runtime_error("load_dataset: unrecognized header in " + path);
  Dataset ds;
  std::string split;
  while (in >> split) {
    Sample s;
    RealVector v(dim);
    in >> s.identity >> s.camera;
    for (double& x : v) in >> x;
    if (!in) throw std::runtime_error("load_dataset: truncated sample in " + path);
    s.payload = std::move(v);
    if (split == "train")
      ds.train.push_back(std::move(s));
    else if (split == "query")
      ds.query.push_back(std::move(s));
    else if (split == "gallery")
      ds.gallery.push_back(std::move(s));
    else
      throw std::runtime_error("load_dataset: unknown split '" + split + "'");
  }
  return ds;
}

}  // namespace reidlab
