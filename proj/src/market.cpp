// Market1501-style directory ingestion. Image decoding is delegated to
// OpenCV's imgcodecs; everything downstream works on plain Image buffers.

#include <filesystem>
#include <iostream>
#include <regex>
#include <stdexcept>

#include <opencv2/imgcodecs.hpp>

#include "reidlab/data.hpp"

namespace reidlab {

namespace fs = std::filesystem;

bool parse_market_name(const std::string& filename, int& identity,
                       int& camera) {
  static const std::regex pattern(R"(^(-?\d+)_c(\d+).*)");
  std::smatch m;
  if (!std::regex_match(filename, m, pattern)) return false;
  identity = std::stoi(m[1]);
  camera = std::stoi(m[2]);
  return identity >= 0;  // -1 marks junk boxes
}

namespace {

Image decode_image(const fs::path& path) {
  cv::Mat bgr = cv::imread(path.string(), cv::IMREAD_COLOR);
  if (bgr.empty()) throw std::runtime_error("cannot decode image: " + path.string());
  Image img;
  img.height = bgr.rows;
  img.width = bgr.cols;
  img.channels = 3;
  img.pixels.resize(static_cast<std::size_t>(bgr.rows) * bgr.cols * 3);
  for (int y = 0; y < bgr.rows; ++y)
    for (int x = 0; x < bgr.cols; ++x) {
      const cv::Vec3b px = bgr.at<cv::Vec3b>(y, x);
      img.at(y, x, 0) = px[2];  // RGB order
      img.at(y, x, 1) = px[1];
      img.at(y, x, 2) = px[0];
    }
  return img;
}

std::vector<Sample> load_split(const fs::path& dir) {
  if (!fs::is_directory(dir))
    throw std::runtime_error("missing dataset split directory: " + dir.string());
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir))
    if (entry.is_regular_file()) files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  std::vector<Sample> samples;
  for (const auto& file : files) {
    int identity = 0, camera = 0;
    const std::string name = file.filename().string();
    if (!parse_market_name(name, identity, camera)) {
      if (!name.starts_with("-1"))
        std::cerr << "warning: skipping unparseable filename " << name << "\n";
      continue;
    }
    Sample s;
    s.payload = decode_image(file);
    s.identity = identity;
    s.camera = camera;
    samples.push_back(std::move(s));
  }
  if (samples.empty())
    throw std::runtime_error("empty dataset split: " + dir.string());
  return samples;
}

}  // namespace

Dataset load_market_dir(const std::string& path) {
  const fs::path root(path);
  Dataset ds;
  ds.train = load_split(root / "bounding_box_train");
  ds.query = load_split(root / "query");
  ds.gallery = load_split(root / "bounding_box_test");
  ds.validate();
  return ds;
}

}  // namespace reidlab
