#include <cmath>
#include <numbers>

#include "specnet/preprocess.hpp"

namespace specnet {

namespace {

// cos/sin with exact values at multiples of 90 degrees, so quarter turns are
// pure pixel permutations.
void exact_cos_sin(double angle_deg, double& c, double& s) {
  const double quarter = angle_deg / 90.0;
  if (quarter == std::round(quarter)) {
    const long q = ((static_cast<long>(quarter) % 4) + 4) % 4;
    constexpr double cs[4][2] = {{1, 0}, {0, 1}, {-1, 0}, {0, -1}};
    c = cs[q][0];
    s = cs[q][1];
    return;
  }
  const double r = angle_deg * std::numbers::pi / 180.0;
  c = std::cos(r);
  s = std::sin(r);
}

}  // namespace

std::vector<Transform> AugmentationPolicy::transforms() const {
  std::vector<Transform> out;
  for (Flip f : flips) {
    for (double a : rotation_angles_deg) {
      const Transform t{f, a};
      if (!t.is_identity()) out.push_back(t);
    }
  }
  return out;
}

MultispectralImage apply_transform(const MultispectralImage& image, const Transform& t) {
  const std::size_t h = image.height(), w = image.width(), ch = image.channels();
  const bool flip_x = t.flip == Flip::horizontal || t.flip == Flip::both;
  const bool flip_y = t.flip == Flip::vertical || t.flip == Flip::both;
  double cos_a = 1, sin_a = 0;
  exact_cos_sin(t.angle_deg, cos_a, sin_a);
  const double cy = (static_cast<double>(h) - 1.0) / 2.0;
  const double cx = (static_cast<double>(w) - 1.0) / 2.0;

  Tensor32 out(image.pixels.shape());
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      // Inverse rotation of the output position into the flipped image.
      const double dy = static_cast<double>(y) - cy;
      const double dx = static_cast<double>(x) - cx;
      const long sx = std::lround(cos_a * dx + sin_a * dy + cx);
      const long sy = std::lround(-sin_a * dx + cos_a * dy + cy);
      if (sx < 0 || sy < 0 || sx >= static_cast<long>(w) || sy >= static_cast<long>(h)) continue;
      const std::size_t fx = flip_x ? w - 1 - static_cast<std::size_t>(sx) : static_cast<std::size_t>(sx);
      const std::size_t fy = flip_y ? h - 1 - static_cast<std::size_t>(sy) : static_cast<std::size_t>(sy);
      for (std::size_t c = 0; c < ch; ++c) out.at(y, x, c) = image.pixels.at(fy, fx, c);
    }
  }
  MultispectralImage result;
  result.pixels = std::move(out);
  result.band_nm = image.band_nm;
  return result;
}

std::vector<MultispectralImage> augment(const MultispectralImage& image, const AugmentationPolicy& policy) {
  std::vector<MultispectralImage> out;
  for (const Transform& t : policy.transforms()) out.push_back(apply_transform(image, t));
  return out;
}

TrainingSplit make_training_split(const LabeledDataset& dataset, std::span<const std::size_t> indices) {
  TrainingSplit split;
  split.samples_.reserve(indices.size());
  for (std::size_t i : indices) {
    if (i >= dataset.size()) throw DimensionError("training split index " + std::to_string(i) + " out of range");
    Sample s = dataset.samples[i];
    s.source_index = i;
    split.samples_.push_back(std::move(s));
  }
  return split;
}

std::vector<Sample> augment_split(const TrainingSplit& split, const AugmentationPolicy& policy) {
  const auto transforms = policy.transforms();
  std::vector<Sample> out = split.samples();
  out.reserve(split.size() * (1 + transforms.size()));
  for (const Sample& s : split.samples()) {
    for (const Transform& t : transforms) {
      Sample fake;
      fake.image = apply_transform(s.image, t);
      fake.label = s.label;
      fake.provenance = Provenance::augmented;
      fake.source_index = s.source_index;
      out.push_back(std::move(fake));
    }
  }
  return out;
}

}  // namespace specnet
