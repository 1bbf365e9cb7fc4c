#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "specnet/dataio.hpp"
#include "specnet/random.hpp"

namespace specnet {

std::vector<ClassSignature> SyntheticSpec::resolved_classes() const {
  if (!classes.empty()) {
    if (classes.size() != 4) {
      throw ConfigError("synthetic.classes must list exactly 4 class signatures, got " +
                        std::to_string(classes.size()));
    }
    return classes;
  }
  std::vector<ClassSignature> out;
  for (std::size_t k = 0; k < 4; ++k) {
    out.push_back({std::floor(static_cast<double>(channels * (2 * k + 1)) / 8.0), static_cast<double>(k + 1)});
  }
  return out;
}

LabeledDataset generate_synthetic(const SyntheticSpec& spec) {
  if (spec.per_class == 0) throw ConfigError("synthetic.per_class must be >= 1 (zero samples requested)");
  if (!(spec.noise_sd >= 0.0)) throw ConfigError("synthetic.noise_sd must be >= 0");
  if (spec.height == 0 || spec.width == 0 || spec.channels == 0) {
    throw ConfigError("synthetic.shape extents must be >= 1");
  }
  if (!(spec.bump_width > 0.0)) throw ConfigError("synthetic.bump_width must be > 0");
  const auto classes = spec.resolved_classes();

  constexpr double kBase = 0.1;
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const std::size_t h = spec.height, w = spec.width, c = spec.channels;

  LabeledDataset ds;
  ds.class_names = default_class_names();
  for (std::size_t k = 0; k < classes.size(); ++k) {
    std::vector<double> bump(c);
    for (std::size_t ch = 0; ch < c; ++ch) {
      const double d = (static_cast<double>(ch) - classes[k].peak_band) / spec.bump_width;
      bump[ch] = std::exp(-0.5 * d * d);
    }
    for (std::size_t i = 0; i < spec.per_class; ++i) {
      Rng rng = make_rng(spec.seed, "synthetic", {k, i});
      std::uniform_real_distribution<double> phase_dist(0.0, two_pi);
      std::uniform_real_distribution<double> amp_dist(0.6, 1.0);
      std::normal_distribution<double> noise(0.0, 1.0);
      const double phase = phase_dist(rng);
      const double amplitude = amp_dist(rng);

      Tensor32 px(Shape{h, w, c});
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t x = 0; x < w; ++x) {
          const double texture =
              0.5 + 0.5 * std::sin(phase + two_pi * classes[k].texture_cycles *
                                               (static_cast<double>(x) / w + static_cast<double>(y) / h));
          for (std::size_t ch = 0; ch < c; ++ch) {
            double v = kBase + amplitude * bump[ch] * texture;
            if (spec.noise_sd > 0.0) v += spec.noise_sd * noise(rng);
            px.at(y, x, ch) = static_cast<float>(std::clamp(v, 0.0, 1.0));
          }
        }
      }
      Sample s;
      s.image = MultispectralImage(std::move(px));
      s.label = k;
      s.provenance = Provenance::synthetic;
      s.source_index = ds.samples.size();
      ds.samples.push_back(std::move(s));
    }
  }
  return ds;
}

}  // namespace specnet
