#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "specnet/tensor.hpp"

namespace specnet {

// H x W x C image; pixels are stored (H, W, C) in memory.
struct MultispectralImage {
  Tensor32 pixels;
  std::vector<float> band_nm;  // empty, or one strictly increasing label per channel

  MultispectralImage() = default;
  explicit MultispectralImage(Tensor32 pixels, std::vector<float> band_nm = {});

  std::size_t height() const { return pixels.shape()[0]; }
  std::size_t width() const { return pixels.shape()[1]; }
  std::size_t channels() const { return pixels.shape()[2]; }

  // Throws on rank != 3, bad band labels or non-finite pixels.
  void validate() const;

  friend bool operator==(const MultispectralImage&, const MultispectralImage&) = default;
};

enum class Provenance : std::uint8_t { real, synthetic, augmented };

struct Sample {
  MultispectralImage image;
  std::size_t label = 0;
  Provenance provenance = Provenance::real;
  // Index of the originating sample in the source dataset (self for
  // non-augmented samples).
  std::size_t source_index = 0;
};

struct LabeledDataset {
  std::vector<Sample> samples;
  std::vector<std::string> class_names;

  std::size_t size() const noexcept { return samples.size(); }
  std::vector<std::size_t> labels() const;
  std::vector<std::size_t> class_counts() const;

  // Throws DatasetError on heterogeneous shapes or out-of-range labels.
  void validate() const;
};

std::vector<std::string> default_class_names();

// MSI container payload encodings.
enum class PayloadKind : std::uint8_t { f32 = 0, u16 = 1 };

// f32 payloads round-trip bit-exactly. u16 payloads quantize values clamped
// to [0, 1] as round(v * 65535) and are divided by 65535 on load.
std::vector<std::uint8_t> encode_msi(const MultispectralImage& image, PayloadKind kind = PayloadKind::f32);
MultispectralImage decode_msi(std::span<const std::uint8_t> bytes, const std::string& context = "msi");

void write_msi(const std::filesystem::path& path, const MultispectralImage& image,
               PayloadKind kind = PayloadKind::f32);
MultispectralImage read_msi(const std::filesystem::path& path);

struct ManifestEntry {
  std::string path;  // relative to the manifest's directory
  std::size_t label = 0;
};

struct Manifest {
  std::vector<std::string> class_names;
  std::vector<ManifestEntry> entries;
};

// Line-oriented: "classes,<name>,<name>,..." header, then "<path>,<label>"
// where the label is a class index or name.
Manifest parse_manifest(const std::string& text, const std::string& context = "manifest");
std::string format_manifest(const Manifest& manifest);

LabeledDataset load_dataset(const std::filesystem::path& manifest_path);

// Writes one MSI file per sample plus "manifest.csv" into `directory` and
// returns the manifest path.
std::filesystem::path write_dataset(const std::filesystem::path& directory, const LabeledDataset& dataset,
                                    PayloadKind kind = PayloadKind::f32);

struct ClassSignature {
  double peak_band = 0.0;       // centre of the spectral bump, in band units
  double texture_cycles = 1.0;  // sinusoid cycles across the image
};

struct SyntheticSpec {
  std::size_t height = 32;
  std::size_t width = 32;
  std::size_t channels = 8;
  std::size_t per_class = 64;
  double noise_sd = 0.15;
  double bump_width = 1.0;  // spectral SD of the bump, in bands
  std::uint64_t seed = 7;
  // Four entries; empty selects peaks spread evenly over the bands and
  // texture frequencies 1..4.
  std::vector<ClassSignature> classes;

  std::vector<ClassSignature> resolved_classes() const;
};

// Class k sample: clamp01(base + amp * bump_k(c) * (0.5 + 0.5 sin(phase +
// 2 pi f_k (x/W + y/H))) + noise), with per-sample random phase and
// amplitude. Deterministic in the seed.
LabeledDataset generate_synthetic(const SyntheticSpec& spec);

}  // namespace specnet
