#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

#include "specnet/dataio.hpp"

namespace specnet {

enum class Flip { identity, horizontal, vertical, both };

// One (flip, rotation) pair. The flip is applied first, then the rotation
// about the image centre.
struct Transform {
  Flip flip = Flip::identity;
  double angle_deg = 0.0;

  bool is_identity() const noexcept { return flip == Flip::identity && angle_deg == 0.0; }
  friend bool operator==(const Transform&, const Transform&) = default;
};

// Default grid: 4 flip states x 7 angles (-90..90 in 30 degree steps); every
// pair except (identity, 0) yields one fake, 27 in total.
struct AugmentationPolicy {
  std::vector<Flip> flips{Flip::identity, Flip::horizontal, Flip::vertical, Flip::both};
  std::vector<double> rotation_angles_deg{-90, -60, -30, 0, 30, 60, 90};

  // Transforms in (flip-major, angle-minor) order, identity excluded.
  std::vector<Transform> transforms() const;
};

// Nearest-neighbour sampling, zero fill outside the source, output shape
// equal to the input shape (rotated corners are clipped).
MultispectralImage apply_transform(const MultispectralImage& image, const Transform& t);

// One fake per policy transform; deterministic.
std::vector<MultispectralImage> augment(const MultispectralImage& image,
                                        const AugmentationPolicy& policy = {});

// Samples of a training split. Only the cross-validation splitter creates
// these, so augmentation cannot be applied to validation or test data.
class TrainingSplit {
 public:
  const std::vector<Sample>& samples() const noexcept { return samples_; }
  std::size_t size() const noexcept { return samples_.size(); }

 private:
  friend TrainingSplit make_training_split(const LabeledDataset&, std::span<const std::size_t>);
  std::vector<Sample> samples_;
};

// Copies dataset[indices] with source_index set to the dataset index.
TrainingSplit make_training_split(const LabeledDataset& dataset, std::span<const std::size_t> indices);

// The split's real samples followed by their fakes (provenance augmented,
// same label and source_index).
std::vector<Sample> augment_split(const TrainingSplit& split, const AugmentationPolicy& policy = {});

// Top-3 principal directions of the pixelwise spectral covariance
// (population divisor).
struct SpectralPCA {
  static constexpr std::size_t kComponents = 3;

  std::vector<double> mean;                                     // length C
  std::array<std::vector<double>, kComponents> components;      // each length C, orthonormal
  std::array<double, kComponents> explained_variance{};         // descending

  std::size_t channels() const noexcept { return mean.size(); }
};

struct EigenResult {
  std::vector<double> values;               // descending
  std::vector<std::vector<double>> vectors;  // vectors[i] pairs with values[i]
  std::size_t sweeps = 0;
};

// Cyclic Jacobi on a symmetric n x n row-major matrix; stops when the
// off-diagonal Frobenius norm drops below `tolerance` or after `max_sweeps`.
EigenResult jacobi_eigen(std::vector<double> matrix, std::size_t n, double tolerance = 1e-10,
                         std::size_t max_sweeps = 100);

// Fit over every pixel of every image. Each eigenvector's largest-magnitude
// coefficient is made positive. Throws DegenerateError on a zero-variance
// spectrum and DimensionError on fewer than 3 channels or 4 pixels.
SpectralPCA fit_pca(std::span<const MultispectralImage> images);

// Per pixel: components . (spectrum - mean). Output has 3 channels.
MultispectralImage apply_pca(const SpectralPCA& pca, const MultispectralImage& image);

// "SPCA" container; values stored as f32.
std::vector<std::uint8_t> encode_pca(const SpectralPCA& pca);
SpectralPCA decode_pca(std::span<const std::uint8_t> bytes, const std::string& context = "pca");
void write_pca(const std::filesystem::path& path, const SpectralPCA& pca);
SpectralPCA read_pca(const std::filesystem::path& path);

}  // namespace specnet
