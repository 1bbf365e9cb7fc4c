#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "specnet/dataio.hpp"
#include "specnet/network.hpp"
#include "specnet/preprocess.hpp"

namespace specnet {

enum class Pipeline { direct, pca };

std::string_view pipeline_name(Pipeline p) noexcept;
Pipeline parse_pipeline(const std::string& name);

struct BenchOptions {
  std::size_t warmup = 10;
  std::size_t repetitions = 100;
};

// Per-image classification time over the measured repetitions.
struct TimingStats {
  double mean_ms = 0;
  double sd_ms = 0;  // sample SD
  std::size_t repetitions = 0;
  std::size_t images = 0;
};

// Times end-to-end classification of one image per repetition, cycling
// through `images`, on a monotonic clock.
//
// Both pipelines feed the same network. `direct` receives images already in
// the network's input representation: when `pca` is given they are projected
// before timing starts. `pca` times the projection plus the forward pass and
// requires a basis.
TimingStats benchmark(const Network<float>& net, std::span<const MultispectralImage> images, Pipeline pipeline,
                      const SpectralPCA* pca = nullptr, const BenchOptions& options = {});

struct PipelineComparison {
  TimingStats direct;
  TimingStats pca;
};

// Both pipelines with repetitions interleaved, so slow drifts of the machine
// (frequency scaling, background load) hit both alike.
PipelineComparison benchmark_pipelines(const Network<float>& net, std::span<const MultispectralImage> images,
                                       const SpectralPCA& pca, const BenchOptions& options = {});

}  // namespace specnet
