#include "specnet/benchmark.hpp"

#include <chrono>
#include <cmath>

#include "specnet/errors.hpp"

namespace specnet {

namespace {

using Clock = std::chrono::steady_clock;

TimingStats summarize(const std::vector<double>& ms, std::size_t images) {
  TimingStats s;
  s.repetitions = ms.size();
  s.images = images;
  if (ms.empty()) return s;
  double sum = 0;
  for (double v : ms) sum += v;
  s.mean_ms = sum / static_cast<double>(ms.size());
  if (ms.size() > 1) {
    double ss = 0;
    for (double v : ms) ss += (v - s.mean_ms) * (v - s.mean_ms);
    s.sd_ms = std::sqrt(ss / static_cast<double>(ms.size() - 1));
  }
  return s;
}

// Keeps the optimizer from discarding an unused forward pass.
volatile float g_sink = 0;

class Runner {
 public:
  Runner(const Network<float>& net, std::span<const MultispectralImage> images, Pipeline pipeline,
         const SpectralPCA* pca)
      : net_(net), images_(images), pipeline_(pipeline), pca_(pca) {
    if (images.empty()) throw DatasetError("benchmark: no images");
    if (pipeline == Pipeline::pca && pca == nullptr) throw ConfigError("benchmark: pca pipeline needs a basis");
    if (pipeline == Pipeline::direct && pca != nullptr) {
      for (const auto& img : images) projected_.push_back(apply_pca(*pca, img));
    }
  }

  double run_once(std::size_t i) {
    const MultispectralImage& img = images_[i % images_.size()];
    const auto t0 = Clock::now();
    float top;
    if (pipeline_ == Pipeline::pca) {
      top = forward(net_, apply_pca(*pca_, img).pixels).probs[0];
    } else {
      const Tensor32& x = projected_.empty() ? img.pixels : projected_[i % projected_.size()].pixels;
      top = forward(net_, x).probs[0];
    }
    const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
    g_sink = top;
    return ms;
  }

 private:
  const Network<float>& net_;
  std::span<const MultispectralImage> images_;
  Pipeline pipeline_;
  const SpectralPCA* pca_;
  std::vector<MultispectralImage> projected_;
};

void check_options(const BenchOptions& options) {
  if (options.repetitions < 1) throw ConfigError("bench.repetitions must be >= 1");
}

}  // namespace

std::string_view pipeline_name(Pipeline p) noexcept { return p == Pipeline::pca ? "pca" : "direct"; }

Pipeline parse_pipeline(const std::string& name) {
  if (name == "direct") return Pipeline::direct;
  if (name == "pca") return Pipeline::pca;
  throw ConfigError("bench.pipeline: expected direct or pca, got '" + name + "'");
}

TimingStats benchmark(const Network<float>& net, std::span<const MultispectralImage> images, Pipeline pipeline,
                      const SpectralPCA* pca, const BenchOptions& options) {
  check_options(options);
  Runner runner(net, images, pipeline, pca);
  for (std::size_t i = 0; i < options.warmup; ++i) runner.run_once(i);
  std::vector<double> ms;
  ms.reserve(options.repetitions);
  for (std::size_t i = 0; i < options.repetitions; ++i) ms.push_back(runner.run_once(i));
  return summarize(ms, images.size());
}

PipelineComparison benchmark_pipelines(const Network<float>& net, std::span<const MultispectralImage> images,
                                       const SpectralPCA& pca, const BenchOptions& options) {
  check_options(options);
  Runner direct(net, images, Pipeline::direct, &pca);
  Runner projected(net, images, Pipeline::pca, &pca);
  for (std::size_t i = 0; i < options.warmup; ++i) {
    direct.run_once(i);
    projected.run_once(i);
  }
  std::vector<double> a, b;
  for (std::size_t i = 0; i < options.repetitions; ++i) {
    a.push_back(direct.run_once(i));
    b.push_back(projected.run_once(i));
  }
  return {summarize(a, images.size()), summarize(b, images.size())};
}

}  // namespace specnet
