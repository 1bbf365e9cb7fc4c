#include <algorithm>
#include <cmath>
#include <numeric>

#include "byte_io.hpp"
#include "specnet/preprocess.hpp"

namespace specnet {

EigenResult jacobi_eigen(std::vector<double> a, std::size_t n, double tolerance, std::size_t max_sweeps) {
  if (a.size() != n * n) throw DimensionError("jacobi_eigen: matrix is not n x n");
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;
  auto at = [&](std::size_t r, std::size_t c) -> double& { return a[r * n + c]; };

  EigenResult result;
  for (; result.sweeps < max_sweeps; ++result.sweeps) {
    double off = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) off += at(i, j) * at(i, j);
    if (std::sqrt(off) < tolerance) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = at(p, q);
        if (apq == 0.0) continue;
        const double theta = (at(q, q) - at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = at(k, p), akq = at(k, q);
          at(k, p) = c * akp - s * akq;
          at(k, q) = s * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = at(p, k), aqk = at(q, k);
          at(p, k) = c * apk - s * aqk;
          at(q, k) = s * apk + c * aqk;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k * n + p], vkq = v[k * n + q];
          v[k * n + p] = c * vkp - s * vkq;
          v[k * n + q] = s * vkp + c * vkq;
        }
      }
    }
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t x, std::size_t y) { return at(x, x) > at(y, y); });
  for (std::size_t i : order) {
    result.values.push_back(at(i, i));
    std::vector<double> vec(n);
    for (std::size_t k = 0; k < n; ++k) vec[k] = v[k * n + i];
    result.vectors.push_back(std::move(vec));
  }
  return result;
}

SpectralPCA fit_pca(std::span<const MultispectralImage> images) {
  if (images.empty()) throw DimensionError("fit_pca: no images");
  const std::size_t c = images.front().channels();
  if (c < SpectralPCA::kComponents) {
    throw DimensionError("fit_pca: need at least 3 channels, got " + std::to_string(c));
  }
  std::size_t n = 0;
  std::vector<double> mean(c, 0.0), lo(c, INFINITY), hi(c, -INFINITY);
  for (const auto& img : images) {
    if (img.channels() != c) throw DimensionError("fit_pca: images disagree on channel count");
    const auto px = img.pixels.data();
    for (std::size_t i = 0; i < px.size(); i += c) {
      for (std::size_t k = 0; k < c; ++k) {
        const double v = px[i + k];
        mean[k] += v;
        lo[k] = std::min(lo[k], v);
        hi[k] = std::max(hi[k], v);
      }
      ++n;
    }
  }
  if (n < 4) throw DimensionError("fit_pca: need at least 4 pixels, got " + std::to_string(n));
  bool constant = true;
  for (std::size_t k = 0; k < c; ++k) constant = constant && lo[k] == hi[k];
  if (constant) throw DegenerateError("fit_pca: spectrum is constant (zero covariance)");
  for (auto& m : mean) m /= static_cast<double>(n);

  std::vector<double> cov(c * c, 0.0);
  std::vector<double> d(c);
  for (const auto& img : images) {
    const auto px = img.pixels.data();
    for (std::size_t i = 0; i < px.size(); i += c) {
      for (std::size_t k = 0; k < c; ++k) d[k] = px[i + k] - mean[k];
      for (std::size_t r = 0; r < c; ++r)
        for (std::size_t s = r; s < c; ++s) cov[r * c + s] += d[r] * d[s];
    }
  }
  for (std::size_t r = 0; r < c; ++r) {
    for (std::size_t s = r; s < c; ++s) {
      cov[r * c + s] /= static_cast<double>(n);
      cov[s * c + r] = cov[r * c + s];
    }
  }

  const EigenResult eig = jacobi_eigen(std::move(cov), c);
  SpectralPCA pca;
  pca.mean = std::move(mean);
  for (std::size_t i = 0; i < SpectralPCA::kComponents; ++i) {
    std::vector<double> vec = eig.vectors[i];
    std::size_t arg = 0;
    for (std::size_t k = 1; k < c; ++k)
      if (std::abs(vec[k]) > std::abs(vec[arg])) arg = k;
    if (vec[arg] < 0)
      for (auto& x : vec) x = -x;
    pca.components[i] = std::move(vec);
    pca.explained_variance[i] = std::max(0.0, eig.values[i]);
  }
  return pca;
}

MultispectralImage apply_pca(const SpectralPCA& pca, const MultispectralImage& image) {
  const std::size_t c = pca.channels();
  if (image.channels() != c) {
    throw DimensionError("apply_pca: basis fitted on " + std::to_string(c) + " channels, image has " +
                         std::to_string(image.channels()));
  }
  constexpr std::size_t K = SpectralPCA::kComponents;
  Tensor32 out(Shape{image.height(), image.width(), K});
  const auto in = image.pixels.data();
  auto o = out.data();
  std::vector<double> d(c);
  for (std::size_t p = 0, q = 0; p < in.size(); p += c, q += K) {
    for (std::size_t k = 0; k < c; ++k) d[k] = in[p + k] - pca.mean[k];
    for (std::size_t j = 0; j < K; ++j) {
      const auto& comp = pca.components[j];
      double acc = 0.0;
      for (std::size_t k = 0; k < c; ++k) acc += comp[k] * d[k];
      o[q + j] = static_cast<float>(acc);
    }
  }
  MultispectralImage result;
  result.pixels = std::move(out);
  return result;
}

namespace {
constexpr std::string_view kPcaMagic = "SPCA";
}

std::vector<std::uint8_t> encode_pca(const SpectralPCA& pca) {
  const std::size_t c = pca.channels();
  detail::ByteWriter w;
  w.raw(kPcaMagic);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(c));
  for (double m : pca.mean) w.put<float>(static_cast<float>(m));
  for (const auto& comp : pca.components) {
    if (comp.size() != c) throw DimensionError("encode_pca: component length differs from mean length");
    for (double x : comp) w.put<float>(static_cast<float>(x));
  }
  for (double v : pca.explained_variance) w.put<float>(static_cast<float>(v));
  return std::move(w.bytes());
}

SpectralPCA decode_pca(std::span<const std::uint8_t> bytes, const std::string& context) {
  detail::ByteReader r(bytes, context);
  if (bytes.size() < kPcaMagic.size() || r.raw(kPcaMagic.size()) != kPcaMagic) {
    throw BadMagicError(context + ": not a PCA basis file (bad magic)");
  }
  const std::size_t c = r.get<std::uint32_t>();
  if (c == 0) throw ExtentMismatchError(context + ": zero channel count");
  auto read_values = [&](std::vector<double>& out, std::size_t n) {
    out.resize(n);
    for (auto& x : out) {
      const float f = r.get<float>();
      if (!std::isfinite(f)) throw NonFiniteError(context + ": non-finite value");
      x = f;
    }
  };
  SpectralPCA pca;
  read_values(pca.mean, c);
  for (auto& comp : pca.components) read_values(comp, c);
  std::vector<double> var;
  read_values(var, SpectralPCA::kComponents);
  std::copy(var.begin(), var.end(), pca.explained_variance.begin());
  if (r.remaining() != 0) throw ExtentMismatchError(context + ": trailing bytes after PCA basis");
  return pca;
}

void write_pca(const std::filesystem::path& path, const SpectralPCA& pca) {
  detail::write_file(path, encode_pca(pca));
}

SpectralPCA read_pca(const std::filesystem::path& path) { return decode_pca(detail::read_file(path), path.string()); }

}  // namespace specnet
