// AVX2 variants. Built with -mavx2 only when the toolchain targets x86-64;
// selected at runtime by dispatch.cpp after a CPU feature check.
//
// The convolution kernels vectorize across filters (forward, weight
// gradient) or channels (input gradient) so that every output element is
// still accumulated in the reference order. No FMA: a fused multiply-add
// rounds once where the reference rounds twice.

#include <immintrin.h>

#include "impl.hpp"

namespace specnet::kernels::detail::avx2 {
namespace {

template <typename T>
struct Vec;

template <>
struct Vec<float> {
  using reg = __m256;
  static constexpr std::size_t lanes = 8;
  static reg load(const float* p) { return _mm256_loadu_ps(p); }
  static void store(float* p, reg v) { _mm256_storeu_ps(p, v); }
  static reg broadcast(float v) { return _mm256_set1_ps(v); }
  static reg zero() { return _mm256_setzero_ps(); }
  static reg add(reg a, reg b) { return _mm256_add_ps(a, b); }
  static reg mul(reg a, reg b) { return _mm256_mul_ps(a, b); }
  static float hsum(reg v) {
    __m128 lo = _mm256_castps256_ps128(v);
    __m128 hi = _mm256_extractf128_ps(v, 1);
    lo = _mm_add_ps(lo, hi);
    __m128 shuf = _mm_movehdup_ps(lo);
    __m128 sums = _mm_add_ps(lo, shuf);
    shuf = _mm_movehl_ps(shuf, sums);
    sums = _mm_add_ss(sums, shuf);
    return _mm_cvtss_f32(sums);
  }
};

template <>
struct Vec<double> {
  using reg = __m256d;
  static constexpr std::size_t lanes = 4;
  static reg load(const double* p) { return _mm256_loadu_pd(p); }
  static void store(double* p, reg v) { _mm256_storeu_pd(p, v); }
  static reg broadcast(double v) { return _mm256_set1_pd(v); }
  static reg zero() { return _mm256_setzero_pd(); }
  static reg add(reg a, reg b) { return _mm256_add_pd(a, b); }
  static reg mul(reg a, reg b) { return _mm256_mul_pd(a, b); }
  static double hsum(reg v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    __m128d high64 = _mm_unpackhi_pd(lo, lo);
    return _mm_cvtsd_f64(_mm_add_sd(lo, high64));
  }
};

inline long tap_index(std::size_t o, std::size_t t, std::size_t stride, std::size_t pad,
                      std::size_t extent) {
  const long i = static_cast<long>(o * stride + t) - static_cast<long>(pad);
  return (i < 0 || i >= static_cast<long>(extent)) ? -1 : i;
}

// (F, k, k, C) -> (k, k, C, F)
template <typename T>
void pack_filters_last(const ConvDims& d, const T* w, T* packed) {
  const std::size_t taps = d.k * d.k * d.c;
  for (std::size_t f = 0; f < d.f; ++f)
    for (std::size_t t = 0; t < taps; ++t) packed[t * d.f + f] = w[f * taps + t];
}

template <typename T>
void unpack_filters_last(const ConvDims& d, const T* packed, T* w) {
  const std::size_t taps = d.k * d.k * d.c;
  for (std::size_t f = 0; f < d.f; ++f)
    for (std::size_t t = 0; t < taps; ++t) w[f * taps + t] = packed[t * d.f + f];
}

template <typename T>
void conv_forward_impl(const ConvDims& d, const T* in, const T* w, const T* bias, T* out,
                       T* packed) {
  using V = Vec<T>;
  constexpr std::size_t L = V::lanes;
  pack_filters_last(d, w, packed);
  for (std::size_t oy = 0; oy < d.oh; ++oy) {
    for (std::size_t ox = 0; ox < d.ow; ++ox) {
      T* o = out + (oy * d.ow + ox) * d.f;
      std::size_t f = 0;
      for (; f + L <= d.f; f += L) {
        typename V::reg acc = V::load(bias + f);
        for (std::size_t ky = 0; ky < d.k; ++ky) {
          const long iy = tap_index(oy, ky, d.stride, d.pad, d.h);
          if (iy < 0) continue;
          for (std::size_t kx = 0; kx < d.k; ++kx) {
            const long ix = tap_index(ox, kx, d.stride, d.pad, d.w);
            if (ix < 0) continue;
            const T* px = in + (static_cast<std::size_t>(iy) * d.w + static_cast<std::size_t>(ix)) * d.c;
            const T* wt = packed + (ky * d.k + kx) * d.c * d.f + f;
            for (std::size_t c = 0; c < d.c; ++c) {
              acc = V::add(acc, V::mul(V::load(wt + c * d.f), V::broadcast(px[c])));
            }
          }
        }
        V::store(o + f, acc);
      }
      for (; f < d.f; ++f) {
        T acc = bias[f];
        for (std::size_t ky = 0; ky < d.k; ++ky) {
          const long iy = tap_index(oy, ky, d.stride, d.pad, d.h);
          if (iy < 0) continue;
          for (std::size_t kx = 0; kx < d.k; ++kx) {
            const long ix = tap_index(ox, kx, d.stride, d.pad, d.w);
            if (ix < 0) continue;
            const T* px = in + (static_cast<std::size_t>(iy) * d.w + static_cast<std::size_t>(ix)) * d.c;
            const T* wt = packed + (ky * d.k + kx) * d.c * d.f + f;
            for (std::size_t c = 0; c < d.c; ++c) acc += wt[c * d.f] * px[c];
          }
        }
        o[f] = acc;
      }
    }
  }
}

template <typename T>
void conv_backward_params_impl(const ConvDims& d, const T* in, const T* gout, T* gw, T* gb,
                               T* packed) {
  using V = Vec<T>;
  constexpr std::size_t L = V::lanes;
  pack_filters_last(d, gw, packed);
  for (std::size_t oy = 0; oy < d.oh; ++oy) {
    for (std::size_t ox = 0; ox < d.ow; ++ox) {
      const T* g = gout + (oy * d.ow + ox) * d.f;
      {
        std::size_t f = 0;
        for (; f + L <= d.f; f += L) V::store(gb + f, V::add(V::load(gb + f), V::load(g + f)));
        for (; f < d.f; ++f) gb[f] += g[f];
      }
      for (std::size_t ky = 0; ky < d.k; ++ky) {
        const long iy = tap_index(oy, ky, d.stride, d.pad, d.h);
        if (iy < 0) continue;
        for (std::size_t kx = 0; kx < d.k; ++kx) {
          const long ix = tap_index(ox, kx, d.stride, d.pad, d.w);
          if (ix < 0) continue;
          const T* px = in + (static_cast<std::size_t>(iy) * d.w + static_cast<std::size_t>(ix)) * d.c;
          T* gt = packed + (ky * d.k + kx) * d.c * d.f;
          for (std::size_t c = 0; c < d.c; ++c) {
            T* row = gt + c * d.f;
            const typename V::reg xv = V::broadcast(px[c]);
            std::size_t f = 0;
            for (; f + L <= d.f; f += L) {
              V::store(row + f, V::add(V::load(row + f), V::mul(V::load(g + f), xv)));
            }
            for (; f < d.f; ++f) row[f] += g[f] * px[c];
          }
        }
      }
    }
  }
  unpack_filters_last(d, packed, gw);
}

template <typename T>
void conv_backward_input_impl(const ConvDims& d, const T* w, const T* gout, T* gin) {
  using V = Vec<T>;
  constexpr std::size_t L = V::lanes;
  const std::size_t kk_c = d.k * d.k * d.c;
  for (std::size_t i = 0; i < d.h * d.w * d.c; ++i) gin[i] = T{0};
  for (std::size_t oy = 0; oy < d.oh; ++oy) {
    for (std::size_t ox = 0; ox < d.ow; ++ox) {
      const T* g = gout + (oy * d.ow + ox) * d.f;
      for (std::size_t ky = 0; ky < d.k; ++ky) {
        const long iy = tap_index(oy, ky, d.stride, d.pad, d.h);
        if (iy < 0) continue;
        for (std::size_t kx = 0; kx < d.k; ++kx) {
          const long ix = tap_index(ox, kx, d.stride, d.pad, d.w);
          if (ix < 0) continue;
          T* px = gin + (static_cast<std::size_t>(iy) * d.w + static_cast<std::size_t>(ix)) * d.c;
          for (std::size_t f = 0; f < d.f; ++f) {
            const T* wt = w + f * kk_c + (ky * d.k + kx) * d.c;
            const typename V::reg gv = V::broadcast(g[f]);
            std::size_t c = 0;
            for (; c + L <= d.c; c += L) {
              V::store(px + c, V::add(V::load(px + c), V::mul(gv, V::load(wt + c))));
            }
            for (; c < d.c; ++c) px[c] += g[f] * wt[c];
          }
        }
      }
    }
  }
}

template <typename T>
void matvec_impl(std::size_t rows, std::size_t cols, const T* m, const T* x, T* y) {
  using V = Vec<T>;
  constexpr std::size_t L = V::lanes;
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = m + r * cols;
    typename V::reg a0 = V::zero();
    typename V::reg a1 = V::zero();
    std::size_t c = 0;
    for (; c + 2 * L <= cols; c += 2 * L) {
      a0 = V::add(a0, V::mul(V::load(row + c), V::load(x + c)));
      a1 = V::add(a1, V::mul(V::load(row + c + L), V::load(x + c + L)));
    }
    for (; c + L <= cols; c += L) a0 = V::add(a0, V::mul(V::load(row + c), V::load(x + c)));
    T acc = V::hsum(V::add(a0, a1));
    for (; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

template <typename T>
void matvec_transposed_impl(std::size_t rows, std::size_t cols, const T* m, const T* g, T* y) {
  using V = Vec<T>;
  constexpr std::size_t L = V::lanes;
  for (std::size_t c = 0; c < cols; ++c) y[c] = T{0};
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = m + r * cols;
    const typename V::reg gv = V::broadcast(g[r]);
    std::size_t c = 0;
    for (; c + L <= cols; c += L) V::store(y + c, V::add(V::load(y + c), V::mul(gv, V::load(row + c))));
    for (; c < cols; ++c) y[c] += g[r] * row[c];
  }
}

template <typename T>
void outer_accumulate_impl(std::size_t rows, std::size_t cols, const T* g, const T* x, T* m) {
  using V = Vec<T>;
  constexpr std::size_t L = V::lanes;
  for (std::size_t r = 0; r < rows; ++r) {
    T* row = m + r * cols;
    const typename V::reg gv = V::broadcast(g[r]);
    std::size_t c = 0;
    for (; c + L <= cols; c += L) V::store(row + c, V::add(V::load(row + c), V::mul(gv, V::load(x + c))));
    for (; c < cols; ++c) row[c] += g[r] * x[c];
  }
}

template <typename T>
void axpy_impl(std::size_t n, T alpha, const T* x, T* y) {
  using V = Vec<T>;
  constexpr std::size_t L = V::lanes;
  const typename V::reg av = V::broadcast(alpha);
  std::size_t i = 0;
  for (; i + L <= n; i += L) V::store(y + i, V::add(V::load(y + i), V::mul(av, V::load(x + i))));
  for (; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

#define SPECNET_AVX2_DEFS(T)                                                                  \
  void conv2d_forward(const ConvDims& d, const T* in, const T* w, const T* bias, T* out,     \
                      T* scratch) {                                                           \
    conv_forward_impl(d, in, w, bias, out, scratch);                                          \
  }                                                                                           \
  void conv2d_backward_params(const ConvDims& d, const T* in, const T* gout, T* gw, T* gb,   \
                              T* scratch) {                                                   \
    conv_backward_params_impl(d, in, gout, gw, gb, scratch);                                  \
  }                                                                                           \
  void conv2d_backward_input(const ConvDims& d, const T* w, const T* gout, T* gin) {         \
    conv_backward_input_impl(d, w, gout, gin);                                                \
  }                                                                                           \
  void matvec(std::size_t rows, std::size_t cols, const T* m, const T* x, T* y) {            \
    matvec_impl(rows, cols, m, x, y);                                                         \
  }                                                                                           \
  void matvec_transposed(std::size_t rows, std::size_t cols, const T* m, const T* g, T* y) { \
    matvec_transposed_impl(rows, cols, m, g, y);                                              \
  }                                                                                           \
  void outer_accumulate(std::size_t rows, std::size_t cols, const T* g, const T* x, T* m) {  \
    outer_accumulate_impl(rows, cols, g, x, m);                                               \
  }                                                                                           \
  void axpy(std::size_t n, T alpha, const T* x, T* y) { axpy_impl(n, alpha, x, y); }

SPECNET_AVX2_DEFS(float)
SPECNET_AVX2_DEFS(double)

#undef SPECNET_AVX2_DEFS

}  // namespace specnet::kernels::detail::avx2
