#include "impl.hpp"

namespace specnet::kernels::detail::scalar {
namespace {

// Input row/col for output index o and tap t, or -1 when it lands in the pad.
inline long tap_index(std::size_t o, std::size_t t, std::size_t stride, std::size_t pad,
                      std::size_t extent) {
  const long i = static_cast<long>(o * stride + t) - static_cast<long>(pad);
  return (i < 0 || i >= static_cast<long>(extent)) ? -1 : i;
}

template <typename T>
void conv_forward_impl(const ConvDims& d, const T* in, const T* w, const T* bias, T* out) {
  const std::size_t kk_c = d.k * d.k * d.c;
  for (std::size_t oy = 0; oy < d.oh; ++oy) {
    for (std::size_t ox = 0; ox < d.ow; ++ox) {
      T* o = out + (oy * d.ow + ox) * d.f;
      for (std::size_t f = 0; f < d.f; ++f) {
        const T* wf = w + f * kk_c;
        T acc = bias[f];
        for (std::size_t ky = 0; ky < d.k; ++ky) {
          const long iy = tap_index(oy, ky, d.stride, d.pad, d.h);
          if (iy < 0) continue;
          for (std::size_t kx = 0; kx < d.k; ++kx) {
            const long ix = tap_index(ox, kx, d.stride, d.pad, d.w);
            if (ix < 0) continue;
            const T* px = in + (static_cast<std::size_t>(iy) * d.w + static_cast<std::size_t>(ix)) * d.c;
            const T* wt = wf + (ky * d.k + kx) * d.c;
            for (std::size_t c = 0; c < d.c; ++c) acc += wt[c] * px[c];
          }
        }
        o[f] = acc;
      }
    }
  }
}

template <typename T>
void conv_backward_params_impl(const ConvDims& d, const T* in, const T* gout, T* gw, T* gb) {
  const std::size_t kk_c = d.k * d.k * d.c;
  for (std::size_t oy = 0; oy < d.oh; ++oy) {
    for (std::size_t ox = 0; ox < d.ow; ++ox) {
      const T* g = gout + (oy * d.ow + ox) * d.f;
      for (std::size_t f = 0; f < d.f; ++f) gb[f] += g[f];
      for (std::size_t ky = 0; ky < d.k; ++ky) {
        const long iy = tap_index(oy, ky, d.stride, d.pad, d.h);
        if (iy < 0) continue;
        for (std::size_t kx = 0; kx < d.k; ++kx) {
          const long ix = tap_index(ox, kx, d.stride, d.pad, d.w);
          if (ix < 0) continue;
          const T* px = in + (static_cast<std::size_t>(iy) * d.w + static_cast<std::size_t>(ix)) * d.c;
          for (std::size_t c = 0; c < d.c; ++c) {
            for (std::size_t f = 0; f < d.f; ++f) {
              gw[f * kk_c + (ky * d.k + kx) * d.c + c] += g[f] * px[c];
            }
          }
        }
      }
    }
  }
}

template <typename T>
void conv_backward_input_impl(const ConvDims& d, const T* w, const T* gout, T* gin) {
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
            for (std::size_t c = 0; c < d.c; ++c) px[c] += g[f] * wt[c];
          }
        }
      }
    }
  }
}

template <typename T>
void matvec_impl(std::size_t rows, std::size_t cols, const T* m, const T* x, T* y) {
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = m + r * cols;
    T acc{0};
    for (std::size_t c = 0; c < cols; ++c) acc += row[c] * x[c];
    y[r] = acc;
  }
}

template <typename T>
void matvec_transposed_impl(std::size_t rows, std::size_t cols, const T* m, const T* g, T* y) {
  for (std::size_t c = 0; c < cols; ++c) y[c] = T{0};
  for (std::size_t r = 0; r < rows; ++r) {
    const T* row = m + r * cols;
    for (std::size_t c = 0; c < cols; ++c) y[c] += g[r] * row[c];
  }
}

template <typename T>
void outer_accumulate_impl(std::size_t rows, std::size_t cols, const T* g, const T* x, T* m) {
  for (std::size_t r = 0; r < rows; ++r) {
    T* row = m + r * cols;
    for (std::size_t c = 0; c < cols; ++c) row[c] += g[r] * x[c];
  }
}

template <typename T>
void axpy_impl(std::size_t n, T alpha, const T* x, T* y) {
  for (std::size_t i = 0; i < n; ++i) y[i] += alpha * x[i];
}

}  // namespace

#define SPECNET_SCALAR_DEFS(T)                                                                \
  void conv2d_forward(const ConvDims& d, const T* in, const T* w, const T* bias, T* out,     \
                      T*) {                                                                   \
    conv_forward_impl(d, in, w, bias, out);                                                   \
  }                                                                                           \
  void conv2d_backward_params(const ConvDims& d, const T* in, const T* gout, T* gw, T* gb,   \
                              T*) {                                                           \
    conv_backward_params_impl(d, in, gout, gw, gb);                                           \
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

SPECNET_SCALAR_DEFS(float)
SPECNET_SCALAR_DEFS(double)

#undef SPECNET_SCALAR_DEFS

}  // namespace specnet::kernels::detail::scalar
