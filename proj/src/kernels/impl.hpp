#pragma once

// Raw-pointer kernel entry points shared by the scalar and AVX2 translation
// units. Kept free of standard-library templates so that the AVX2 unit,
// compiled with -mavx2, emits no inline functions the linker could pick for
// the rest of the program.

#include <cstddef>

namespace specnet::kernels::detail {

struct ConvDims {
  std::size_t h, w, c, f, k, stride, pad, oh, ow;
};

#define SPECNET_KERNEL_DECLS(T)                                                              \
  void conv2d_forward(const ConvDims& d, const T* in, const T* w, const T* bias, T* out,    \
                      T* scratch);                                                           \
  void conv2d_backward_params(const ConvDims& d, const T* in, const T* gout, T* gw, T* gb,  \
                              T* scratch);                                                   \
  void conv2d_backward_input(const ConvDims& d, const T* w, const T* gout, T* gin);         \
  void matvec(std::size_t rows, std::size_t cols, const T* m, const T* x, T* y);            \
  void matvec_transposed(std::size_t rows, std::size_t cols, const T* m, const T* g, T* y); \
  void outer_accumulate(std::size_t rows, std::size_t cols, const T* g, const T* x, T* m);  \
  void axpy(std::size_t n, T alpha, const T* x, T* y);

namespace scalar {
SPECNET_KERNEL_DECLS(float)
SPECNET_KERNEL_DECLS(double)
}  // namespace scalar

namespace avx2 {
SPECNET_KERNEL_DECLS(float)
SPECNET_KERNEL_DECLS(double)
}  // namespace avx2

#undef SPECNET_KERNEL_DECLS

// Scratch the AVX2 convolution kernels need: one (k, k, C, F) copy of the
// weights.
inline std::size_t conv_scratch_size(const ConvDims& d) { return d.k * d.k * d.c * d.f; }

}  // namespace specnet::kernels::detail
