#pragma once

// Data-parallel inner loops behind the layers. Every kernel has a scalar
// reference implementation and, where the build and CPU allow it, an AVX2
// variant chosen at runtime. The convolution and dense-backward variants
// accumulate in exactly the same order as the reference and therefore agree
// bit for bit; the matvec variant reduces across lanes and agrees only up to
// rounding.

#include <cstddef>
#include <span>
#include <string_view>

namespace specnet::kernels {

enum class Isa { scalar, avx2 };

std::string_view isa_name(Isa isa) noexcept;

// True when the variant was compiled in and the CPU supports it.
bool isa_available(Isa isa) noexcept;

// Widest available variant unless overridden by set_active_isa() or the
// SPECNET_ISA environment variable ("scalar" / "avx2").
Isa active_isa() noexcept;

// Throws ConfigError if the variant is unavailable.
void set_active_isa(Isa isa);

struct ConvGeometry {
  std::size_t height = 0;
  std::size_t width = 0;
  std::size_t channels = 0;
  std::size_t filters = 0;
  std::size_t kernel = 3;
  std::size_t stride = 1;
  std::size_t pad = 1;

  std::size_t out_height() const noexcept { return (height + 2 * pad - kernel) / stride + 1; }
  std::size_t out_width() const noexcept { return (width + 2 * pad - kernel) / stride + 1; }
  std::size_t weight_count() const noexcept { return filters * kernel * kernel * channels; }
};

// Cross-correlation. Input (H, W, C), weights (F, k, k, C), output (H', W', F).
// Each output is bias[f] followed by the taps summed in (ky, kx, c) order;
// taps falling in the zero padding are skipped.
template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> input, std::span<const T> weights,
                    std::span<const T> bias, std::span<T> output, Isa isa = active_isa());

// grad_weights and grad_bias are accumulated into (+=), visiting output cells
// in row-major order.
template <typename T>
void conv2d_backward_params(const ConvGeometry& g, std::span<const T> input,
                            std::span<const T> grad_output, std::span<T> grad_weights,
                            std::span<T> grad_bias, Isa isa = active_isa());

// grad_input is overwritten.
template <typename T>
void conv2d_backward_input(const ConvGeometry& g, std::span<const T> weights,
                           std::span<const T> grad_output, std::span<T> grad_input,
                           Isa isa = active_isa());

// y = M x with M (rows, cols) row-major.
template <typename T>
void matvec(std::size_t rows, std::size_t cols, std::span<const T> m, std::span<const T> x,
            std::span<T> y, Isa isa = active_isa());

// y = Mᵀ g, overwriting y (length cols).
template <typename T>
void matvec_transposed(std::size_t rows, std::size_t cols, std::span<const T> m,
                       std::span<const T> g, std::span<T> y, Isa isa = active_isa());

// M += g xᵀ.
template <typename T>
void outer_accumulate(std::size_t rows, std::size_t cols, std::span<const T> g,
                      std::span<const T> x, std::span<T> m, Isa isa = active_isa());

// y += alpha * x.
template <typename T>
void axpy(T alpha, std::span<const T> x, std::span<T> y, Isa isa = active_isa());

}  // namespace specnet::kernels
