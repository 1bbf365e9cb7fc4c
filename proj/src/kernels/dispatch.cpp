#include <atomic>
#include <cstdlib>
#include <string>
#include <vector>

#include "impl.hpp"
#include "specnet/errors.hpp"
#include "specnet/kernels.hpp"

namespace specnet::kernels {
namespace {

bool cpu_has_avx2() noexcept {
#if defined(SPECNET_HAVE_AVX2) && (defined(__GNUC__) || defined(__clang__))
  return __builtin_cpu_supports("avx2");
#else
  return false;
#endif
}

Isa initial_isa() noexcept {
  if (const char* env = std::getenv("SPECNET_ISA")) {
    const std::string v(env);
    if (v == "scalar") return Isa::scalar;
  }
  return cpu_has_avx2() ? Isa::avx2 : Isa::scalar;
}

std::atomic<Isa>& active() noexcept {
  static std::atomic<Isa> isa{initial_isa()};
  return isa;
}

Isa resolve(Isa requested) {
  if (!isa_available(requested)) {
    throw ConfigError("kernel variant '" + std::string(isa_name(requested)) +
                      "' is not available on this machine");
  }
  return requested;
}

detail::ConvDims dims_of(const ConvGeometry& g) {
  return {g.height, g.width, g.channels, g.filters, g.kernel, g.stride, g.pad,
          g.out_height(), g.out_width()};
}

template <typename T>
T* scratch_for(const detail::ConvDims& d) {
  thread_local std::vector<T> buffer;
  const std::size_t n = detail::conv_scratch_size(d);
  if (buffer.size() < n) buffer.resize(n);
  return buffer.data();
}

void require(bool ok, const char* what) {
  if (!ok) throw DimensionError(what);
}

void check_conv(const ConvGeometry& g) {
  require(g.kernel >= 1 && g.stride >= 1, "convolution kernel and stride must be >= 1");
  require(g.height + 2 * g.pad >= g.kernel && g.width + 2 * g.pad >= g.kernel,
          "convolution window larger than padded input");
}

}  // namespace

std::string_view isa_name(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return "scalar";
    case Isa::avx2: return "avx2";
  }
  return "unknown";
}

bool isa_available(Isa isa) noexcept {
  switch (isa) {
    case Isa::scalar: return true;
    case Isa::avx2: return cpu_has_avx2();
  }
  return false;
}

Isa active_isa() noexcept { return active().load(std::memory_order_relaxed); }

void set_active_isa(Isa isa) { active().store(resolve(isa), std::memory_order_relaxed); }

#if defined(SPECNET_HAVE_AVX2)
#define SPECNET_DISPATCH(isa, call) \
  ((resolve(isa) == Isa::avx2) ? detail::avx2::call : detail::scalar::call)
#else
#define SPECNET_DISPATCH(isa, call) (resolve(isa), detail::scalar::call)
#endif

template <typename T>
void conv2d_forward(const ConvGeometry& g, std::span<const T> input, std::span<const T> weights,
                    std::span<const T> bias, std::span<T> output, Isa isa) {
  check_conv(g);
  require(input.size() == g.height * g.width * g.channels, "conv2d_forward: input size");
  require(weights.size() == g.weight_count(), "conv2d_forward: weight size");
  require(bias.size() == g.filters, "conv2d_forward: bias size");
  require(output.size() == g.out_height() * g.out_width() * g.filters, "conv2d_forward: output size");
  const auto d = dims_of(g);
  SPECNET_DISPATCH(isa, conv2d_forward(d, input.data(), weights.data(), bias.data(),
                                       output.data(), scratch_for<T>(d)));
}

template <typename T>
void conv2d_backward_params(const ConvGeometry& g, std::span<const T> input,
                            std::span<const T> grad_output, std::span<T> grad_weights,
                            std::span<T> grad_bias, Isa isa) {
  check_conv(g);
  require(input.size() == g.height * g.width * g.channels, "conv2d_backward_params: input size");
  require(grad_output.size() == g.out_height() * g.out_width() * g.filters,
          "conv2d_backward_params: grad_output size");
  require(grad_weights.size() == g.weight_count(), "conv2d_backward_params: grad_weights size");
  require(grad_bias.size() == g.filters, "conv2d_backward_params: grad_bias size");
  const auto d = dims_of(g);
  SPECNET_DISPATCH(isa, conv2d_backward_params(d, input.data(), grad_output.data(),
                                               grad_weights.data(), grad_bias.data(),
                                               scratch_for<T>(d)));
}

template <typename T>
void conv2d_backward_input(const ConvGeometry& g, std::span<const T> weights,
                           std::span<const T> grad_output, std::span<T> grad_input, Isa isa) {
  check_conv(g);
  require(weights.size() == g.weight_count(), "conv2d_backward_input: weight size");
  require(grad_output.size() == g.out_height() * g.out_width() * g.filters,
          "conv2d_backward_input: grad_output size");
  require(grad_input.size() == g.height * g.width * g.channels, "conv2d_backward_input: grad_input size");
  const auto d = dims_of(g);
  SPECNET_DISPATCH(isa, conv2d_backward_input(d, weights.data(), grad_output.data(), grad_input.data()));
}

template <typename T>
void matvec(std::size_t rows, std::size_t cols, std::span<const T> m, std::span<const T> x,
            std::span<T> y, Isa isa) {
  require(m.size() == rows * cols && x.size() == cols && y.size() == rows, "matvec: sizes");
  SPECNET_DISPATCH(isa, matvec(rows, cols, m.data(), x.data(), y.data()));
}

template <typename T>
void matvec_transposed(std::size_t rows, std::size_t cols, std::span<const T> m,
                       std::span<const T> g, std::span<T> y, Isa isa) {
  require(m.size() == rows * cols && g.size() == rows && y.size() == cols, "matvec_transposed: sizes");
  SPECNET_DISPATCH(isa, matvec_transposed(rows, cols, m.data(), g.data(), y.data()));
}

template <typename T>
void outer_accumulate(std::size_t rows, std::size_t cols, std::span<const T> g,
                      std::span<const T> x, std::span<T> m, Isa isa) {
  require(m.size() == rows * cols && g.size() == rows && x.size() == cols, "outer_accumulate: sizes");
  SPECNET_DISPATCH(isa, outer_accumulate(rows, cols, g.data(), x.data(), m.data()));
}

template <typename T>
void axpy(T alpha, std::span<const T> x, std::span<T> y, Isa isa) {
  require(x.size() == y.size(), "axpy: sizes");
  SPECNET_DISPATCH(isa, axpy(x.size(), alpha, x.data(), y.data()));
}

#undef SPECNET_DISPATCH

#define SPECNET_INSTANTIATE(T)                                                                     \
  template void conv2d_forward<T>(const ConvGeometry&, std::span<const T>, std::span<const T>,    \
                                  std::span<const T>, std::span<T>, Isa);                         \
  template void conv2d_backward_params<T>(const ConvGeometry&, std::span<const T>,                \
                                          std::span<const T>, std::span<T>, std::span<T>, Isa);   \
  template void conv2d_backward_input<T>(const ConvGeometry&, std::span<const T>,                 \
                                         std::span<const T>, std::span<T>, Isa);                  \
  template void matvec<T>(std::size_t, std::size_t, std::span<const T>, std::span<const T>,       \
                          std::span<T>, Isa);                                                     \
  template void matvec_transposed<T>(std::size_t, std::size_t, std::span<const T>,                \
                                     std::span<const T>, std::span<T>, Isa);                      \
  template void outer_accumulate<T>(std::size_t, std::size_t, std::span<const T>,                 \
                                    std::span<const T>, std::span<T>, Isa);                       \
  template void axpy<T>(T, std::span<const T>, std::span<T>, Isa);

SPECNET_INSTANTIATE(float)
SPECNET_INSTANTIATE(double)

}  // namespace specnet::kernels
