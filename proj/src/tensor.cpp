#include "specnet/tensor.hpp"

#include <algorithm>
#include <sstream>

#include "specnet/kernels.hpp"

namespace specnet {

namespace {

void validate_extents(const std::vector<std::size_t>& extents) {
  if (extents.empty()) throw DimensionError("shape must have at least one axis");
  for (std::size_t e : extents) {
    if (e == 0) {
      std::ostringstream os;
      os << "shape extents must be >= 1, got [";
      for (std::size_t i = 0; i < extents.size(); ++i) os << (i ? "x" : "") << extents[i];
      os << "]";
      throw DimensionError(os.str());
    }
  }
}

}  // namespace

Shape::Shape(std::initializer_list<std::size_t> extents) : extents_(extents) {
  validate_extents(extents_);
}

Shape::Shape(std::vector<std::size_t> extents) : extents_(std::move(extents)) {
  validate_extents(extents_);
}

std::size_t Shape::element_count() const noexcept {
  if (extents_.empty()) return 0;
  std::size_t n = 1;
  for (std::size_t e : extents_) n *= e;
  return n;
}

std::string Shape::to_string() const {
  std::ostringstream os;
  os << "(";
  for (std::size_t i = 0; i < extents_.size(); ++i) os << (i ? ", " : "") << extents_[i];
  os << ")";
  return os.str();
}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill) : shape_(std::move(shape)), data_(shape_.element_count(), fill) {}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_.element_count()) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) +
                         " does not match shape " + shape_.to_string());
  }
}

template <typename T>
void Tensor<T>::fill(T value) {
  std::fill(data_.begin(), data_.end(), value);
}

template <typename T>
Tensor<T> Tensor<T>::reshape(Shape shape) const {
  if (shape.element_count() != shape_.element_count()) {
    throw DimensionError("cannot reshape " + shape_.to_string() + " to " + shape.to_string());
  }
  return Tensor<T>(std::move(shape), data_);
}

template <typename T>
Tensor<T> matvec(const Tensor<T>& w, const Tensor<T>& x) {
  if (w.rank() != 2 || x.rank() != 1 || w.shape()[1] != x.shape()[0]) {
    throw DimensionError("matvec: cannot multiply " + w.shape().to_string() + " by " +
                         x.shape().to_string());
  }
  Tensor<T> y(Shape{w.shape()[0]});
  kernels::matvec<T>(w.shape()[0], w.shape()[1], w.data(), x.data(), y.data());
  return y;
}

template <typename T>
Tensor<T> elementwise(const std::function<T(T)>& op, const Tensor<T>& a) {
  Tensor<T> out = a;
  for (auto& v : out.data()) v = op(v);
  return out;
}

template <typename T>
Tensor<T> elementwise(const std::function<T(T, T)>& op, const Tensor<T>& a, const Tensor<T>& b) {
  if (a.shape() != b.shape()) {
    throw DimensionError("elementwise: shape mismatch " + a.shape().to_string() + " vs " +
                         b.shape().to_string());
  }
  Tensor<T> out = a;
  auto o = out.data();
  auto bd = b.data();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = op(o[i], bd[i]);
  return out;
}

namespace {

// Strides for row-major extents.
std::vector<std::size_t> strides_of(const std::vector<std::size_t>& ext) {
  std::vector<std::size_t> s(ext.size(), 1);
  for (std::size_t i = ext.size(); i-- > 1;) s[i - 1] = s[i] * ext[i];
  return s;
}

// Copies an `extents`-sized block between two row-major buffers, each
// addressed through its own strides.
template <typename T>
void copy_block(const T* src, const std::vector<std::size_t>& src_strides, T* dst,
                const std::vector<std::size_t>& dst_strides, const std::vector<std::size_t>& extents,
                std::size_t axis) {
  if (axis + 1 == extents.size()) {
    std::copy(src, src + extents[axis], dst);
    return;
  }
  for (std::size_t i = 0; i < extents[axis]; ++i) {
    copy_block(src + i * src_strides[axis], src_strides, dst + i * dst_strides[axis], dst_strides,
               extents, axis + 1);
  }
}

}  // namespace

template <typename T>
Tensor<T> pad(const Tensor<T>& t, std::span<const AxisPad> pads, T fill) {
  if (pads.size() > t.rank()) {
    throw DimensionError("pad: " + std::to_string(pads.size()) + " pad entries for rank " +
                         std::to_string(t.rank()));
  }
  const auto& in_ext = t.shape().extents();
  std::vector<std::size_t> out_ext = in_ext;
  std::size_t origin = 0;
  for (std::size_t a = 0; a < pads.size(); ++a) out_ext[a] += pads[a].before + pads[a].after;
  Tensor<T> out(Shape(out_ext), fill);
  const auto out_strides = strides_of(out_ext);
  for (std::size_t a = 0; a < pads.size(); ++a) origin += pads[a].before * out_strides[a];
  copy_block(t.raw(), strides_of(in_ext), out.raw() + origin, out_strides, in_ext, 0);
  return out;
}

template <typename T>
Tensor<T> pad_spatial(const Tensor<T>& t, std::size_t height, std::size_t width, T fill) {
  if (t.rank() != 3) throw DimensionError("pad_spatial expects (H, W, C), got " + t.shape().to_string());
  const std::size_t dh = height > t.shape()[0] ? height - t.shape()[0] : 0;
  const std::size_t dw = width > t.shape()[1] ? width - t.shape()[1] : 0;
  const AxisPad pads[2] = {{dh / 2, dh - dh / 2}, {dw / 2, dw - dw / 2}};
  return pad(t, std::span<const AxisPad>(pads), fill);
}

template <typename T>
Tensor<T> slice(const Tensor<T>& t, std::span<const std::size_t> offset, const Shape& extents) {
  if (offset.size() != t.rank() || extents.rank() != t.rank()) {
    throw DimensionError("slice: offset/extent rank must equal tensor rank " + std::to_string(t.rank()));
  }
  std::size_t origin = 0;
  const auto in_strides = strides_of(t.shape().extents());
  for (std::size_t a = 0; a < t.rank(); ++a) {
    if (offset[a] + extents[a] > t.shape()[a]) {
      throw DimensionError("slice: block " + extents.to_string() + " exceeds " + t.shape().to_string());
    }
    origin += offset[a] * in_strides[a];
  }
  Tensor<T> out(extents);
  copy_block(t.raw() + origin, in_strides, out.raw(), strides_of(extents.extents()), extents.extents(), 0);
  return out;
}

#define SPECNET_TENSOR_INSTANTIATE(T)                                                            \
  template class Tensor<T>;                                                                      \
  template Tensor<T> matvec<T>(const Tensor<T>&, const Tensor<T>&);                              \
  template Tensor<T> elementwise<T>(const std::function<T(T)>&, const Tensor<T>&);               \
  template Tensor<T> elementwise<T>(const std::function<T(T, T)>&, const Tensor<T>&,             \
                                    const Tensor<T>&);                                           \
  template Tensor<T> pad<T>(const Tensor<T>&, std::span<const AxisPad>, T);                      \
  template Tensor<T> pad_spatial<T>(const Tensor<T>&, std::size_t, std::size_t, T);              \
  template Tensor<T> slice<T>(const Tensor<T>&, std::span<const std::size_t>, const Shape&);

SPECNET_TENSOR_INSTANTIATE(float)
SPECNET_TENSOR_INSTANTIATE(double)

}  // namespace specnet
