#include "doctest.h"
#include "specnet/tensor.hpp"

using namespace specnet;

TEST_CASE("shape basics") {
  const Shape s{2, 3, 4};
  CHECK(s.rank() == 3);
  CHECK(s.element_count() == 24);
  CHECK(s.to_string() == "(2, 3, 4)");
  CHECK(Shape{}.element_count() == 0);
  CHECK_THROWS_AS(Shape({2, 0}), DimensionError);
  CHECK_THROWS_AS(Shape(std::vector<std::size_t>{}), DimensionError);
}

TEST_CASE("tensor construction and access") {
  Tensor32 t(Shape{2, 2, 3}, 1.5f);
  CHECK(t.size() == 12);
  for (float v : t.data()) CHECK(v == 1.5f);
  t.at(1, 0, 2) = 7;
  CHECK(t[(1 * 2 + 0) * 3 + 2] == 7);
  CHECK_THROWS_AS(Tensor32(Shape{2, 2}, std::vector<float>(3)), DimensionError);

  const Tensor32 r = t.reshape(Shape{12});
  CHECK(r.shape() == Shape{12});
  CHECK(r[8] == 7);
  CHECK_THROWS_AS(t.reshape(Shape{5}), DimensionError);
}

TEST_CASE("matvec matches hand computation") {
  const Tensor64 w(Shape{2, 3}, std::vector<double>{1, 2, 3, 4, 5, 6});
  const Tensor64 x(Shape{3}, std::vector<double>{1, 0, -1});
  const Tensor64 y = matvec(w, x);
  CHECK(y[0] == doctest::Approx(-2));
  CHECK(y[1] == doctest::Approx(-2));
  CHECK_THROWS_AS(matvec(w, Tensor64(Shape{2})), DimensionError);
}

TEST_CASE("elementwise") {
  const Tensor32 a(Shape{3}, std::vector<float>{1, -2, 3});
  const Tensor32 b(Shape{3}, std::vector<float>{4, 5, 6});
  const auto sq = elementwise<float>([](float v) { return v * v; }, a);
  CHECK(sq[1] == 4);
  const auto sum = elementwise<float>([](float u, float v) { return u + v; }, a, b);
  CHECK(sum[2] == 9);
  CHECK_THROWS_AS(elementwise<float>([](float u, float v) { return u + v; }, a, Tensor32(Shape{4})),
                  DimensionError);
}

TEST_CASE("pad and slice are inverse on the interior") {
  Tensor32 t(Shape{2, 3, 1});
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(i + 1);
  const AxisPad pads[] = {{1, 2}, {0, 1}};
  const Tensor32 p = pad(t, std::span<const AxisPad>(pads), -1.0f);
  CHECK(p.shape() == Shape{5, 4, 1});
  CHECK(p.at(0, 0, 0) == -1);
  CHECK(p.at(1, 0, 0) == 1);
  const std::size_t offset[] = {1, 0, 0};
  CHECK(slice(p, offset, t.shape()) == t);
  const std::size_t bad[] = {4, 0, 0};
  CHECK_THROWS_AS(slice(p, bad, t.shape()), DimensionError);
}

TEST_CASE("pad_spatial centres with the odd pixel bottom-right") {
  Tensor32 t(Shape{1, 2, 1}, 1.0f);
  const Tensor32 p = pad_spatial(t, 4, 5);
  CHECK(p.shape() == Shape{4, 5, 1});
  // rows: 3 extra -> 1 above, 2 below; cols: 3 extra -> 1 left, 2 right
  CHECK(p.at(1, 1, 0) == 1);
  CHECK(p.at(1, 2, 0) == 1);
  CHECK(p.at(0, 1, 0) == 0);
  CHECK(p.at(1, 3, 0) == 0);
  CHECK(pad_spatial(t, 1, 1).shape() == t.shape());
}

TEST_CASE("tensor_cast") {
  const Tensor32 a(Shape{2}, std::vector<float>{0.5f, -1.25f});
  const Tensor64 b = tensor_cast<double>(a);
  CHECK(b[0] == 0.5);
  CHECK(b[1] == -1.25);
}
