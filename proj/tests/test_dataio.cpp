#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "specnet/dataio.hpp"

using namespace specnet;

namespace {

MultispectralImage random_image(std::mt19937_64& rng, std::size_t h, std::size_t w, std::size_t c) {
  std::uniform_real_distribution<float> u(0, 1);
  Tensor32 t(Shape{h, w, c});
  for (auto& v : t.data()) v = u(rng);
  std::vector<float> bands(c);
  for (std::size_t i = 0; i < c; ++i) bands[i] = 400.0f + 10.0f * static_cast<float>(i);
  return MultispectralImage(std::move(t), std::move(bands));
}

}  // namespace

TEST_CASE("MSI f32 round trip is bit exact") {
  std::mt19937_64 rng(1);
  for (int i = 0; i < 20; ++i) {
    auto img = random_image(rng, 1 + rng() % 9, 1 + rng() % 9, 1 + rng() % 12);
    img.pixels[0] = -3.5f;  // f32 payloads are not range-restricted
    const auto bytes = encode_msi(img);
    CHECK(decode_msi(bytes) == img);
  }
}

TEST_CASE("MSI u16 quantization") {
  Tensor32 t(Shape{1, 3, 1}, std::vector<float>{0.0f, 0.5f, 1.5f});
  const MultispectralImage img(t);
  const auto back = decode_msi(encode_msi(img, PayloadKind::u16));
  CHECK(back.pixels[0] == 0.0f);
  CHECK(back.pixels[1] == static_cast<float>(std::lround(0.5 * 65535)) / 65535.0f);
  CHECK(back.pixels[2] == 1.0f);
  CHECK(encode_msi(back, PayloadKind::u16) == encode_msi(img, PayloadKind::u16));
}

TEST_CASE("MSI decoding errors") {
  std::mt19937_64 rng(2);
  const auto bytes = encode_msi(random_image(rng, 3, 3, 2));
  auto bad = bytes;
  bad[1] = 'Z';
  CHECK_THROWS_AS(decode_msi(bad), BadMagicError);
  CHECK_THROWS_AS(decode_msi(std::span(bytes).first(bytes.size() - 1)), TruncatedError);
  auto extra = bytes;
  extra.push_back(1);
  CHECK_THROWS_AS(decode_msi(extra), ExtentMismatchError);
  CHECK_THROWS_AS(decode_msi(std::span(bytes).first(2)), FormatError);

  Tensor32 nan_pixels(Shape{1, 1, 1}, std::numeric_limits<float>::quiet_NaN());
  CHECK_THROWS_AS(encode_msi(MultispectralImage(nan_pixels)), NonFiniteError);
}

TEST_CASE("image validation") {
  CHECK_THROWS(MultispectralImage(Tensor32(Shape{2, 2}), {}).validate());
  CHECK_THROWS(MultispectralImage(Tensor32(Shape{2, 2, 2}), {500, 400}).validate());
  CHECK_NOTHROW(MultispectralImage(Tensor32(Shape{2, 2, 2}), {400, 500}).validate());
}

TEST_CASE("manifest parsing") {
  const Manifest m = parse_manifest("classes,a,b,c\nimg/x.msi,0\n\nimg/y.msi,2\n");
  CHECK(m.class_names == std::vector<std::string>{"a", "b", "c"});
  REQUIRE(m.entries.size() == 2);
  CHECK(m.entries[1].path == "img/y.msi");
  CHECK(m.entries[1].label == 2);
  CHECK(parse_manifest(format_manifest(m)).entries.size() == 2);
  CHECK_THROWS_AS(parse_manifest("img/x.msi,0\n"), DatasetError);
  CHECK_THROWS_AS(parse_manifest("classes,a,b\nimg/x.msi,2\n"), DatasetError);
  CHECK_THROWS_AS(parse_manifest("classes,a,b\nimg/x.msi,one\n"), DatasetError);
  CHECK(parse_manifest("classes,a,b\nimg/x.msi,b\n").entries[0].label == 1);
}

TEST_CASE("dataset write and load") {
  SyntheticSpec spec;
  spec.height = 6;
  spec.width = 5;
  spec.channels = 4;
  spec.per_class = 3;
  const LabeledDataset ds = generate_synthetic(spec);
  const auto dir = oracle::scratch_dir("dataio");
  const auto manifest = write_dataset(dir / "d", ds);
  const LabeledDataset back = load_dataset(manifest);
  REQUIRE(back.size() == ds.size());
  CHECK(back.class_names == ds.class_names);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    CHECK(back.samples[i].image == ds.samples[i].image);
    CHECK(back.samples[i].label == ds.samples[i].label);
  }
  std::filesystem::remove(dir / "d" / "class0_00000.msi");
  CHECK_THROWS_AS(load_dataset(manifest), DatasetError);
  CHECK_THROWS_AS(load_dataset(dir / "nope.csv"), IoError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("synthetic generator") {
  SyntheticSpec spec;
  spec.per_class = 5;
  const LabeledDataset a = generate_synthetic(spec);
  const LabeledDataset b = generate_synthetic(spec);
  CHECK(a.size() == 20);
  CHECK(a.class_counts() == std::vector<std::size_t>{5, 5, 5, 5});
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.samples[i].image == b.samples[i].image);
  for (const auto& s : a.samples) {
    CHECK(s.image.pixels.shape() == Shape{32, 32, 8});
    CHECK(s.provenance == Provenance::synthetic);
    for (float v : s.image.pixels.data()) {
      CHECK(v >= 0.0f);
      CHECK(v <= 1.0f);
    }
  }
  spec.seed = 8;
  CHECK_FALSE(generate_synthetic(spec).samples[0].image == a.samples[0].image);

  // The class signal is a spectral bump: the mean spectrum of each class
  // peaks at that class's band.
  const auto sig = SyntheticSpec{}.resolved_classes();
  for (std::size_t k = 0; k < 4; ++k) {
    std::vector<double> mean(8, 0);
    for (const auto& s : a.samples) {
      if (s.label != k) continue;
      for (std::size_t i = 0; i < s.image.pixels.size(); ++i) mean[i % 8] += s.image.pixels[i];
    }
    const auto peak = std::max_element(mean.begin(), mean.end()) - mean.begin();
    CHECK(std::abs(static_cast<double>(peak) - sig[k].peak_band) <= 1.0);
  }

  spec.per_class = 0;
  CHECK_THROWS_AS(generate_synthetic(spec), ConfigError);
}
