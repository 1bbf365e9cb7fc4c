#include "specnet/dataio.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "byte_io.hpp"

namespace specnet {

namespace {

constexpr std::string_view kMsiMagic = "MSI1";
constexpr std::uint16_t kMsiVersion = 1;
constexpr std::string_view kManifestName = "manifest.csv";

}  // namespace

MultispectralImage::MultispectralImage(Tensor32 pixels_, std::vector<float> band_nm_)
    : pixels(std::move(pixels_)), band_nm(std::move(band_nm_)) {
  validate();
}

void MultispectralImage::validate() const {
  if (pixels.rank() != 3) {
    throw DimensionError("multispectral image must be (H, W, C), got " + pixels.shape().to_string());
  }
  if (!band_nm.empty()) {
    if (band_nm.size() != channels()) {
      throw FormatError("image has " + std::to_string(channels()) + " channels but " +
                        std::to_string(band_nm.size()) + " band labels");
    }
    for (std::size_t i = 1; i < band_nm.size(); ++i) {
      if (!(band_nm[i] > band_nm[i - 1])) throw FormatError("band labels must be strictly increasing");
    }
  }
  for (float v : pixels.data()) {
    if (!std::isfinite(v)) throw NonFiniteError("image contains a non-finite pixel value");
  }
}

std::vector<std::size_t> LabeledDataset::labels() const {
  std::vector<std::size_t> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(s.label);
  return out;
}

std::vector<std::size_t> LabeledDataset::class_counts() const {
  std::vector<std::size_t> counts(class_names.size(), 0);
  for (const auto& s : samples) {
    if (s.label < counts.size()) ++counts[s.label];
  }
  return counts;
}

void LabeledDataset::validate() const {
  if (samples.empty()) return;
  const Shape& shape = samples.front().image.pixels.shape();
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].image.pixels.shape() != shape) {
      throw DatasetError("sample " + std::to_string(i) + " has shape " +
                         samples[i].image.pixels.shape().to_string() + ", dataset shape is " +
                         shape.to_string());
    }
    if (samples[i].label >= class_names.size()) {
      throw DatasetError("sample " + std::to_string(i) + " has label " + std::to_string(samples[i].label) +
                         " but only " + std::to_string(class_names.size()) + " classes");
    }
  }
}

std::vector<std::string> default_class_names() { return {"class0", "class1", "class2", "class3"}; }

std::vector<std::uint8_t> encode_msi(const MultispectralImage& image, PayloadKind kind) {
  image.validate();
  if (image.band_nm.size() > 255) throw FormatError("MSI band-label block holds at most 255 labels");
  const std::size_t h = image.height(), w = image.width(), c = image.channels();
  detail::ByteWriter out;
  out.raw(kMsiMagic);
  out.put<std::uint16_t>(kMsiVersion);
  out.put<std::uint8_t>(static_cast<std::uint8_t>(kind));
  out.put<std::uint8_t>(0);
  out.put<std::uint32_t>(static_cast<std::uint32_t>(h));
  out.put<std::uint32_t>(static_cast<std::uint32_t>(w));
  out.put<std::uint32_t>(static_cast<std::uint32_t>(c));
  out.put<std::uint8_t>(static_cast<std::uint8_t>(image.band_nm.size()));
  out.put_all<float>(image.band_nm);

  // Planar: all of band 0, then band 1, ...
  const auto px = image.pixels.data();
  if (kind == PayloadKind::f32) {
    std::vector<float> plane(h * w);
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t i = 0; i < h * w; ++i) plane[i] = px[i * c + ch];
      out.put_all<float>(plane);
    }
  } else {
    std::vector<std::uint16_t> plane(h * w);
    for (std::size_t ch = 0; ch < c; ++ch) {
      for (std::size_t i = 0; i < h * w; ++i) {
        const float v = std::clamp(px[i * c + ch], 0.0f, 1.0f);
        plane[i] = static_cast<std::uint16_t>(std::lround(static_cast<double>(v) * 65535.0));
      }
      out.put_all<std::uint16_t>(plane);
    }
  }
  return std::move(out.bytes());
}

MultispectralImage decode_msi(std::span<const std::uint8_t> bytes, const std::string& context) {
  detail::ByteReader in(bytes, context);
  if (bytes.size() < kMsiMagic.size() || in.raw(kMsiMagic.size()) != kMsiMagic) {
    throw BadMagicError(context + ": not an MSI file (bad magic)");
  }
  const auto version = in.get<std::uint16_t>();
  if (version != kMsiVersion) throw FormatError(context + ": unsupported MSI version " + std::to_string(version));
  const auto kind_raw = in.get<std::uint8_t>();
  if (kind_raw > 1) throw FormatError(context + ": unknown payload kind " + std::to_string(kind_raw));
  const auto kind = static_cast<PayloadKind>(kind_raw);
  in.get<std::uint8_t>();  // reserved
  const std::size_t h = in.get<std::uint32_t>();
  const std::size_t w = in.get<std::uint32_t>();
  const std::size_t c = in.get<std::uint32_t>();
  if (h == 0 || w == 0 || c == 0) {
    throw ExtentMismatchError(context + ": zero extent in header " + std::to_string(h) + "x" +
                              std::to_string(w) + "x" + std::to_string(c));
  }
  const std::size_t band_count = in.get<std::uint8_t>();
  if (band_count != 0 && band_count != c) {
    throw ExtentMismatchError(context + ": " + std::to_string(band_count) + " band labels for " +
                              std::to_string(c) + " channels");
  }
  std::vector<float> bands(band_count);
  in.get_all<float>(bands);

  const std::size_t scalar_size = kind == PayloadKind::f32 ? 4 : 2;
  const std::size_t expected = h * w * c * scalar_size;
  if (in.remaining() < expected) {
    throw TruncatedError(context + ": header claims " + std::to_string(h) + "x" + std::to_string(w) + "x" +
                         std::to_string(c) + " (" + std::to_string(expected) + " payload bytes) but only " +
                         std::to_string(in.remaining()) + " bytes follow");
  }
  if (in.remaining() > expected) {
    throw ExtentMismatchError(context + ": " + std::to_string(in.remaining() - expected) +
                              " bytes beyond the payload declared by the header");
  }

  Tensor32 pixels(Shape{h, w, c});
  auto px = pixels.data();
  if (kind == PayloadKind::f32) {
    std::vector<float> plane(h * w);
    for (std::size_t ch = 0; ch < c; ++ch) {
      in.get_all<float>(plane);
      for (std::size_t i = 0; i < h * w; ++i) {
        if (!std::isfinite(plane[i])) {
          throw NonFiniteError(context + ": non-finite value in band " + std::to_string(ch) + " at pixel " +
                               std::to_string(i));
        }
        px[i * c + ch] = plane[i];
      }
    }
  } else {
    std::vector<std::uint16_t> plane(h * w);
    for (std::size_t ch = 0; ch < c; ++ch) {
      in.get_all<std::uint16_t>(plane);
      for (std::size_t i = 0; i < h * w; ++i) px[i * c + ch] = static_cast<float>(plane[i] / 65535.0);
    }
  }
  for (std::size_t i = 1; i < bands.size(); ++i) {
    if (!(bands[i] > bands[i - 1])) throw FormatError(context + ": band labels must be strictly increasing");
  }
  MultispectralImage image;
  image.pixels = std::move(pixels);
  image.band_nm = std::move(bands);
  return image;
}

void write_msi(const std::filesystem::path& path, const MultispectralImage& image, PayloadKind kind) {
  detail::write_file(path, encode_msi(image, kind));
}

MultispectralImage read_msi(const std::filesystem::path& path) {
  return decode_msi(detail::read_file(path), path.string());
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace

Manifest parse_manifest(const std::string& text, const std::string& context) {
  Manifest m;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty()) continue;
    const std::string where = context + ":" + std::to_string(line_no);
    if (!have_header) {
      if (t.rfind("classes,", 0) != 0) throw DatasetError(where + ": expected 'classes,<name>,...' header");
      std::istringstream names(t.substr(8));
      std::string name;
      while (std::getline(names, name, ',')) m.class_names.push_back(trim(name));
      if (m.class_names.empty()) throw DatasetError(where + ": header names no classes");
      have_header = true;
      continue;
    }
    const auto comma = t.rfind(',');
    if (comma == std::string::npos) throw DatasetError(where + ": expected '<path>,<label>'");
    ManifestEntry e;
    e.path = trim(std::string_view(t).substr(0, comma));
    const std::string label = trim(std::string_view(t).substr(comma + 1));
    if (e.path.empty()) throw DatasetError(where + ": empty path");
    const auto [ptr, ec] = std::from_chars(label.data(), label.data() + label.size(), e.label);
    if (ec != std::errc() || ptr != label.data() + label.size()) {
      // Labels may also be given by class name.
      const auto it = std::find(m.class_names.begin(), m.class_names.end(), label);
      if (it == m.class_names.end()) throw DatasetError(where + ": unknown label '" + label + "'");
      e.label = static_cast<std::size_t>(it - m.class_names.begin());
    }
    if (e.label >= m.class_names.size()) {
      throw DatasetError(where + ": unknown label " + label + " (" + std::to_string(m.class_names.size()) +
                         " classes)");
    }
    m.entries.push_back(std::move(e));
  }
  if (!have_header) throw DatasetError(context + ": empty manifest");
  return m;
}

std::string format_manifest(const Manifest& manifest) {
  std::ostringstream out;
  out << "classes";
  for (const auto& n : manifest.class_names) out << ',' << n;
  out << '\n';
  for (const auto& e : manifest.entries) out << e.path << ',' << e.label << '\n';
  return out.str();
}

LabeledDataset load_dataset(const std::filesystem::path& manifest_path) {
  std::ifstream in(manifest_path);
  if (!in) throw IoError("cannot open manifest '" + manifest_path.string() + "'");
  std::stringstream buffer;
  buffer << in.rdbuf();
  const Manifest m = parse_manifest(buffer.str(), manifest_path.string());
  if (m.entries.empty()) throw DatasetError(manifest_path.string() + ": manifest lists no images (empty dataset)");

  LabeledDataset ds;
  ds.class_names = m.class_names;
  const auto base = manifest_path.parent_path();
  for (std::size_t i = 0; i < m.entries.size(); ++i) {
    const auto path = base / m.entries[i].path;
    if (!std::filesystem::exists(path)) {
      throw DatasetError(manifest_path.string() + ": missing image file '" + path.string() + "'");
    }
    Sample s;
    s.image = read_msi(path);
    s.label = m.entries[i].label;
    s.provenance = Provenance::real;
    s.source_index = i;
    if (!ds.samples.empty() && s.image.pixels.shape() != ds.samples.front().image.pixels.shape()) {
      throw DatasetError(manifest_path.string() + ": '" + m.entries[i].path + "' has shape " +
                         s.image.pixels.shape().to_string() + " but earlier images are " +
                         ds.samples.front().image.pixels.shape().to_string() + " (heterogeneous shapes)");
    }
    ds.samples.push_back(std::move(s));
  }
  return ds;
}

std::filesystem::path write_dataset(const std::filesystem::path& directory, const LabeledDataset& dataset,
                                    PayloadKind kind) {
  std::error_code ec;
  std::filesystem::create_directories(directory, ec);
  if (ec) throw IoError("cannot create directory '" + directory.string() + "': " + ec.message());
  Manifest m;
  m.class_names = dataset.class_names;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    const auto& s = dataset.samples[i];
    std::ostringstream name;
    name << "class" << s.label << '_' << std::setw(5) << std::setfill('0') << i << ".msi";
    write_msi(directory / name.str(), s.image, kind);
    m.entries.push_back({name.str(), s.label});
  }
  const auto manifest_path = directory / std::string(kManifestName);
  const std::string text = format_manifest(m);
  detail::write_file(manifest_path, std::span<const std::uint8_t>(
                                        reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
  return manifest_path;
}

}  // namespace specnet
