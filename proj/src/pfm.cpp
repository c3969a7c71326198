// Portable float map (Middlebury flavour), single channel only.

#include <bit>
#include <cmath>
#include <cstring>
#include <limits>
#include <string>

#include "tomdistill/formats.hpp"

namespace tomdistill {

namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::string token() {
    while (pos_ < bytes_.size() && is_space(bytes_[pos_])) ++pos_;
    std::string out;
    while (pos_ < bytes_.size() && !is_space(bytes_[pos_])) {
      out.push_back(static_cast<char>(bytes_[pos_++]));
    }
    if (out.empty()) throw FormatError("pfm: truncated header");
    return out;
  }

  // Exactly one whitespace byte separates the scale from the payload.
  void single_space() {
    if (pos_ >= bytes_.size() || !is_space(bytes_[pos_])) {
      throw FormatError("pfm: missing separator before payload");
    }
    ++pos_;
  }

  std::size_t position() const { return pos_; }

 private:
  static bool is_space(std::uint8_t c) {
    return c == ' ' || c == '\n' || c == '\r' || c == '\t';
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

int parse_dim(const std::string& token) {
  std::size_t used = 0;
  long v = 0;
  try {
    v = std::stol(token, &used);
  } catch (const std::exception&) {
    throw FormatError("pfm: bad dimension '" + token + "'");
  }
  if (used != token.size() || v <= 0 || v > (1 << 20)) {
    throw FormatError("pfm: bad dimension '" + token + "'");
  }
  return static_cast<int>(v);
}

bool in_domain(double v, MapSpace space) {
  if (!std::isfinite(v)) return false;
  switch (space) {
    case MapSpace::kDepthMm:
      return v > 0.0;
    case MapSpace::kDisparityPx:
      return v >= 0.0;
    case MapSpace::kAffineInverseDepth:
      return true;
  }
  return true;
}

}  // namespace

ScalarMap decode_pfm(std::span<const std::uint8_t> bytes, MapSpace space) {
  HeaderReader header(bytes);
  const std::string magic = header.token();
  if (magic == "PF") {
    throw FormatError("pfm: 3-channel map, expected a single channel");
  }
  if (magic != "Pf") throw FormatError("pfm: bad magic '" + magic + "'");
  const int width = parse_dim(header.token());
  const int height = parse_dim(header.token());
  const std::string scale_token = header.token();
  double scale = 0.0;
  try {
    scale = std::stod(scale_token);
  } catch (const std::exception&) {
    throw FormatError("pfm: bad scale '" + scale_token + "'");
  }
  if (scale == 0.0 || !std::isfinite(scale)) {
    throw FormatError("pfm: scale must be non-zero");
  }
  header.single_space();

  const bool little = scale < 0.0;
  const std::size_t count = static_cast<std::size_t>(width) * height;
  const std::size_t offset = header.position();
  if (bytes.size() - offset < count * 4) {
    throw FormatError("pfm: truncated payload");
  }

  std::vector<double> values(count);
  std::vector<std::uint8_t> valid(count);
  for (int row = 0; row < height; ++row) {
    const int y = height - 1 - row;  // bottom-up on disk
    for (int x = 0; x < width; ++x) {
      const std::uint8_t* p =
          bytes.data() + offset + (static_cast<std::size_t>(row) * width + x) * 4;
      std::uint32_t bits = little
          ? (std::uint32_t{p[0]} | std::uint32_t{p[1]} << 8 |
             std::uint32_t{p[2]} << 16 | std::uint32_t{p[3]} << 24)
          : (std::uint32_t{p[3]} | std::uint32_t{p[2]} << 8 |
             std::uint32_t{p[1]} << 16 | std::uint32_t{p[0]} << 24);
      const double v = std::bit_cast<float>(bits);
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      values[i] = v;
      valid[i] = in_domain(v, space) ? 1 : 0;
    }
  }
  return ScalarMap(width, height, space, std::move(values), std::move(valid));
}

ScalarMap read_pfm(const fs::path& path, MapSpace space) {
  const auto bytes = read_file_bytes(path);
  try {
    return decode_pfm(bytes, space);
  } catch (const FormatError& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

std::vector<std::uint8_t> encode_pfm(const ScalarMap& map) {
  const std::string header = "Pf\n" + std::to_string(map.width()) + " " +
                             std::to_string(map.height()) + "\n-1.000000\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.reserve(header.size() + map.extent().pixels() * 4);
  for (int row = 0; row < map.height(); ++row) {
    const int y = map.height() - 1 - row;
    for (int x = 0; x < map.width(); ++x) {
      const float v = map.valid_at(x, y)
                          ? static_cast<float>(map.at(x, y))
                          : std::numeric_limits<float>::infinity();
      const auto bits = std::bit_cast<std::uint32_t>(v);
      out.push_back(static_cast<std::uint8_t>(bits));
      out.push_back(static_cast<std::uint8_t>(bits >> 8));
      out.push_back(static_cast<std::uint8_t>(bits >> 16));
      out.push_back(static_cast<std::uint8_t>(bits >> 24));
    }
  }
  return out;
}

void write_pfm(const ScalarMap& map, const fs::path& path) {
  write_file_atomic(path, encode_pfm(map));
}

}  // namespace tomdistill
