#include "mammo/pnm_io.hpp"

#include <cctype>
#include <fstream>
#include <iterator>
#include <string>

#include "mammo/errors.hpp"

namespace mammo {
namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  std::size_t next_uint() {
    skip_space_and_comments();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) {
      throw FormatError("PGM header: expected unsigned integer");
    }
    std::size_t v = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      v = v * 10 + static_cast<std::size_t>(bytes_[pos_] - '0');
      if (v > (1u << 28)) throw FormatError("PGM header: value out of range");
      ++pos_;
    }
    return v;
  }

  // Exactly one whitespace byte separates maxval from the raster.
  std::size_t raster_start() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
      throw FormatError("PGM header: missing separator before raster");
    }
    return pos_ + 1;
  }

 private:
  void skip_space_and_comments() {
    while (pos_ < bytes_.size()) {
      if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 2;
};

std::vector<std::uint8_t> header(const char* magic, std::size_t w, std::size_t h) {
  const std::string s = std::string(magic) + "\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  return {s.begin(), s.end()};
}

}  // namespace

GrayImage read_pgm(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P') throw FormatError("not a PNM file");
  if (bytes[1] != '5') {
    throw FormatError(std::string("unsupported PNM variant P") + static_cast<char>(bytes[1]));
  }
  HeaderReader reader(bytes);
  const std::size_t w = reader.next_uint();
  const std::size_t h = reader.next_uint();
  const std::size_t maxval = reader.next_uint();
  if (w == 0 || h == 0) throw FormatError("PGM header: zero dimension");
  if (maxval == 0 || maxval > 255) throw FormatError("PGM header: maxval must be in 1..255");
  const std::size_t start = reader.raster_start();
  if (bytes.size() < start + w * h) {
    throw LengthError("PGM payload truncated: expected " + std::to_string(w * h) + " bytes, got " +
                      std::to_string(bytes.size() > start ? bytes.size() - start : 0));
  }
  std::vector<double> data(w * h);
  const double scale = static_cast<double>(maxval);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = static_cast<double>(bytes[start + i]) / scale;
  return GrayImage(w, h, std::move(data));
}

GrayImage read_pgm_file(const std::filesystem::path& path) { return read_pgm(read_file(path)); }

std::vector<std::uint8_t> write_pgm(const GrayImage& image) {
  auto out = header("P5", image.width(), image.height());
  out.reserve(out.size() + image.size());
  for (double v : image.pixels()) out.push_back(to_u8(v));
  return out;
}

std::vector<std::uint8_t> write_pgm(const BinaryMask& mask) {
  auto out = header("P5", mask.width(), mask.height());
  out.reserve(out.size() + mask.size());
  for (std::size_t i = 0; i < mask.size(); ++i) out.push_back(mask[i] ? 255 : 0);
  return out;
}

std::vector<std::uint8_t> write_overlay_ppm(const GrayImage& image, const BinaryMask& contour_mask, Rgb color) {
  if (contour_mask.width() != image.width() || contour_mask.height() != image.height()) {
    throw ArgumentError("overlay: mask dimensions differ from image");
  }
  auto out = header("P6", image.width(), image.height());
  out.reserve(out.size() + 3 * image.size());
  const auto px = image.pixels();
  for (std::size_t i = 0; i < px.size(); ++i) {
    if (contour_mask[i]) {
      out.insert(out.end(), color.begin(), color.end());
    } else {
      const auto g = to_u8(px[i]);
      out.insert(out.end(), {g, g, g});
    }
  }
  return out;
}

void write_file(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed: " + path.string());
}

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open: " + path.string());
  return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
}

}  // namespace mammo
