#include "dashgs/image_io.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "dashgs/error.hpp"

namespace dashgs {
namespace {

std::vector<unsigned char> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open image '" + path.string() + "'");
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Image from_bytes(const unsigned char* bytes, int height, int width, int channels, double maxval) {
  Image out(height, width, channels);
  auto data = out.data();
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = std::clamp(bytes[i] / maxval, 0.0, 1.0);
  return out;
}

Image decode_png(const std::vector<unsigned char>& bytes, const std::filesystem::path& path) {
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size())) {
    throw InputError("cannot decode PNG '" + path.string() + "': " + image.message);
  }
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<unsigned char> pixels(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, pixels.data(), 0, nullptr)) {
    png_image_free(&image);
    throw InputError("cannot decode PNG '" + path.string() + "': " + image.message);
  }
  return from_bytes(pixels.data(), static_cast<int>(image.height), static_cast<int>(image.width), color ? 3 : 1,
                    255.0);
}

// Netpbm header tokens may be separated by whitespace and '#' comments.
class PnmHeader {
 public:
  PnmHeader(const std::vector<unsigned char>& bytes, const std::filesystem::path& path) : bytes_(bytes), path_(path) {}

  int next_int() {
    skip_space();
    if (pos_ >= bytes_.size() || !std::isdigit(bytes_[pos_])) fail("malformed header");
    long value = 0;
    while (pos_ < bytes_.size() && std::isdigit(bytes_[pos_])) {
      value = value * 10 + (bytes_[pos_++] - '0');
      if (value > 1 << 24) fail("header value out of range");
    }
    return static_cast<int>(value);
  }

  std::size_t payload_offset() {
    if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) fail("malformed header");
    return pos_ + 1;
  }

  [[noreturn]] void fail(const char* why) const {
    throw InputError("cannot decode PNM '" + path_.string() + "': " + why);
  }

 private:
  void skip_space() {
    while (pos_ < bytes_.size()) {
      if (bytes_[pos_] == '#') {
        while (pos_ < bytes_.size() && bytes_[pos_] != '\n') ++pos_;
      } else if (std::isspace(bytes_[pos_])) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  const std::vector<unsigned char>& bytes_;
  const std::filesystem::path& path_;
  std::size_t pos_ = 2;
};

Image decode_pnm(const std::vector<unsigned char>& bytes, const std::filesystem::path& path) {
  const int channels = bytes[1] == '5' ? 1 : 3;
  PnmHeader header(bytes, path);
  const int width = header.next_int();
  const int height = header.next_int();
  const int maxval = header.next_int();
  if (width < 1 || height < 1) header.fail("empty raster");
  if (maxval < 1 || maxval > 255) header.fail("only 8-bit samples are supported");
  const std::size_t offset = header.payload_offset();
  const std::size_t need = static_cast<std::size_t>(width) * static_cast<std::size_t>(height) * channels;
  if (bytes.size() < offset + need) header.fail("truncated pixel data");
  return from_bytes(bytes.data() + offset, height, width, channels, static_cast<double>(maxval));
}

std::vector<unsigned char> to_bytes(const Image& image) {
  std::vector<unsigned char> out(image.data().size());
  auto data = image.data();
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = static_cast<unsigned char>(std::lround(std::clamp(data[i], 0.0, 1.0) * 255.0));
  }
  return out;
}

void check_writable(const Image& image, const std::filesystem::path& path) {
  if (image.channels() != 1 && image.channels() != 3) {
    throw InputError("cannot write '" + path.string() + "': only 1- or 3-channel images are supported");
  }
  if (image.empty()) throw InputError("cannot write '" + path.string() + "': empty image");
}

}  // namespace

Image load_image(const std::filesystem::path& path) {
  const auto bytes = read_bytes(path);
  static constexpr unsigned char kPngMagic[] = {0x89, 'P', 'N', 'G'};
  if (bytes.size() >= 4 && std::equal(std::begin(kPngMagic), std::end(kPngMagic), bytes.begin())) {
    return decode_png(bytes, path);
  }
  if (bytes.size() >= 3 && bytes[0] == 'P' && (bytes[1] == '5' || bytes[1] == '6')) {
    return decode_pnm(bytes, path);
  }
  throw InputError("unsupported image format '" + path.string() + "' (expected PNG, binary PGM or PPM)");
}

void save_png(const Image& image, const std::filesystem::path& path) {
  check_writable(image, path);
  const auto bytes = to_bytes(image);
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width());
  png.height = static_cast<png_uint_32>(image.height());
  png.format = image.channels() == 3 ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  if (!png_image_write_to_file(&png, path.c_str(), 0, bytes.data(), 0, nullptr)) {
    throw InputError("cannot write PNG '" + path.string() + "': " + png.message);
  }
}

void save_pnm(const Image& image, const std::filesystem::path& path) {
  check_writable(image, path);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out << (image.channels() == 1 ? "P5" : "P6") << '\n' << image.width() << ' ' << image.height() << "\n255\n";
  const auto bytes = to_bytes(image);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("cannot write '" + path.string() + "'");
}

}  // namespace dashgs
