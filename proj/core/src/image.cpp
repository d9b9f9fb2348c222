#include "dashgs/image.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "dashgs/error.hpp"

namespace dashgs {

Image::Image(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
  if (height < 0 || width < 0 || channels < 1) {
    throw InputError("image dimensions must be non-negative with at least one channel");
  }
  data_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width) * static_cast<std::size_t>(channels),
               fill);
}

Image::Image(int height, int width, int channels, std::vector<double> data)
    : height_(height), width_(width), channels_(channels), data_(std::move(data)) {
  if (height < 0 || width < 0 || channels < 1) {
    throw InputError("image dimensions must be non-negative with at least one channel");
  }
  if (data_.size() !=
      static_cast<std::size_t>(height) * static_cast<std::size_t>(width) * static_cast<std::size_t>(channels)) {
    throw InputError("image buffer size does not match its dimensions");
  }
}

Image Image::channel(int c) const {
  Image out(height_, width_, 1);
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) out.at(y, x) = at(y, x, c);
  }
  return out;
}

void Image::set_channel(int c, const Image& plane) {
  if (plane.height() != height_ || plane.width() != width_ || plane.channels() != 1) {
    throw InputError("channel plane does not match image extent");
  }
  for (int y = 0; y < height_; ++y) {
    for (int x = 0; x < width_; ++x) at(y, x, c) = plane.at(y, x);
  }
}

Image luminance(const Image& image) {
  if (image.channels() == 1) return image;
  Image out(image.height(), image.width(), 1);
  const double inv = 1.0 / image.channels();
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      double sum = 0.0;
      for (int c = 0; c < image.channels(); ++c) sum += image.at(y, x, c);
      out.at(y, x) = sum * inv;
    }
  }
  return out;
}

Image to_rgb(const Image& image) {
  if (image.channels() == 3) return image;
  if (image.channels() != 1) {
    throw InputError("expected a 1- or 3-channel image, got " + std::to_string(image.channels()));
  }
  Image out(image.height(), image.width(), 3);
  for (int y = 0; y < image.height(); ++y) {
    for (int x = 0; x < image.width(); ++x) {
      for (int c = 0; c < 3; ++c) out.at(y, x, c) = image.at(y, x);
    }
  }
  return out;
}

Image clamp_unit(Image image) {
  for (double& v : image.data()) v = std::clamp(v, 0.0, 1.0);
  return image;
}

Image scaled(Image image, double factor) {
  for (double& v : image.data()) v *= factor;
  return image;
}

void require_finite(const Image& image, const char* what) {
  for (double v : image.data()) {
    if (!std::isfinite(v)) throw NumericError(std::string(what) + ": non-finite pixel value");
  }
}

}  // namespace dashgs
