#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace dashgs {

struct Extent {
  int height = 0;
  int width = 0;

  std::size_t pixels() const { return static_cast<std::size_t>(height) * static_cast<std::size_t>(width); }
  friend bool operator==(const Extent&, const Extent&) = default;
};

/// Row-major H x W x C raster of intensities. Pixel (y, x) covers the
/// normalized square [x/W, (x+1)/W) x [y/H, (y+1)/H); its center is the
/// sample point used by the renderer.
class Image {
 public:
  Image() = default;
  Image(int height, int width, int channels, double fill = 0.0);
  Image(int height, int width, int channels, std::vector<double> data);

  int height() const { return height_; }
  int width() const { return width_; }
  int channels() const { return channels_; }
  Extent extent() const { return {height_, width_}; }
  bool empty() const { return data_.empty(); }

  double& at(int y, int x, int c = 0) { return data_[index(y, x, c)]; }
  double at(int y, int x, int c = 0) const { return data_[index(y, x, c)]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  /// Extracts channel c as a single-channel image.
  Image channel(int c) const;
  void set_channel(int c, const Image& plane);

  friend bool operator==(const Image&, const Image&) = default;

 private:
  std::size_t index(int y, int x, int c) const {
    return (static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x)) *
               static_cast<std::size_t>(channels_) +
           static_cast<std::size_t>(c);
  }

  int height_ = 0;
  int width_ = 0;
  int channels_ = 0;
  std::vector<double> data_;
};

/// Unweighted channel mean; single-channel input is returned as is.
Image luminance(const Image& image);

/// Replicates a single channel into three; RGB input is returned as is.
Image to_rgb(const Image& image);

Image clamp_unit(Image image);
Image scaled(Image image, double factor);

/// Throws NumericError if any sample is NaN or infinite.
void require_finite(const Image& image, const char* what);

}  // namespace dashgs
