#pragma once

#include <complex>
#include <span>
#include <string>
#include <vector>

#include "dashgs/image.hpp"

namespace dashgs::spectra {

using Complex = std::complex<double>;

/// DC-centred 2D spectrum of one channel. Bin (height/2, width/2) holds the
/// DC term (the fftshift layout), so a centred crop of odd or even extent is
/// again a valid DC-centred spectrum of the smaller grid.
class SpectrumMap {
 public:
  SpectrumMap() = default;
  SpectrumMap(int height, int width);

  int height() const { return height_; }
  int width() const { return width_; }
  Extent extent() const { return {height_, width_}; }

  Complex& at(int y, int x) { return bins_[static_cast<std::size_t>(y) * width_ + x]; }
  const Complex& at(int y, int x) const { return bins_[static_cast<std::size_t>(y) * width_ + x]; }
  std::span<Complex> bins() { return bins_; }
  std::span<const Complex> bins() const { return bins_; }

  /// Sum of complex magnitudes over all bins.
  double magnitude_sum() const;

 private:
  int height_ = 0;
  int width_ = 0;
  std::vector<Complex> bins_;
};

/// Unnormalized forward DFT of a single-channel image, DC relocated to the
/// centre. Throws NumericError on non-finite pixels.
SpectrumMap dft2(const Image& channel);

/// Inverse of dft2 with the 1/(h*w) normalization. Returns the real part,
/// unclamped.
Image idft2(const SpectrumMap& spectrum);

/// Centred crop keeping the DC bin. Even extent n = 2k keeps offsets
/// [-k, k-1] around DC, odd extent n = 2k+1 keeps [-k, k].
SpectrumMap crop_centered(const SpectrumMap& spectrum, Extent target);

/// (round(H/r), round(W/r)).
Extent downsampled_extent(Extent full, double factor);

/// Frequency-crop anti-alias downsampling of one DC-centred channel
/// spectrum: crop to downsampled_extent, scale by 1/r^2, invert, clamp to
/// [0, 1].
Image downsample_spectrum(const SpectrumMap& spectrum, double factor);

/// Per-channel frequency-crop downsampling. factor == 1 returns the input
/// unchanged. Throws InputError when factor < 1 or either target extent
/// would fall below 2.
Image antialias_downsample(const Image& image, double factor);

struct Significance {
  double value = 0.0;
  double factor = 1.0;
};

/// Mean over views of the spectrum magnitude sum of the luminance channel
/// after anti-alias downsampling by `factor`. Views must be non-empty, share
/// one extent and be at least 4x4.
Significance significance(std::span<const Image> views, double factor);

/// How the resolution scheduler measures the spectral content available at
/// a downsampling factor.
enum class Measure {
  /// Magnitude sum of the full-resolution spectrum inside the centred crop
  /// window of downsampled_extent(r): the low band the downsampled view can
  /// represent, at the full-resolution scale.
  kBandLimited,
  /// `significance()`: magnitudes of the re-transformed downsampled view,
  /// which carry the 1/r^2 amplitude scale of the crop.
  kResampled,
};

const char* to_string(Measure measure);
Measure measure_from_string(const std::string& name);

/// Caches the luminance spectra of a view set so the significance can be
/// evaluated at many factors (bisection, dense scans) without re-running the
/// full-resolution transform.
class SignificanceProbe {
 public:
  SignificanceProbe(std::span<const Image> views, Measure measure);

  /// Significance at `factor` under this probe's measure. At factor 1 both
  /// measures equal significance(views, 1).
  double operator()(double factor) const;
  double full() const { return full_; }

  Measure measure() const { return measure_; }
  Extent extent() const { return extent_; }
  std::size_t view_count() const { return spectra_.size(); }

 private:
  double band_value(double factor) const;
  double resampled_value(double factor) const;

  Measure measure_;
  Extent extent_;
  std::vector<SpectrumMap> spectra_;
  double full_ = 0.0;
};

}  // namespace dashgs::spectra
