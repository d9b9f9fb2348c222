#include "dashgs/spectra.hpp"

#include <fftw3.h>

#include <cmath>
#include <memory>
#include <mutex>
#include <string>

#include "dashgs/error.hpp"

namespace dashgs::spectra {
namespace {

// FFTW planning is not thread-safe; execution is.
std::mutex& plan_mutex() {
  static std::mutex mutex;
  return mutex;
}

struct FftwFree {
  void operator()(fftw_complex* p) const { fftw_free(p); }
};
using FftwBuffer = std::unique_ptr<fftw_complex, FftwFree>;

FftwBuffer allocate(std::size_t n) {
  auto* p = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
  if (p == nullptr) throw std::bad_alloc();
  return FftwBuffer(p);
}

// Transforms `data` (unshifted, row-major h x w) in place.
void execute(fftw_complex* data, int h, int w, int sign) {
  fftw_plan plan;
  {
    std::lock_guard lock(plan_mutex());
    plan = fftw_plan_dft_2d(h, w, data, data, sign, FFTW_ESTIMATE);
  }
  if (plan == nullptr) throw NumericError("FFTW could not plan a " + std::to_string(h) + "x" + std::to_string(w) + " DFT");
  fftw_execute(plan);
  std::lock_guard lock(plan_mutex());
  fftw_destroy_plan(plan);
}

int centered_index(int u, int n) { return (u + n / 2) % n; }

void check_factor(Extent full, double factor) {
  if (!(factor >= 1.0) || !std::isfinite(factor)) {
    throw InputError("downsampling factor must be a finite value >= 1, got " + std::to_string(factor));
  }
  const Extent target = downsampled_extent(full, factor);
  if (target.height < 2 || target.width < 2) {
    throw InputError("downsampling " + std::to_string(full.height) + "x" + std::to_string(full.width) + " by " +
                     std::to_string(factor) + " leaves fewer than 2 pixels per side");
  }
}

double magnitude_sum_of_window(const SpectrumMap& spectrum, Extent window) {
  const int y0 = spectrum.height() / 2 - window.height / 2;
  const int x0 = spectrum.width() / 2 - window.width / 2;
  double sum = 0.0;
  for (int y = 0; y < window.height; ++y) {
    for (int x = 0; x < window.width; ++x) sum += std::abs(spectrum.at(y0 + y, x0 + x));
  }
  return sum;
}

void check_views(std::span<const Image> views) {
  if (views.empty()) throw InputError("significance needs at least one view");
  const Extent extent = views.front().extent();
  for (const Image& view : views) {
    if (view.extent() != extent) throw InputError("all views must share the same dimensions");
    if (view.height() < 4 || view.width() < 4) throw InputError("views must be at least 4x4 for spectral analysis");
  }
}

}  // namespace

SpectrumMap::SpectrumMap(int height, int width) : height_(height), width_(width) {
  if (height < 1 || width < 1) throw InputError("spectrum dimensions must be at least 1x1");
  bins_.assign(static_cast<std::size_t>(height) * static_cast<std::size_t>(width), Complex{});
}

double SpectrumMap::magnitude_sum() const {
  double sum = 0.0;
  for (const Complex& bin : bins_) sum += std::abs(bin);
  return sum;
}

SpectrumMap dft2(const Image& channel) {
  if (channel.channels() != 1) throw InputError("dft2 expects a single-channel image");
  if (channel.height() < 1 || channel.width() < 1) throw InputError("dft2 expects a non-empty image");
  require_finite(channel, "dft2 input");

  const int h = channel.height();
  const int w = channel.width();
  auto buffer = allocate(static_cast<std::size_t>(h) * w);
  fftw_complex* data = buffer.get();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      data[y * w + x][0] = channel.at(y, x);
      data[y * w + x][1] = 0.0;
    }
  }
  execute(data, h, w, FFTW_FORWARD);

  SpectrumMap out(h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      out.at(centered_index(y, h), centered_index(x, w)) = Complex(data[y * w + x][0], data[y * w + x][1]);
    }
  }
  return out;
}

Image idft2(const SpectrumMap& spectrum) {
  const int h = spectrum.height();
  const int w = spectrum.width();
  if (h < 1 || w < 1) throw InputError("idft2 expects a non-empty spectrum");
  auto buffer = allocate(static_cast<std::size_t>(h) * w);
  fftw_complex* data = buffer.get();
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      const Complex& bin = spectrum.at(centered_index(y, h), centered_index(x, w));
      data[y * w + x][0] = bin.real();
      data[y * w + x][1] = bin.imag();
    }
  }
  execute(data, h, w, FFTW_BACKWARD);

  Image out(h, w, 1);
  const double norm = 1.0 / (static_cast<double>(h) * w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) out.at(y, x) = data[y * w + x][0] * norm;
  }
  return out;
}

SpectrumMap crop_centered(const SpectrumMap& spectrum, Extent target) {
  if (target.height < 1 || target.width < 1 || target.height > spectrum.height() ||
      target.width > spectrum.width()) {
    throw InputError("crop extent must lie within the spectrum");
  }
  SpectrumMap out(target.height, target.width);
  const int y0 = spectrum.height() / 2 - target.height / 2;
  const int x0 = spectrum.width() / 2 - target.width / 2;
  for (int y = 0; y < target.height; ++y) {
    for (int x = 0; x < target.width; ++x) out.at(y, x) = spectrum.at(y0 + y, x0 + x);
  }
  return out;
}

Extent downsampled_extent(Extent full, double factor) {
  return {static_cast<int>(std::lround(full.height / factor)), static_cast<int>(std::lround(full.width / factor))};
}

Image downsample_spectrum(const SpectrumMap& spectrum, double factor) {
  check_factor(spectrum.extent(), factor);
  SpectrumMap cropped = crop_centered(spectrum, downsampled_extent(spectrum.extent(), factor));
  const double scale = 1.0 / (factor * factor);
  for (Complex& bin : cropped.bins()) bin *= scale;
  return clamp_unit(idft2(cropped));
}

Image antialias_downsample(const Image& image, double factor) {
  check_factor(image.extent(), factor);
  if (factor == 1.0) return image;
  const Extent target = downsampled_extent(image.extent(), factor);
  Image out(target.height, target.width, image.channels());
  for (int c = 0; c < image.channels(); ++c) {
    out.set_channel(c, downsample_spectrum(dft2(image.channel(c)), factor));
  }
  return out;
}

Significance significance(std::span<const Image> views, double factor) {
  check_views(views);
  check_factor(views.front().extent(), factor);
  const SignificanceProbe probe(views, Measure::kResampled);
  return {probe(factor), factor};
}

const char* to_string(Measure measure) {
  switch (measure) {
    case Measure::kBandLimited:
      return "band";
    case Measure::kResampled:
      return "resampled";
  }
  return "band";
}

Measure measure_from_string(const std::string& name) {
  if (name == "band") return Measure::kBandLimited;
  if (name == "resampled") return Measure::kResampled;
  throw InputError("unknown significance measure '" + name + "' (expected band or resampled)");
}

SignificanceProbe::SignificanceProbe(std::span<const Image> views, Measure measure) : measure_(measure) {
  check_views(views);
  extent_ = views.front().extent();
  spectra_.reserve(views.size());
  for (const Image& view : views) spectra_.push_back(dft2(luminance(view)));

  double total = 0.0;
  for (const SpectrumMap& spectrum : spectra_) total += spectrum.magnitude_sum();
  full_ = total / static_cast<double>(spectra_.size());
}

double SignificanceProbe::operator()(double factor) const {
  check_factor(extent_, factor);
  if (factor == 1.0) return full_;
  return measure_ == Measure::kBandLimited ? band_value(factor) : resampled_value(factor);
}

double SignificanceProbe::band_value(double factor) const {
  const Extent window = downsampled_extent(extent_, factor);
  double total = 0.0;
  for (const SpectrumMap& spectrum : spectra_) total += magnitude_sum_of_window(spectrum, window);
  return total / static_cast<double>(spectra_.size());
}

double SignificanceProbe::resampled_value(double factor) const {
  double total = 0.0;
  for (const SpectrumMap& spectrum : spectra_) total += dft2(downsample_spectrum(spectrum, factor)).magnitude_sum();
  return total / static_cast<double>(spectra_.size());
}

}  // namespace dashgs::spectra
