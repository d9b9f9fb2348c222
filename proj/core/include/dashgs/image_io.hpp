#pragma once

#include <filesystem>

#include "dashgs/image.hpp"

namespace dashgs {

/// Reads an 8-bit grayscale or RGB raster (PNG, binary PGM or PPM; the
/// format is sniffed from the file header). Intensities map to x/255.
/// Alpha is dropped; 16-bit PNG samples are reduced to 8 bits.
Image load_image(const std::filesystem::path& path);

/// Writes 1- or 3-channel images as 8-bit PNG; values are clamped to [0,1]
/// and rounded to the nearest code.
void save_png(const Image& image, const std::filesystem::path& path);

/// Binary PGM (1 channel) or PPM (3 channels).
void save_pnm(const Image& image, const std::filesystem::path& path);

}  // namespace dashgs
