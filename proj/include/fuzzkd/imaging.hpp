// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

namespace fuzzkd::imaging {

enum class Range { unit, byte };

/// Interleaved (row-major, channel-last) pixel array.
struct ImageGrid {
  std::size_t width = 0;
  std::size_t height = 0;
  std::size_t channels = 1;
  Range range = Range::byte;
  std::vector<double> pixels;

  ImageGrid() = default;
  ImageGrid(std::size_t w, std::size_t h, std::size_t c, Range r,
            double fill = 0.0);
  ImageGrid(std::size_t w, std::size_t h, std::size_t c, Range r,
            std::vector<double> px);

  double &at(std::size_t x, std::size_t y, std::size_t ch = 0) {
    return pixels[(y * width + x) * channels + ch];
  }
  double at(std::size_t x, std::size_t y, std::size_t ch = 0) const {
    return pixels[(y * width + x) * channels + ch];
  }

  double max_value() const { return range == Range::unit ? 1.0 : 255.0; }

  /// Throws unless dimensions match the pixel count, channels is 1 or 3 and
  /// every pixel lies inside the declared range.
  void validate() const;

  bool operator==(const ImageGrid &) const = default;
};

/// Single-channel coefficient block.
struct Plane {
  std::size_t width = 0;
  std::size_t height = 0;
  std::vector<double> values;

  Plane() = default;
  Plane(std::size_t w, std::size_t h, double fill = 0.0)
      : width(w), height(h), values(w * h, fill) {}

  double &operator()(std::size_t x, std::size_t y) { return values[y * width + x]; }
  double operator()(std::size_t x, std::size_t y) const {
    return values[y * width + x];
  }
};

Plane extract_channel(const ImageGrid &img, std::size_t channel);
void insert_channel(ImageGrid &img, std::size_t channel, const Plane &plane);

struct GammaParams {
  double gamma = 1.0;
  double scale = 1.0;
};

/// out = clamp(scale * in^gamma, 0, 1) on a unit-range image.
ImageGrid gamma_correct(const ImageGrid &img, const GammaParams &p);

/// Global CDF remap per channel. Constant channels are returned unchanged.
ImageGrid hist_equalize(const ImageGrid &img);

struct DetailLevel {
  Plane horizontal;
  Plane vertical;
  Plane diagonal;
  std::size_t source_width = 0; // approximation size before this level
  std::size_t source_height = 0;
};

/// Orthonormal Haar decomposition. `details` are ordered coarsest first, the
/// same order multi-level wavelet libraries return.
struct WaveletPyramid {
  std::size_t levels = 0;
  Plane approx;
  std::vector<DetailLevel> details;
};

WaveletPyramid wavelet_decompose(const Plane &plane, int levels);
/// Single-channel convenience overload.
WaveletPyramid wavelet_decompose(const ImageGrid &img, int levels);
Plane wavelet_reconstruct(const WaveletPyramid &pyr);

/// Averages every coefficient block of the two images and reconstructs,
/// without the final intensity rescale. Both inputs must share dimensions.
ImageGrid fuse_mean_raw(const ImageGrid &a, const ImageGrid &b, int levels);

/// fuse_mean_raw followed by per-channel min-max scaling to [0,255]. A
/// channel with no spread is clamped and rounded instead.
ImageGrid fuse_mean(const ImageGrid &a, const ImageGrid &b, int levels);

ImageGrid resize_bilinear(const ImageGrid &img, std::size_t width,
                          std::size_t height);

enum class Augment { rot90, rot180, rot270, flip_h, flip_v };

std::string_view to_string(Augment op);
Augment augment_from_string(std::string_view name);
Augment inverse(Augment op);

/// rot90 turns the image a quarter clockwise; flip_h mirrors left-right.
ImageGrid augment(const ImageGrid &img, Augment op);

ImageGrid rescale_unit(const ImageGrid &img);
/// unit -> byte with rounding to integers.
ImageGrid to_byte(const ImageGrid &img);

} // namespace fuzzkd::imaging
