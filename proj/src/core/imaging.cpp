// SPDX-License-Identifier: Apache-2.0
#include "fuzzkd/imaging.hpp"

#include "fuzzkd/error.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <string>

namespace fuzzkd::imaging {

ImageGrid::ImageGrid(std::size_t w, std::size_t h, std::size_t c, Range r,
                     double fill)
    : width(w), height(h), channels(c), range(r), pixels(w * h * c, fill) {}

ImageGrid::ImageGrid(std::size_t w, std::size_t h, std::size_t c, Range r,
                     std::vector<double> px)
    : width(w), height(h), channels(c), range(r), pixels(std::move(px)) {
  validate();
}

void ImageGrid::validate() const {
  if (width == 0 || height == 0)
    throw_invalid("image dimensions must be positive");
  if (channels != 1 && channels != 3)
    throw_invalid("image must have 1 or 3 channels");
  if (pixels.size() != width * height * channels)
    throw_invalid("pixel count does not match image dimensions");
  const double hi = max_value();
  for (double v : pixels)
    if (!(v >= 0.0 && v <= hi))
      throw_invalid("pixel value " + std::to_string(v) +
                    " outside declared range");
}

Plane extract_channel(const ImageGrid &img, std::size_t channel) {
  Plane p(img.width, img.height);
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x)
      p(x, y) = img.at(x, y, channel);
  return p;
}

void insert_channel(ImageGrid &img, std::size_t channel, const Plane &plane) {
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x)
      img.at(x, y, channel) = plane(x, y);
}

ImageGrid gamma_correct(const ImageGrid &img, const GammaParams &p) {
  if (!(p.gamma > 0.0))
    throw_domain("gamma must be positive");
  if (!(p.scale > 0.0))
    throw_domain("gamma scale must be positive");
  if (img.range != Range::unit)
    throw_invalid("gamma correction expects a unit-range image");
  ImageGrid out = img;
  for (double &v : out.pixels)
    v = std::clamp(p.scale * std::pow(v, p.gamma), 0.0, 1.0);
  return out;
}

ImageGrid hist_equalize(const ImageGrid &img) {
  if (img.range != Range::byte)
    throw_invalid("histogram equalization expects a byte-range image");
  ImageGrid out = img;
  const std::size_t n = img.width * img.height;
  for (std::size_t ch = 0; ch < img.channels; ++ch) {
    std::array<std::size_t, 256> hist{};
    for (std::size_t i = 0; i < n; ++i) {
      const double v = img.pixels[i * img.channels + ch];
      const long iv = std::lround(v);
      if (iv < 0 || iv > 255 || static_cast<double>(iv) != v)
        throw_invalid("histogram equalization expects integer byte pixels");
      ++hist[static_cast<std::size_t>(iv)];
    }
    std::array<std::size_t, 256> cdf{};
    std::size_t running = 0;
    std::size_t cdf_min = 0;
    for (std::size_t v = 0; v < 256; ++v) {
      running += hist[v];
      cdf[v] = running;
      if (cdf_min == 0 && hist[v] > 0)
        cdf_min = running;
    }
    if (n == cdf_min) // single intensity
      continue;
    const double denom = static_cast<double>(n - cdf_min);
    for (std::size_t i = 0; i < n; ++i) {
      double &v = out.pixels[i * img.channels + ch];
      const auto level = static_cast<std::size_t>(v);
      v = std::round(static_cast<double>(cdf[level] - cdf_min) / denom * 255.0);
    }
  }
  return out;
}

namespace {

Plane pad_even(const Plane &p) {
  const std::size_t w = p.width + (p.width & 1u);
  const std::size_t h = p.height + (p.height & 1u);
  if (w == p.width && h == p.height)
    return p;
  Plane out(w, h);
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x)
      out(x, y) = p(std::min(x, p.width - 1), std::min(y, p.height - 1));
  return out;
}

} // namespace

WaveletPyramid wavelet_decompose(const Plane &plane, int levels) {
  if (levels < 1)
    throw_domain("wavelet levels must be >= 1");
  const std::size_t need = std::size_t{1} << levels;
  if (plane.width < need || plane.height < need)
    throw_domain("image of " + std::to_string(plane.width) + "x" +
                 std::to_string(plane.height) + " too small for " +
                 std::to_string(levels) + " wavelet levels");
  WaveletPyramid pyr;
  pyr.levels = static_cast<std::size_t>(levels);
  Plane current = plane;
  std::vector<DetailLevel> fine_first;
  for (int l = 0; l < levels; ++l) {
    DetailLevel d;
    d.source_width = current.width;
    d.source_height = current.height;
    const Plane src = pad_even(current);
    const std::size_t w = src.width / 2;
    const std::size_t h = src.height / 2;
    Plane approx(w, h);
    d.horizontal = Plane(w, h);
    d.vertical = Plane(w, h);
    d.diagonal = Plane(w, h);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const double a = src(2 * x, 2 * y);
        const double b = src(2 * x + 1, 2 * y);
        const double c = src(2 * x, 2 * y + 1);
        const double e = src(2 * x + 1, 2 * y + 1);
        approx(x, y) = 0.5 * (a + b + c + e);
        d.horizontal(x, y) = 0.5 * ((a + b) - (c + e));
        d.vertical(x, y) = 0.5 * ((a + c) - (b + e));
        d.diagonal(x, y) = 0.5 * ((a + e) - (b + c));
      }
    fine_first.push_back(std::move(d));
    current = std::move(approx);
  }
  pyr.approx = std::move(current);
  pyr.details.assign(std::make_move_iterator(fine_first.rbegin()),
                     std::make_move_iterator(fine_first.rend()));
  return pyr;
}

WaveletPyramid wavelet_decompose(const ImageGrid &img, int levels) {
  if (img.channels != 1)
    throw_invalid("wavelet_decompose(ImageGrid) expects a single channel");
  return wavelet_decompose(extract_channel(img, 0), levels);
}

Plane wavelet_reconstruct(const WaveletPyramid &pyr) {
  if (pyr.levels == 0 || pyr.details.size() != pyr.levels)
    throw_domain("wavelet pyramid level count is inconsistent");
  Plane current = pyr.approx;
  for (const DetailLevel &d : pyr.details) {
    const std::size_t w = (d.source_width + 1) / 2;
    const std::size_t h = (d.source_height + 1) / 2;
    const auto same = [&](const Plane &p) {
      return p.width == w && p.height == h;
    };
    if (!same(current) || !same(d.horizontal) || !same(d.vertical) ||
        !same(d.diagonal))
      throw_domain("wavelet pyramid block shapes are inconsistent");
    Plane full(2 * w, 2 * h);
    for (std::size_t y = 0; y < h; ++y)
      for (std::size_t x = 0; x < w; ++x) {
        const double A = current(x, y);
        const double H = d.horizontal(x, y);
        const double V = d.vertical(x, y);
        const double D = d.diagonal(x, y);
        full(2 * x, 2 * y) = 0.5 * (A + H + V + D);
        full(2 * x + 1, 2 * y) = 0.5 * (A + H - V - D);
        full(2 * x, 2 * y + 1) = 0.5 * (A - H + V - D);
        full(2 * x + 1, 2 * y + 1) = 0.5 * (A - H - V + D);
      }
    Plane cropped(d.source_width, d.source_height);
    for (std::size_t y = 0; y < d.source_height; ++y)
      for (std::size_t x = 0; x < d.source_width; ++x)
        cropped(x, y) = full(x, y);
    current = std::move(cropped);
  }
  return current;
}

namespace {

void average_into(Plane &acc, const Plane &other) {
  for (std::size_t i = 0; i < acc.values.size(); ++i)
    acc.values[i] = 0.5 * (acc.values[i] + other.values[i]);
}

} // namespace

ImageGrid fuse_mean_raw(const ImageGrid &a, const ImageGrid &b, int levels) {
  if (a.width != b.width || a.height != b.height || a.channels != b.channels)
    throw_domain("fusion inputs differ in shape");
  if (a.range != b.range)
    throw_invalid("fusion inputs differ in value range");
  ImageGrid out(a.width, a.height, a.channels, a.range);
  for (std::size_t ch = 0; ch < a.channels; ++ch) {
    WaveletPyramid pa = wavelet_decompose(extract_channel(a, ch), levels);
    const WaveletPyramid pb = wavelet_decompose(extract_channel(b, ch), levels);
    average_into(pa.approx, pb.approx);
    for (std::size_t l = 0; l < pa.details.size(); ++l) {
      average_into(pa.details[l].horizontal, pb.details[l].horizontal);
      average_into(pa.details[l].vertical, pb.details[l].vertical);
      average_into(pa.details[l].diagonal, pb.details[l].diagonal);
    }
    insert_channel(out, ch, wavelet_reconstruct(pa));
  }
  return out;
}

ImageGrid fuse_mean(const ImageGrid &a, const ImageGrid &b, int levels) {
  const ImageGrid raw = fuse_mean_raw(a, b, levels);
  ImageGrid out(raw.width, raw.height, raw.channels, Range::byte);
  const double to_byte_scale = 255.0 / raw.max_value();
  const std::size_t n = raw.width * raw.height;
  for (std::size_t ch = 0; ch < raw.channels; ++ch) {
    double lo = raw.pixels[ch];
    double hi = lo;
    for (std::size_t i = 0; i < n; ++i) {
      lo = std::min(lo, raw.pixels[i * raw.channels + ch]);
      hi = std::max(hi, raw.pixels[i * raw.channels + ch]);
    }
    // Reconstruction noise on a flat channel is ~1e-13; treat as no spread.
    const bool flat = hi - lo <= 1e-9 * std::max(1.0, std::abs(hi));
    for (std::size_t i = 0; i < n; ++i) {
      const double v = raw.pixels[i * raw.channels + ch];
      const double mapped =
          flat ? v * to_byte_scale : (v - lo) / (hi - lo) * 255.0;
      out.pixels[i * raw.channels + ch] =
          std::clamp(std::round(mapped), 0.0, 255.0);
    }
  }
  return out;
}

ImageGrid resize_bilinear(const ImageGrid &img, std::size_t width,
                          std::size_t height) {
  if (width == 0 || height == 0)
    throw_domain("resize target must be positive");
  if (width == img.width && height == img.height)
    return img;
  ImageGrid out(width, height, img.channels, img.range);
  const double sx = static_cast<double>(img.width) / static_cast<double>(width);
  const double sy =
      static_cast<double>(img.height) / static_cast<double>(height);
  const double max_x = static_cast<double>(img.width - 1);
  const double max_y = static_cast<double>(img.height - 1);
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, max_y);
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, img.height - 1);
    const double ty = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, max_x);
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, img.width - 1);
      const double tx = fx - static_cast<double>(x0);
      for (std::size_t ch = 0; ch < img.channels; ++ch) {
        const double top = img.at(x0, y0, ch) * (1.0 - tx) + img.at(x1, y0, ch) * tx;
        const double bot = img.at(x0, y1, ch) * (1.0 - tx) + img.at(x1, y1, ch) * tx;
        out.at(x, y, ch) = top * (1.0 - ty) + bot * ty;
      }
    }
  }
  return out;
}

std::string_view to_string(Augment op) {
  switch (op) {
  case Augment::rot90:
    return "rot90";
  case Augment::rot180:
    return "rot180";
  case Augment::rot270:
    return "rot270";
  case Augment::flip_h:
    return "flip_h";
  case Augment::flip_v:
    return "flip_v";
  }
  return "?";
}

Augment augment_from_string(std::string_view name) {
  for (Augment op : {Augment::rot90, Augment::rot180, Augment::rot270,
                     Augment::flip_h, Augment::flip_v})
    if (to_string(op) == name)
      return op;
  throw_invalid("unknown augmentation '" + std::string(name) + "'");
}

Augment inverse(Augment op) {
  switch (op) {
  case Augment::rot90:
    return Augment::rot270;
  case Augment::rot270:
    return Augment::rot90;
  default:
    return op;
  }
}

ImageGrid augment(const ImageGrid &img, Augment op) {
  const bool swap = op == Augment::rot90 || op == Augment::rot270;
  const std::size_t w = swap ? img.height : img.width;
  const std::size_t h = swap ? img.width : img.height;
  ImageGrid out(w, h, img.channels, img.range);
  for (std::size_t y = 0; y < img.height; ++y)
    for (std::size_t x = 0; x < img.width; ++x) {
      std::size_t nx = x, ny = y;
      switch (op) {
      case Augment::rot90: // clockwise
        nx = img.height - 1 - y;
        ny = x;
        break;
      case Augment::rot180:
        nx = img.width - 1 - x;
        ny = img.height - 1 - y;
        break;
      case Augment::rot270:
        nx = y;
        ny = img.width - 1 - x;
        break;
      case Augment::flip_h:
        nx = img.width - 1 - x;
        break;
      case Augment::flip_v:
        ny = img.height - 1 - y;
        break;
      }
      for (std::size_t ch = 0; ch < img.channels; ++ch)
        out.at(nx, ny, ch) = img.at(x, y, ch);
    }
  return out;
}

ImageGrid rescale_unit(const ImageGrid &img) {
  if (img.range != Range::byte)
    throw_invalid("rescale_unit expects a byte-range image");
  ImageGrid out = img;
  out.range = Range::unit;
  for (double &v : out.pixels)
    v /= 255.0;
  return out;
}

ImageGrid to_byte(const ImageGrid &img) {
  if (img.range == Range::byte)
    return img;
  ImageGrid out = img;
  out.range = Range::byte;
  for (double &v : out.pixels)
    v = std::clamp(std::round(v * 255.0), 0.0, 255.0);
  return out;
}

} // namespace fuzzkd::imaging
