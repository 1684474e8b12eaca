// SPDX-License-Identifier: Apache-2.0
#pragma once

#include "fuzzkd/imaging.hpp"

#include <filesystem>

namespace fuzzkd::imaging {

/// Decodes an 8-bit PNG (or a JPEG when built with libjpeg) into a byte-range
/// grid. Alpha is dropped, palettes expanded and 16-bit samples reduced;
/// gray+alpha becomes 1 channel, everything else 3.
ImageGrid load_image(const std::filesystem::path &path);

/// Writes an 8-bit gray or RGB PNG. Unit-range images are scaled to bytes and
/// all values are rounded.
void save_png(const std::filesystem::path &path, const ImageGrid &img);

bool is_image_file(const std::filesystem::path &path);

} // namespace fuzzkd::imaging
