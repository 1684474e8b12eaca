// SPDX-License-Identifier: Apache-2.0
#include "fuzzkd/image_io.hpp"

#include "fuzzkd/error.hpp"

#include <png.h>
#ifdef FUZZKD_HAVE_JPEG
#include <csetjmp>
#include <cstdio>
#include <jpeglib.h>
#endif

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

namespace fuzzkd::imaging {

namespace {

std::string lower_ext(const std::filesystem::path &p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext;
}

std::vector<unsigned char> read_file(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw_io("cannot open " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

ImageGrid load_png(const std::filesystem::path &path) {
  const auto bytes = read_file(path);
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&image, bytes.data(), bytes.size()))
    throw_format("cannot decode PNG " + path.string() + ": " + image.message);
  const bool gray = (image.format & PNG_FORMAT_FLAG_COLOR) == 0;
  image.format = gray ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  std::vector<png_byte> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw_format("cannot decode PNG " + path.string() + ": " + msg);
  }
  ImageGrid img(image.width, image.height, gray ? 1 : 3, Range::byte);
  std::copy(buffer.begin(), buffer.end(), img.pixels.begin());
  return img;
}

#ifdef FUZZKD_HAVE_JPEG
struct JpegErrorMgr {
  jpeg_error_mgr pub;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

extern "C" void jpeg_error_exit(j_common_ptr cinfo) {
  auto *err = reinterpret_cast<JpegErrorMgr *>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

ImageGrid load_jpeg(const std::filesystem::path &path) {
  const auto bytes = read_file(path);
  jpeg_decompress_struct cinfo{};
  JpegErrorMgr jerr{};
  cinfo.err = jpeg_std_error(&jerr.pub);
  jerr.pub.error_exit = jpeg_error_exit;
  std::vector<unsigned char> buffer;
  std::size_t w = 0, h = 0, c = 0;
  if (setjmp(jerr.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw_format("cannot decode JPEG " + path.string() + ": " + jerr.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, bytes.data(), static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space =
      cinfo.num_components == 1 ? JCS_GRAYSCALE : JCS_RGB;
  jpeg_start_decompress(&cinfo);
  w = cinfo.output_width;
  h = cinfo.output_height;
  c = static_cast<std::size_t>(cinfo.output_components);
  buffer.resize(w * h * c);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = buffer.data() + cinfo.output_scanline * w * c;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  ImageGrid img(w, h, c, Range::byte);
  std::copy(buffer.begin(), buffer.end(), img.pixels.begin());
  return img;
}
#endif

} // namespace

bool is_image_file(const std::filesystem::path &path) {
  const std::string ext = lower_ext(path);
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

ImageGrid load_image(const std::filesystem::path &path) {
  const std::string ext = lower_ext(path);
  if (ext == ".png")
    return load_png(path);
  if (ext == ".jpg" || ext == ".jpeg") {
#ifdef FUZZKD_HAVE_JPEG
    return load_jpeg(path);
#else
    throw_format("JPEG support not compiled in: " + path.string());
#endif
  }
  throw_format("unsupported image type: " + path.string());
}

void save_png(const std::filesystem::path &path, const ImageGrid &img) {
  img.validate();
  const ImageGrid bytes = to_byte(img);
  std::vector<png_byte> buffer(bytes.pixels.size());
  for (std::size_t i = 0; i < buffer.size(); ++i)
    buffer[i] = static_cast<png_byte>(
        std::clamp(std::lround(bytes.pixels[i]), 0L, 255L));
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  image.width = static_cast<png_uint_32>(img.width);
  image.height = static_cast<png_uint_32>(img.height);
  image.format = img.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  if (path.has_parent_path())
    std::filesystem::create_directories(path.parent_path());
  if (!png_image_write_to_file(&image, path.string().c_str(), 0, buffer.data(),
                               0, nullptr))
    throw_io("cannot write PNG " + path.string() + ": " + image.message);
}

} // namespace fuzzkd::imaging
