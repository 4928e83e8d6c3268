#include "nexus/image.h"

#include <png.h>

#include <cstring>

#include "nexus/errors.h"

namespace nexus {

// Uses the libpng simplified API: no setjmp, and the library handles the
// conversion to and from 8-bit RGB.

Image ReadPng(const std::string& path) {
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&png, path.c_str())) {
    throw IoFailure("cannot read " + path + ": " + png.message);
  }
  png.format = PNG_FORMAT_RGB;
  Image image(static_cast<int>(png.width), static_cast<int>(png.height));
  if (!png_image_finish_read(&png, nullptr, image.rgb.data(), 0, nullptr)) {
    png_image_free(&png);
    throw IoFailure("failed to decode " + path + ": " + png.message);
  }
  return image;
}

void WritePng(const Image& image, const std::string& path) {
  if (image.width < 1 || image.height < 1) throw IoFailure("cannot write empty image");
  png_image png;
  std::memset(&png, 0, sizeof(png));
  png.version = PNG_IMAGE_VERSION;
  png.width = static_cast<png_uint_32>(image.width);
  png.height = static_cast<png_uint_32>(image.height);
  png.format = PNG_FORMAT_RGB;
  if (!png_image_write_to_file(&png, path.c_str(), 0, image.rgb.data(), 0, nullptr)) {
    png_image_free(&png);
    throw IoFailure("failed to encode " + path + ": " + png.message);
  }
}

}  // namespace nexus
