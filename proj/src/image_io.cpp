#include "locogan/image_io.hpp"

#include <png.h>
// jpeglib.h needs FILE and size_t declared first.
#include <cstdio>
#include <jpeglib.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <csetjmp>
#include <fstream>
#include <memory>
#include <string>

namespace locogan {

std::uint8_t to_byte(double v) {
  const double b = std::round((v + 1.0) * 127.5);
  return static_cast<std::uint8_t>(std::clamp(b, 0.0, 255.0));
}

double from_byte(std::uint8_t b) { return b / 127.5 - 1.0; }

namespace {

std::string lower_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char c) { return std::tolower(c); });
  return ext;
}

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr open_file(const std::filesystem::path& path, const char* mode) {
  FilePtr f(std::fopen(path.c_str(), mode));
  if (!f) throw IoError("cannot open " + path.string());
  return f;
}

Grid<float> from_interleaved(const std::vector<std::uint8_t>& data, int h, int w, int channels) {
  Grid<float> g(3, h, w);
  for (Eigen::Index p = 0; p < g.pixels(); ++p)
    for (int c = 0; c < 3; ++c) {
      const int src = channels >= 3 ? c : 0;
      g.values(c, p) = static_cast<float>(from_byte(data[p * channels + src]));
    }
  return g;
}

Grid<float> decode_png(const std::filesystem::path& path) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&img, path.c_str()))
    throw IoError("cannot decode PNG " + path.string() + ": " + img.message);
  img.format = PNG_FORMAT_RGB;
  std::vector<std::uint8_t> data(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, data.data(), 0, nullptr)) {
    png_image_free(&img);
    throw IoError("cannot decode PNG " + path.string() + ": " + img.message);
  }
  return from_interleaved(data, static_cast<int>(img.height), static_cast<int>(img.width), 3);
}

struct JpegError {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
};

Grid<float> decode_jpeg(const std::filesystem::path& path) {
  FilePtr f = open_file(path, "rb");
  jpeg_decompress_struct cinfo{};
  JpegError err{};
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = [](j_common_ptr c) { std::longjmp(reinterpret_cast<JpegError*>(c->err)->jump, 1); };
  std::vector<std::uint8_t> data;
  int h = 0, w = 0, channels = 0;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    throw IoError("cannot decode JPEG " + path.string());
  }
  jpeg_create_decompress(&cinfo);
  jpeg_stdio_src(&cinfo, f.get());
  jpeg_read_header(&cinfo, TRUE);
  if (cinfo.jpeg_color_space != JCS_GRAYSCALE) cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  h = static_cast<int>(cinfo.output_height);
  w = static_cast<int>(cinfo.output_width);
  channels = cinfo.output_components;
  data.resize(std::size_t(h) * w * channels);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = data.data() + std::size_t(cinfo.output_scanline) * w * channels;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return from_interleaved(data, h, w, channels);
}

}  // namespace

bool is_supported_image(const std::filesystem::path& path) {
  const std::string ext = lower_extension(path);
  return ext == ".png" || ext == ".jpg" || ext == ".jpeg";
}

Grid<float> decode_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw IoError("image not found: " + path.string());
  const std::string ext = lower_extension(path);
  if (ext == ".png") return decode_png(path);
  if (ext == ".jpg" || ext == ".jpeg") return decode_jpeg(path);
  throw IoError("unsupported image format: " + path.string());
}

std::vector<std::uint8_t> to_rgb8(const Grid<float>& image) {
  if (image.channels() != 3 && image.channels() != 1) throw ShapeMismatch("images have 1 or 3 channels");
  std::vector<std::uint8_t> data(std::size_t(image.pixels()) * 3);
  for (Eigen::Index p = 0; p < image.pixels(); ++p)
    for (int c = 0; c < 3; ++c) data[p * 3 + c] = to_byte(image.values(image.channels() == 3 ? c : 0, p));
  return data;
}

void encode_image(const std::filesystem::path& path, const Grid<float>& image) {
  if (lower_extension(path) != ".png") throw IoError("only PNG output is supported: " + path.string());
  const std::vector<std::uint8_t> data = to_rgb8(image);
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  img.width = static_cast<png_uint_32>(image.width);
  img.height = static_cast<png_uint_32>(image.height);
  img.format = PNG_FORMAT_RGB;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  if (!png_image_write_to_file(&img, path.c_str(), 0, data.data(), 0, nullptr))
    throw IoError("cannot write PNG " + path.string() + ": " + img.message);
}

}  // namespace locogan
