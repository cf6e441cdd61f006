#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "locogan/geometry.hpp"

namespace locogan {

/// 8-bit quantization of a [-1, 1] value: round((v + 1) * 127.5), clamped.
std::uint8_t to_byte(double v);
double from_byte(std::uint8_t b);

bool is_supported_image(const std::filesystem::path& path);

/// Decodes PNG or JPEG into 3 channels in [-1, 1]; gray is replicated, alpha dropped.
Grid<float> decode_image(const std::filesystem::path& path);

/// Writes an 8-bit RGB PNG (1- or 3-channel input in [-1, 1]).
void encode_image(const std::filesystem::path& path, const Grid<float>& image);

/// Interleaved RGB bytes of an image.
std::vector<std::uint8_t> to_rgb8(const Grid<float>& image);

}  // namespace locogan
