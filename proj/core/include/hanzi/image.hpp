#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace hanzi {

// 8-bit grayscale raster, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<uint8_t> pixels;  // width * height

  uint8_t at(int row, int col) const { return pixels[static_cast<size_t>(row) * width + col]; }
};

// Decodes PNG or JPEG bytes to grayscale. Throws DecodeFailure.
GrayImage decode_gray(const std::vector<uint8_t>& encoded);

// Reads and decodes an image file. Throws MissingImage if the file does not
// exist, DecodeFailure if it cannot be decoded.
GrayImage decode_gray_file(const std::filesystem::path& path);

bool is_decodable_image(const std::filesystem::path& path);

// PNG-encodes a grayscale raster (fixture generation, CHAED normalization).
std::vector<uint8_t> encode_png(const GrayImage& image);
void write_png(const std::filesystem::path& path, const GrayImage& image);

}  // namespace hanzi
