#include "hanzi/image.hpp"

#include <opencv2/imgcodecs.hpp>

#include "hanzi/error.hpp"
#include "hanzi/util.hpp"

namespace hanzi {

GrayImage decode_gray(const std::vector<uint8_t>& encoded) {
  cv::Mat raw(1, static_cast<int>(encoded.size()), CV_8UC1,
              const_cast<uint8_t*>(encoded.data()));
  cv::Mat mat = cv::imdecode(raw, cv::IMREAD_GRAYSCALE);
  if (mat.empty()) raise(ErrorCode::decode_failure, "not a decodable PNG/JPEG image");
  GrayImage image;
  image.width = mat.cols;
  image.height = mat.rows;
  image.pixels.resize(static_cast<size_t>(mat.cols) * mat.rows);
  if (mat.isContinuous()) {
    std::copy(mat.data, mat.data + image.pixels.size(), image.pixels.begin());
  } else {
    for (int r = 0; r < mat.rows; ++r) {
      const uint8_t* row = mat.ptr<uint8_t>(r);
      std::copy(row, row + mat.cols, image.pixels.begin() + static_cast<size_t>(r) * mat.cols);
    }
  }
  return image;
}

GrayImage decode_gray_file(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    raise(ErrorCode::missing_image, path.string());
  }
  try {
    return decode_gray(read_file_bytes(path));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::decode_failure) {
      raise(ErrorCode::decode_failure, path.string());
    }
    throw;
  }
}

bool is_decodable_image(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) return false;
  try {
    decode_gray(read_file_bytes(path));
    return true;
  } catch (const Error&) {
    return false;
  }
}

std::vector<uint8_t> encode_png(const GrayImage& image) {
  cv::Mat mat(image.height, image.width, CV_8UC1, const_cast<uint8_t*>(image.pixels.data()));
  std::vector<uint8_t> out;
  if (!cv::imencode(".png", mat, out)) {
    raise(ErrorCode::io_error, "PNG encoding failed");
  }
  return out;
}

void write_png(const std::filesystem::path& path, const GrayImage& image) {
  write_file_bytes(path, encode_png(image));
}

}  // namespace hanzi
