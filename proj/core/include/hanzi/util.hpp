#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hanzi {

// ---- hashing / encoding ----

std::string sha256_hex(const void* data, size_t size);
std::string sha256_hex(std::string_view text);
std::string sha256_hex(const std::vector<uint8_t>& bytes);

std::string base64_encode(const void* data, size_t size);
std::string base64_encode(const std::vector<uint8_t>& bytes);
std::vector<uint8_t> base64_decode(std::string_view text);

// ---- deterministic RNG ----

// SplitMix64 generator. Cheap, platform-independent, and splittable: derived
// generators are obtained by mixing a label into the seed, so per-item streams
// do not depend on iteration order.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  // Generator for (seed, name), e.g. per-test-sample streams.
  static Rng from_key(uint64_t seed, std::string_view name);

  uint64_t next_u64();
  // Unbiased draw from [0, bound). bound must be > 0.
  uint64_t below(uint64_t bound);
  double next_unit();  // [0, 1)

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (size_t i = items.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(below(i));
      std::swap(items[i - 1], items[j]);
    }
  }

  // First k positions of a Fisher-Yates shuffle of 0..n-1 (draw order kept).
  std::vector<size_t> sample_indices(size_t n, size_t k);

 private:
  uint64_t state_;
};

// ---- text ----

// Decodes UTF-8 into Unicode scalar values. Invalid bytes become U+FFFD and
// consume one byte.
std::vector<char32_t> utf8_decode(std::string_view text);
std::string utf8_encode(const std::vector<char32_t>& codepoints);

// Unicode White_Space property (covers ASCII space/tab/newlines, NBSP,
// U+2000..200A, U+3000 ideographic space, line/paragraph separators).
bool is_unicode_space(char32_t cp);

std::string trim(std::string_view text);

// Decimal half-up rounding (0.005 -> 0.01 at two digits), done in decimal
// space so binary representation noise does not flip the rounding direction.
double round_half_up(double value, int digits);

// ---- filesystem ----

std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path);
std::string read_file_text(const std::filesystem::path& path);
void write_file_text(const std::filesystem::path& path, std::string_view content);
void write_file_bytes(const std::filesystem::path& path, const std::vector<uint8_t>& bytes);

// ---- time ----

// ISO-8601 UTC, e.g. "2026-01-07T12:34:56Z".
std::string utc_timestamp();

}  // namespace hanzi
