#include "hanzi/util.hpp"

#include <openssl/evp.h>

#include <array>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <fstream>

#include "hanzi/error.hpp"

namespace hanzi {

std::string sha256_hex(const void* data, size_t size) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int digest_len = 0;
  if (EVP_Digest(data, size, digest.data(), &digest_len, EVP_sha256(), nullptr) != 1) {
    raise(ErrorCode::io_error, "SHA-256 digest failed");
  }
  static const char* hex = "0123456789abcdef";
  std::string out;
  out.reserve(digest_len * 2);
  for (unsigned int i = 0; i < digest_len; ++i) {
    out.push_back(hex[digest[i] >> 4]);
    out.push_back(hex[digest[i] & 0xf]);
  }
  return out;
}

std::string sha256_hex(std::string_view text) { return sha256_hex(text.data(), text.size()); }

std::string sha256_hex(const std::vector<uint8_t>& bytes) {
  return sha256_hex(bytes.data(), bytes.size());
}

namespace {
constexpr char kBase64Chars[] = "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
}

std::string base64_encode(const void* data, size_t size) {
  const auto* bytes = static_cast<const uint8_t*>(data);
  std::string out;
  out.reserve((size + 2) / 3 * 4);
  for (size_t i = 0; i < size; i += 3) {
    uint32_t chunk = static_cast<uint32_t>(bytes[i]) << 16;
    if (i + 1 < size) chunk |= static_cast<uint32_t>(bytes[i + 1]) << 8;
    if (i + 2 < size) chunk |= static_cast<uint32_t>(bytes[i + 2]);
    out.push_back(kBase64Chars[(chunk >> 18) & 0x3f]);
    out.push_back(kBase64Chars[(chunk >> 12) & 0x3f]);
    out.push_back(i + 1 < size ? kBase64Chars[(chunk >> 6) & 0x3f] : '=');
    out.push_back(i + 2 < size ? kBase64Chars[chunk & 0x3f] : '=');
  }
  return out;
}

std::string base64_encode(const std::vector<uint8_t>& bytes) {
  return base64_encode(bytes.data(), bytes.size());
}

std::vector<uint8_t> base64_decode(std::string_view text) {
  auto value_of = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  std::vector<uint8_t> out;
  uint32_t buffer = 0;
  int bits = 0;
  for (char c : text) {
    if (c == '=' || c == '\n' || c == '\r') continue;
    int v = value_of(c);
    if (v < 0) raise(ErrorCode::malformed_record, "invalid base64 character");
    buffer = (buffer << 6) | static_cast<uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<uint8_t>((buffer >> bits) & 0xff));
    }
  }
  return out;
}

namespace {

uint64_t splitmix64_next(uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

uint64_t fnv1a64(std::string_view text) {
  uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : text) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

}  // namespace

Rng::Rng(uint64_t seed) : state_(seed) {}

Rng Rng::from_key(uint64_t seed, std::string_view name) {
  uint64_t mixed = seed;
  // Pre-mix so (seed, name) and (seed', name') collisions need a 64-bit match.
  (void)splitmix64_next(mixed);
  return Rng(mixed ^ fnv1a64(name));
}

uint64_t Rng::next_u64() { return splitmix64_next(state_); }

uint64_t Rng::below(uint64_t bound) {
  // Rejection sampling to avoid modulo bias.
  uint64_t threshold = (~bound + 1) % bound;  // 2^64 mod bound
  for (;;) {
    uint64_t value = next_u64();
    if (value >= threshold) return value % bound;
  }
}

double Rng::next_unit() {
  return static_cast<double>(next_u64() >> 11) * (1.0 / 9007199254740992.0);
}

std::vector<size_t> Rng::sample_indices(size_t n, size_t k) {
  std::vector<size_t> indices(n);
  for (size_t i = 0; i < n; ++i) indices[i] = i;
  if (k > n) k = n;
  for (size_t i = 0; i < k; ++i) {
    size_t j = i + static_cast<size_t>(below(n - i));
    std::swap(indices[i], indices[j]);
  }
  indices.resize(k);
  return indices;
}

std::vector<char32_t> utf8_decode(std::string_view text) {
  std::vector<char32_t> out;
  out.reserve(text.size());
  size_t i = 0;
  while (i < text.size()) {
    unsigned char c = static_cast<unsigned char>(text[i]);
    uint32_t cp = 0;
    size_t len = 0;
    if (c < 0x80) {
      cp = c;
      len = 1;
    } else if ((c & 0xe0) == 0xc0) {
      cp = c & 0x1f;
      len = 2;
    } else if ((c & 0xf0) == 0xe0) {
      cp = c & 0x0f;
      len = 3;
    } else if ((c & 0xf8) == 0xf0) {
      cp = c & 0x07;
      len = 4;
    } else {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    if (i + len > text.size()) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    bool valid = true;
    for (size_t j = 1; j < len; ++j) {
      unsigned char cont = static_cast<unsigned char>(text[i + j]);
      if ((cont & 0xc0) != 0x80) {
        valid = false;
        break;
      }
      cp = (cp << 6) | (cont & 0x3f);
    }
    if (!valid || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
      out.push_back(0xFFFD);
      ++i;
      continue;
    }
    out.push_back(static_cast<char32_t>(cp));
    i += len;
  }
  return out;
}

std::string utf8_encode(const std::vector<char32_t>& codepoints) {
  std::string out;
  for (char32_t cp : codepoints) {
    uint32_t v = static_cast<uint32_t>(cp);
    if (v < 0x80) {
      out.push_back(static_cast<char>(v));
    } else if (v < 0x800) {
      out.push_back(static_cast<char>(0xc0 | (v >> 6)));
      out.push_back(static_cast<char>(0x80 | (v & 0x3f)));
    } else if (v < 0x10000) {
      out.push_back(static_cast<char>(0xe0 | (v >> 12)));
      out.push_back(static_cast<char>(0x80 | ((v >> 6) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | (v & 0x3f)));
    } else {
      out.push_back(static_cast<char>(0xf0 | (v >> 18)));
      out.push_back(static_cast<char>(0x80 | ((v >> 12) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | ((v >> 6) & 0x3f)));
      out.push_back(static_cast<char>(0x80 | (v & 0x3f)));
    }
  }
  return out;
}

bool is_unicode_space(char32_t cp) {
  switch (cp) {
    case 0x09:
    case 0x0A:
    case 0x0B:
    case 0x0C:
    case 0x0D:
    case 0x20:
    case 0x85:
    case 0xA0:
    case 0x1680:
    case 0x2028:
    case 0x2029:
    case 0x202F:
    case 0x205F:
    case 0x3000:
      return true;
    default:
      return cp >= 0x2000 && cp <= 0x200A;
  }
}

std::string trim(std::string_view text) {
  auto codepoints = utf8_decode(text);
  size_t begin = 0;
  size_t end = codepoints.size();
  while (begin < end && is_unicode_space(codepoints[begin])) ++begin;
  while (end > begin && is_unicode_space(codepoints[end - 1])) --end;
  return utf8_encode(std::vector<char32_t>(codepoints.begin() + static_cast<ptrdiff_t>(begin),
                                           codepoints.begin() + static_cast<ptrdiff_t>(end)));
}

double round_half_up(double value, int digits) {
  // Render with enough decimal digits to recover the intended decimal value,
  // then round the decimal string.
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits + 7, value < 0 ? -value : value);
  std::string text(buf);
  size_t dot = text.find('.');
  std::string digits_only = text.substr(0, dot) + text.substr(dot + 1);
  size_t keep = dot + static_cast<size_t>(digits);  // digits before the cut, in digits_only
  bool round_up = digits_only[keep] >= '5';
  long long scaled = std::strtoll(digits_only.substr(0, keep).c_str(), nullptr, 10);
  if (round_up) ++scaled;
  double result = static_cast<double>(scaled);
  for (int i = 0; i < digits; ++i) result /= 10.0;
  return value < 0 ? -result : result;
}

std::vector<uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::io_error, "cannot open " + path.string());
  return std::vector<uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

std::string read_file_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(ErrorCode::io_error, "cannot open " + path.string());
  return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_text(const std::filesystem::path& path, std::string_view content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::io_error, "cannot write " + path.string());
  out.write(content.data(), static_cast<std::streamsize>(content.size()));
}

void write_file_bytes(const std::filesystem::path& path, const std::vector<uint8_t>& bytes) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(ErrorCode::io_error, "cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

std::string utc_timestamp() {
  std::time_t now = std::time(nullptr);
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

}  // namespace hanzi
