#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "hanzi/corpus.hpp"
#include "hanzi/prompt.hpp"

namespace hanzi {

struct DecodingParams {
  double temperature = 0.0;
  size_t max_tokens = 512;
  std::optional<uint64_t> seed;
};

struct VlmResponse {
  std::string raw_text;
  std::string model_id;
  std::string request_hash;
  int64_t latency_ms = 0;
  bool cached = false;
};

struct EndpointConfig {
  std::string base_url;  // e.g. "https://api.example.com"
  std::string path = "/v1/chat/completions";
  std::string model;
  std::string auth_env;       // env var holding the bearer token
  std::string image_mode = "base64";  // "base64" data URIs or "url" passthrough
  int max_attempts = 3;
  int backoff_initial_ms = 1000;  // doubled per retry
  int timeout_sec = 60;
  double requests_per_second = 2.0;  // token bucket; <= 0 disables
  size_t max_payload_bytes = 20 * 1024 * 1024;
};

// Resolves the image refs used in exchanges (corpus-relative paths) to bytes,
// memoizing content hashes. Thread-safe for concurrent readers.
class ImageStore {
 public:
  // Registers every sample of the corpus under its image ref.
  void add_corpus(const Corpus& corpus);
  void add_file(const std::string& ref, std::filesystem::path path);
  void add_bytes(const std::string& ref, std::vector<uint8_t> bytes);

  // Throws MissingImage for unregistered refs whose path does not resolve.
  std::vector<uint8_t> bytes(const std::string& ref) const;
  std::string content_hash(const std::string& ref) const;

 private:
  struct Entry {
    std::filesystem::path path;
    std::vector<uint8_t> inline_bytes;
  };
  mutable std::mutex mutex_;
  std::map<std::string, Entry> entries_;
  mutable std::map<std::string, std::string> hashes_;

  Entry lookup(const std::string& ref) const;
};

// Stable content hash of (model id, exchange, decoding params). Image refs are
// replaced by their content digests, so the key survives file moves. The
// canonical serialization has sorted object keys.
std::string request_hash(const std::string& model_id, const ChatExchange& exchange,
                         const DecodingParams& params, const ImageStore& images);

// Extracts a grade from model output: the whole trimmed text if it is exactly
// one of A/B/C, otherwise the first A/B/C not adjacent to another Latin
// letter. Throws UnparsableGrade.
Grade parse_grade(std::string_view raw_text);

// Trims whitespace and surrounding quote pairs. Throws EmptyFeedback.
std::string parse_feedback(std::string_view raw_text);

// ---- backends ----

class CompletionBackend {
 public:
  virtual ~CompletionBackend() = default;
  // Raw model text for an exchange. Implementations throw gateway errors
  // (EndpointUnavailable, AuthFailure, OversizePayload, MalformedResponse,
  // FixtureMiss).
  virtual std::string complete_text(const ChatExchange& exchange, const DecodingParams& params,
                                    const ImageStore& images) = 0;
  virtual const std::string& model_id() const = 0;
};

// OpenAI-style chat-completions client over HTTP with retry/backoff and a
// token-bucket rate limit.
class HttpBackend : public CompletionBackend {
 public:
  explicit HttpBackend(EndpointConfig config);
  std::string complete_text(const ChatExchange& exchange, const DecodingParams& params,
                            const ImageStore& images) override;
  const std::string& model_id() const override { return config_.model; }

 private:
  EndpointConfig config_;
  std::mutex rate_mutex_;
  double tokens_;
  std::chrono::steady_clock::time_point last_refill_;

  void acquire_rate_token();
};

struct MockConfig {
  // test sample id -> canned raw text. When empty, heuristic mode answers
  // with the majority grade among demonstration assistant turns (ties go to
  // the last demonstration, the most similar one).
  std::map<std::string, std::string> fixtures;
  bool heuristic = true;
  std::string model_id = "mock-vlm";
};

MockConfig load_mock_fixtures(const std::filesystem::path& jsonl_path);

class MockBackend : public CompletionBackend {
 public:
  explicit MockBackend(MockConfig config);
  std::string complete_text(const ChatExchange& exchange, const DecodingParams& params,
                            const ImageStore& images) override;
  const std::string& model_id() const override { return config_.model_id; }

 private:
  MockConfig config_;
};

// ---- response cache ----

// Append-only JSONL response cache keyed by request_hash. Records:
// {"latency_ms","model_id","raw_text","request_hash","timestamp"}.
class ResponseCache {
 public:
  ResponseCache() = default;
  explicit ResponseCache(std::filesystem::path file);

  std::optional<VlmResponse> get(const std::string& hash) const;
  void put(const VlmResponse& response);
  size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::filesystem::path file_;
  std::map<std::string, VlmResponse> entries_;
};

// Cache-through completion: answers from the cache when the request hash is
// known (no backend call), otherwise calls the backend and stores the result.
class Gateway {
 public:
  Gateway(std::shared_ptr<CompletionBackend> backend, std::shared_ptr<ResponseCache> cache);

  VlmResponse complete(const ChatExchange& exchange, const DecodingParams& params,
                       const ImageStore& images);

  const std::string& model_id() const { return backend_->model_id(); }

 private:
  std::shared_ptr<CompletionBackend> backend_;
  std::shared_ptr<ResponseCache> cache_;
};

}  // namespace hanzi
