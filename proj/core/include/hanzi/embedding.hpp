#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "hanzi/corpus.hpp"
#include "hanzi/image.hpp"

namespace hanzi {

struct EmbeddingVector {
  std::string sample_id;
  std::string embedder_id;
  size_t dim = 0;
  std::vector<double> values;
};

struct SimilarityHit {
  std::string sample_id;
  double similarity = 0.0;
};

// dot(a,b) / (|a|*|b|). Throws DimensionMismatch, ZeroVector.
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

// ---- embedders ----

class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual const std::string& id() const = 0;
  // Embeds raw PNG/JPEG bytes. Throws DecodeFailure, EmbedderUnavailable.
  virtual EmbeddingVector embed_bytes(const std::vector<uint8_t>& image_bytes) = 0;
};

// Offline deterministic embedder: 4x4 spatial grid over the grayscale image,
// 5-bin intensity histogram per cell, concatenated to 80 dims, L2-normalized.
class LocalGridEmbedder : public Embedder {
 public:
  static constexpr int kGrid = 4;
  static constexpr int kBins = 5;
  static constexpr size_t kDim = kGrid * kGrid * kBins;

  explicit LocalGridEmbedder(std::string id = "local-grid-v1");
  const std::string& id() const override { return id_; }
  EmbeddingVector embed_bytes(const std::vector<uint8_t>& image_bytes) override;
  EmbeddingVector embed_image(const GrayImage& image) const;

 private:
  std::string id_;
};

struct RemoteEmbedderConfig {
  std::string id = "remote";
  std::string base_url;                 // e.g. "http://embedder.internal:8080"
  std::string path = "/v1/embeddings";
  std::string model;
  std::string auth_env;                 // env var holding the bearer token
  std::string request_image_field = "image";  // base64 payload field
  std::string response_vector_path = "embedding";  // dot path to the float array
  int max_attempts = 3;
  int backoff_initial_ms = 1000;        // doubled per retry
  int timeout_sec = 30;
};

// HTTP client for an embedding service: POST {model, <image_field>: base64},
// response float array located by a dot path ("data.0.embedding" style).
class RemoteEmbedder : public Embedder {
 public:
  explicit RemoteEmbedder(RemoteEmbedderConfig config);
  const std::string& id() const override { return config_.id; }
  EmbeddingVector embed_bytes(const std::vector<uint8_t>& image_bytes) override;

 private:
  RemoteEmbedderConfig config_;
};

// ---- cache ----

// Embedding cache keyed by (image content hash, embedder id), persisted as
// JSONL records {"content_hash","dim","embedder_id","sample_id","values"}.
// Writes are serialized and flushed per record.
class EmbeddingCache {
 public:
  EmbeddingCache() = default;
  // Binds the cache to a file, loading existing entries.
  explicit EmbeddingCache(std::filesystem::path file);

  std::optional<EmbeddingVector> get(const std::string& content_hash,
                                     const std::string& embedder_id) const;
  // Throws DimensionMismatch when the entry disagrees with the embedder's
  // established dimension.
  void put(const std::string& content_hash, const EmbeddingVector& vector);
  size_t size() const;

 private:
  mutable std::mutex mutex_;
  std::filesystem::path file_;
  std::map<std::pair<std::string, std::string>, EmbeddingVector> entries_;
  std::map<std::string, size_t> dims_;  // embedder_id -> dim

  void append_record_locked(const std::string& content_hash, const EmbeddingVector& vector);
};

// Embeds one sample through the cache (content-hash keyed).
EmbeddingVector embed_sample(const Corpus& corpus, const HandwritingSample& sample,
                             Embedder& embedder, EmbeddingCache& cache);

// Embeds a whole corpus with bounded parallelism. Returns vectors in corpus
// order.
std::vector<EmbeddingVector> embed_corpus(const Corpus& corpus, Embedder& embedder,
                                          EmbeddingCache& cache, int parallelism = 4);

// ---- index ----

// Exact brute-force cosine index over one embedder's vectors.
class EmbeddingIndex {
 public:
  EmbeddingIndex() = default;
  explicit EmbeddingIndex(std::vector<EmbeddingVector> vectors);

  // Top-k by cosine similarity, descending; ties broken by ascending
  // sample_id; k > size returns all. Throws EmptyPool.
  std::vector<SimilarityHit> top_k(const EmbeddingVector& query, size_t k) const;

  const EmbeddingVector* find(std::string_view sample_id) const;
  size_t size() const { return vectors_.size(); }
  const std::vector<EmbeddingVector>& vectors() const { return vectors_; }

  // Canonical JSONL (sorted by sample_id). save -> load round-trips
  // bit-for-bit.
  void save(const std::filesystem::path& path) const;
  static EmbeddingIndex load(const std::filesystem::path& path);

 private:
  std::vector<EmbeddingVector> vectors_;
  std::map<std::string, size_t, std::less<>> by_id_;
};

}  // namespace hanzi
