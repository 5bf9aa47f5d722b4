#include "hanzi/embedding.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "hanzi/error.hpp"
#include "hanzi/util.hpp"

namespace hanzi {

using json = nlohmann::json;

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim != b.dim || a.values.size() != b.values.size()) {
    raise(ErrorCode::dimension_mismatch,
          "dim " + std::to_string(a.dim) + " vs " + std::to_string(b.dim));
  }
  double dot = 0.0, norm_a = 0.0, norm_b = 0.0;
  for (size_t i = 0; i < a.values.size(); ++i) {
    dot += a.values[i] * b.values[i];
    norm_a += a.values[i] * a.values[i];
    norm_b += b.values[i] * b.values[i];
  }
  if (norm_a == 0.0 || norm_b == 0.0) {
    raise(ErrorCode::zero_vector, "cosine similarity undefined for all-zero vectors");
  }
  return dot / (std::sqrt(norm_a) * std::sqrt(norm_b));
}

LocalGridEmbedder::LocalGridEmbedder(std::string id) : id_(std::move(id)) {}

EmbeddingVector LocalGridEmbedder::embed_bytes(const std::vector<uint8_t>& image_bytes) {
  return embed_image(decode_gray(image_bytes));
}

EmbeddingVector LocalGridEmbedder::embed_image(const GrayImage& image) const {
  if (image.width <= 0 || image.height <= 0) {
    raise(ErrorCode::decode_failure, "empty image");
  }
  std::vector<double> histogram(kDim, 0.0);
  for (int row = 0; row < image.height; ++row) {
    int cell_row = std::min(kGrid - 1, row * kGrid / image.height);
    for (int col = 0; col < image.width; ++col) {
      int cell_col = std::min(kGrid - 1, col * kGrid / image.width);
      int bin = image.at(row, col) * kBins / 256;
      histogram[(static_cast<size_t>(cell_row) * kGrid + cell_col) * kBins + bin] += 1.0;
    }
  }
  double norm = 0.0;
  for (double v : histogram) norm += v * v;
  norm = std::sqrt(norm);
  for (double& v : histogram) v /= norm;  // norm > 0: every pixel lands in a bin

  EmbeddingVector vector;
  vector.embedder_id = id_;
  vector.dim = kDim;
  vector.values = std::move(histogram);
  return vector;
}

RemoteEmbedder::RemoteEmbedder(RemoteEmbedderConfig config) : config_(std::move(config)) {}

namespace {

// Resolves "data.0.embedding"-style paths into a JSON document.
const json* resolve_json_path(const json& root, const std::string& path) {
  const json* node = &root;
  size_t begin = 0;
  while (begin <= path.size()) {
    size_t end = path.find('.', begin);
    std::string key = path.substr(begin, end == std::string::npos ? end : end - begin);
    if (key.empty()) return nullptr;
    if (node->is_array()) {
      char* parse_end = nullptr;
      long index = std::strtol(key.c_str(), &parse_end, 10);
      if (parse_end != key.c_str() + key.size() || index < 0 ||
          static_cast<size_t>(index) >= node->size()) {
        return nullptr;
      }
      node = &(*node)[static_cast<size_t>(index)];
    } else if (node->is_object() && node->contains(key)) {
      node = &(*node)[key];
    } else {
      return nullptr;
    }
    if (end == std::string::npos) break;
    begin = end + 1;
  }
  return node;
}

}  // namespace

EmbeddingVector RemoteEmbedder::embed_bytes(const std::vector<uint8_t>& image_bytes) {
  json payload;
  if (!config_.model.empty()) payload["model"] = config_.model;
  payload[config_.request_image_field] = base64_encode(image_bytes);
  const std::string body = payload.dump();

  httplib::Headers headers;
  if (!config_.auth_env.empty()) {
    const char* token = std::getenv(config_.auth_env.c_str());
    if (token != nullptr && *token != '\0') {
      headers.emplace("Authorization", std::string("Bearer ") + token);
    }
  }

  std::string last_error;
  int backoff_ms = config_.backoff_initial_ms;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
      backoff_ms *= 2;
    }
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout_sec, 0);
    client.set_read_timeout(config_.timeout_sec, 0);
    auto result = client.Post(config_.path, headers, body, "application/json");
    if (!result) {
      last_error = "connection failed: " + httplib::to_string(result.error());
      continue;
    }
    if (result->status >= 500 || result->status == 429) {
      last_error = "HTTP " + std::to_string(result->status);
      continue;
    }
    if (result->status != 200) {
      raise(ErrorCode::embedder_unavailable,
            "HTTP " + std::to_string(result->status) + " from " + config_.base_url);
    }
    json response = json::parse(result->body, nullptr, false);
    if (response.is_discarded()) {
      raise(ErrorCode::malformed_response, "embedder returned invalid JSON");
    }
    const json* values = resolve_json_path(response, config_.response_vector_path);
    if (values == nullptr || !values->is_array() || values->empty()) {
      raise(ErrorCode::malformed_response,
            "no float array at \"" + config_.response_vector_path + "\"");
    }
    EmbeddingVector vector;
    vector.embedder_id = config_.id;
    vector.values.reserve(values->size());
    for (const auto& v : *values) {
      if (!v.is_number()) raise(ErrorCode::malformed_response, "non-numeric embedding value");
      double value = v.get<double>();
      if (!std::isfinite(value)) raise(ErrorCode::malformed_response, "non-finite embedding value");
      vector.values.push_back(value);
    }
    vector.dim = vector.values.size();
    return vector;
  }
  raise(ErrorCode::embedder_unavailable,
        "after " + std::to_string(config_.max_attempts) + " attempts: " + last_error);
}

namespace {

json embedding_record(const std::string& content_hash, const EmbeddingVector& vector) {
  json record;
  record["content_hash"] = content_hash;
  record["dim"] = vector.dim;
  record["embedder_id"] = vector.embedder_id;
  record["sample_id"] = vector.sample_id;
  record["values"] = vector.values;
  return record;
}

EmbeddingVector embedding_from_record(const json& record, const std::string& where) {
  for (const char* key : {"dim", "embedder_id", "sample_id", "values"}) {
    if (!record.contains(key)) {
      raise(ErrorCode::malformed_record, where + ": missing \"" + key + "\"");
    }
  }
  EmbeddingVector vector;
  vector.sample_id = record["sample_id"].get<std::string>();
  vector.embedder_id = record["embedder_id"].get<std::string>();
  vector.dim = record["dim"].get<size_t>();
  vector.values = record["values"].get<std::vector<double>>();
  if (vector.values.size() != vector.dim) {
    raise(ErrorCode::dimension_mismatch,
          where + ": dim " + std::to_string(vector.dim) + " but " +
              std::to_string(vector.values.size()) + " values");
  }
  for (double v : vector.values) {
    if (!std::isfinite(v)) raise(ErrorCode::malformed_record, where + ": non-finite value");
  }
  return vector;
}

}  // namespace

EmbeddingCache::EmbeddingCache(std::filesystem::path file) : file_(std::move(file)) {
  if (!std::filesystem::exists(file_)) return;
  std::ifstream in(file_);
  std::string line;
  size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.contains("content_hash")) {
      raise(ErrorCode::malformed_record,
            file_.string() + " line " + std::to_string(line_number));
    }
    std::string where = file_.string() + " line " + std::to_string(line_number);
    EmbeddingVector vector = embedding_from_record(record, where);
    std::string content_hash = record["content_hash"].get<std::string>();
    dims_[vector.embedder_id] = vector.dim;
    entries_[{content_hash, vector.embedder_id}] = std::move(vector);
  }
}

std::optional<EmbeddingVector> EmbeddingCache::get(const std::string& content_hash,
                                                   const std::string& embedder_id) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = entries_.find({content_hash, embedder_id});
  if (it == entries_.end()) return std::nullopt;
  return it->second;
}

void EmbeddingCache::put(const std::string& content_hash, const EmbeddingVector& vector) {
  std::lock_guard<std::mutex> lock(mutex_);
  auto dim_it = dims_.find(vector.embedder_id);
  if (dim_it != dims_.end() && dim_it->second != vector.dim) {
    raise(ErrorCode::dimension_mismatch,
          "embedder \"" + vector.embedder_id + "\" returned dim " + std::to_string(vector.dim) +
              " but cache holds dim " + std::to_string(dim_it->second));
  }
  dims_[vector.embedder_id] = vector.dim;
  auto [it, inserted] = entries_.insert({{content_hash, vector.embedder_id}, vector});
  if (inserted) append_record_locked(content_hash, vector);
}

size_t EmbeddingCache::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return entries_.size();
}

void EmbeddingCache::append_record_locked(const std::string& content_hash,
                                          const EmbeddingVector& vector) {
  if (file_.empty()) return;
  if (file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path());
  std::ofstream out(file_, std::ios::app | std::ios::binary);
  if (!out) raise(ErrorCode::io_error, "cannot append to " + file_.string());
  out << embedding_record(content_hash, vector).dump() << '\n';
  out.flush();
}

EmbeddingVector embed_sample(const Corpus& corpus, const HandwritingSample& sample,
                             Embedder& embedder, EmbeddingCache& cache) {
  std::vector<uint8_t> bytes = corpus.image_content(sample);
  std::string content_hash = sha256_hex(bytes);
  if (auto cached = cache.get(content_hash, embedder.id())) {
    cached->sample_id = sample.id;
    return *cached;
  }
  EmbeddingVector vector = embedder.embed_bytes(bytes);
  vector.sample_id = sample.id;
  cache.put(content_hash, vector);
  return vector;
}

std::vector<EmbeddingVector> embed_corpus(const Corpus& corpus, Embedder& embedder,
                                          EmbeddingCache& cache, int parallelism) {
  std::vector<EmbeddingVector> vectors(corpus.size());
  if (corpus.empty()) return vectors;
  if (parallelism < 1) parallelism = 1;

  std::atomic<size_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      size_t i = next.fetch_add(1);
      if (i >= corpus.size()) return;
      try {
        vectors[i] = embed_sample(corpus, corpus.samples[i], embedder, cache);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> threads;
  int thread_count = std::min<int>(parallelism, static_cast<int>(corpus.size()));
  threads.reserve(static_cast<size_t>(thread_count));
  for (int t = 0; t < thread_count; ++t) threads.emplace_back(worker);
  for (auto& thread : threads) thread.join();
  if (first_error) std::rethrow_exception(first_error);
  return vectors;
}

EmbeddingIndex::EmbeddingIndex(std::vector<EmbeddingVector> vectors)
    : vectors_(std::move(vectors)) {
  std::sort(vectors_.begin(), vectors_.end(),
            [](const EmbeddingVector& a, const EmbeddingVector& b) {
              return a.sample_id < b.sample_id;
            });
  for (size_t i = 0; i < vectors_.size(); ++i) {
    const auto& vector = vectors_[i];
    if (!by_id_.emplace(vector.sample_id, i).second) {
      raise(ErrorCode::duplicate_id, "\"" + vector.sample_id + "\" appears twice in index");
    }
    if (vector.embedder_id != vectors_.front().embedder_id) {
      raise(ErrorCode::dimension_mismatch, "index mixes embedder ids");
    }
    if (vector.dim != vectors_.front().dim) {
      raise(ErrorCode::dimension_mismatch, "index mixes dimensions");
    }
  }
}

std::vector<SimilarityHit> EmbeddingIndex::top_k(const EmbeddingVector& query, size_t k) const {
  if (vectors_.empty()) raise(ErrorCode::empty_pool, "index holds no vectors");
  if (k == 0) raise(ErrorCode::out_of_range, "k must be >= 1");
  std::vector<SimilarityHit> hits;
  hits.reserve(vectors_.size());
  for (const auto& vector : vectors_) {
    hits.push_back({vector.sample_id, cosine_similarity(query, vector)});
  }
  std::sort(hits.begin(), hits.end(), [](const SimilarityHit& a, const SimilarityHit& b) {
    if (a.similarity != b.similarity) return a.similarity > b.similarity;
    return a.sample_id < b.sample_id;
  });
  if (hits.size() > k) hits.resize(k);
  return hits;
}

const EmbeddingVector* EmbeddingIndex::find(std::string_view sample_id) const {
  auto it = by_id_.find(sample_id);
  if (it == by_id_.end()) return nullptr;
  return &vectors_[it->second];
}

void EmbeddingIndex::save(const std::filesystem::path& path) const {
  std::string out;
  for (const auto& vector : vectors_) {
    // Index records reuse the cache schema; the content hash of the image is
    // not known here, so the sample id stands in.
    out += embedding_record("id:" + vector.sample_id, vector).dump();
    out += '\n';
  }
  write_file_text(path, out);
}

EmbeddingIndex EmbeddingIndex::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(ErrorCode::io_error, "cannot open index " + path.string());
  std::vector<EmbeddingVector> vectors;
  std::string line;
  size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded()) {
      raise(ErrorCode::malformed_record, path.string() + " line " + std::to_string(line_number));
    }
    vectors.push_back(
        embedding_from_record(record, path.string() + " line " + std::to_string(line_number)));
  }
  return EmbeddingIndex(std::move(vectors));
}

}  // namespace hanzi
