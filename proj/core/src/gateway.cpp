#include "hanzi/gateway.hpp"

#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <thread>

#include "hanzi/error.hpp"
#include "hanzi/util.hpp"

namespace hanzi {

using json = nlohmann::json;

void ImageStore::add_corpus(const Corpus& corpus) {
  std::lock_guard<std::mutex> lock(mutex_);
  for (const auto& sample : corpus.samples) {
    Entry entry;
    if (!sample.image_bytes.empty()) {
      entry.inline_bytes = sample.image_bytes;
    } else {
      entry.path = corpus.image_path(sample);
    }
    entries_[sample.image] = std::move(entry);
  }
}

void ImageStore::add_file(const std::string& ref, std::filesystem::path path) {
  std::lock_guard<std::mutex> lock(mutex_);
  entries_[ref] = Entry{std::move(path), {}};
}

void ImageStore::add_bytes(const std::string& ref, std::vector<uint8_t> bytes) {
  std::lock_guard<std::mutex> lock(mutex_);
  entries_[ref] = Entry{{}, std::move(bytes)};
}

ImageStore::Entry ImageStore::lookup(const std::string& ref) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = entries_.find(ref);
  if (it != entries_.end()) return it->second;
  // Unregistered ref: fall back to the path itself.
  return Entry{std::filesystem::path(ref), {}};
}

std::vector<uint8_t> ImageStore::bytes(const std::string& ref) const {
  Entry entry = lookup(ref);
  if (!entry.inline_bytes.empty()) return entry.inline_bytes;
  if (!std::filesystem::exists(entry.path)) {
    raise(ErrorCode::missing_image, "image ref \"" + ref + "\"");
  }
  return read_file_bytes(entry.path);
}

std::string ImageStore::content_hash(const std::string& ref) const {
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = hashes_.find(ref);
    if (it != hashes_.end()) return it->second;
  }
  std::string hash = sha256_hex(bytes(ref));
  std::lock_guard<std::mutex> lock(mutex_);
  hashes_[ref] = hash;
  return hash;
}

std::string request_hash(const std::string& model_id, const ChatExchange& exchange,
                         const DecodingParams& params, const ImageStore& images) {
  json messages = json::array();
  for (const auto& message : exchange.messages) {
    json m;
    m["content"] = message.text;
    m["role"] = to_string(message.role);
    if (!message.images.empty()) {
      json digests = json::array();
      for (const auto& image : message.images) {
        digests.push_back(images.content_hash(image));
      }
      m["images"] = std::move(digests);
    }
    messages.push_back(std::move(m));
  }
  json fingerprint;
  fingerprint["max_tokens"] = params.max_tokens;
  fingerprint["messages"] = std::move(messages);
  fingerprint["model"] = model_id;
  if (params.seed) fingerprint["seed"] = *params.seed;
  fingerprint["temperature"] = params.temperature;
  return sha256_hex(fingerprint.dump());
}

Grade parse_grade(std::string_view raw_text) {
  std::string trimmed = trim(raw_text);
  if (trimmed == "A" || trimmed == "B" || trimmed == "C") {
    return grade_from_letter(trimmed);
  }
  auto is_latin = [](char c) {
    return (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z');
  };
  for (size_t i = 0; i < raw_text.size(); ++i) {
    char c = raw_text[i];
    if (c != 'A' && c != 'B' && c != 'C') continue;
    bool left_ok = i == 0 || !is_latin(raw_text[i - 1]);
    bool right_ok = i + 1 == raw_text.size() || !is_latin(raw_text[i + 1]);
    if (left_ok && right_ok) return grade_from_letter(std::string_view(&raw_text[i], 1));
  }
  raise(ErrorCode::unparsable_grade, "no standalone A/B/C in \"" + std::string(raw_text) + "\"");
}

namespace {

bool is_quote_pair(char32_t open, char32_t close) {
  switch (open) {
    case U'"': return close == U'"';
    case U'\'': return close == U'\'';
    case U'“': return close == U'”';  // “ ”
    case U'‘': return close == U'’';  // ‘ ’
    case U'「': return close == U'」';  // 「 」
    case U'『': return close == U'』';  // 『 』
    default: return false;
  }
}

}  // namespace

std::string parse_feedback(std::string_view raw_text) {
  auto codepoints = utf8_decode(raw_text);
  size_t begin = 0;
  size_t end = codepoints.size();
  for (;;) {
    while (begin < end && is_unicode_space(codepoints[begin])) ++begin;
    while (end > begin && is_unicode_space(codepoints[end - 1])) --end;
    if (end - begin >= 2 && is_quote_pair(codepoints[begin], codepoints[end - 1])) {
      ++begin;
      --end;
      continue;
    }
    break;
  }
  if (begin >= end) raise(ErrorCode::empty_feedback, "model returned no feedback text");
  return utf8_encode(std::vector<char32_t>(codepoints.begin() + static_cast<ptrdiff_t>(begin),
                                           codepoints.begin() + static_cast<ptrdiff_t>(end)));
}

HttpBackend::HttpBackend(EndpointConfig config)
    : config_(std::move(config)),
      tokens_(config_.requests_per_second > 0 ? config_.requests_per_second : 0),
      last_refill_(std::chrono::steady_clock::now()) {}

void HttpBackend::acquire_rate_token() {
  if (config_.requests_per_second <= 0) return;
  for (;;) {
    {
      std::lock_guard<std::mutex> lock(rate_mutex_);
      auto now = std::chrono::steady_clock::now();
      double elapsed = std::chrono::duration<double>(now - last_refill_).count();
      last_refill_ = now;
      tokens_ = std::min(config_.requests_per_second,
                         tokens_ + elapsed * config_.requests_per_second);
      if (tokens_ >= 1.0) {
        tokens_ -= 1.0;
        return;
      }
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(10));
  }
}

namespace {

std::string image_data_uri(const std::vector<uint8_t>& bytes) {
  // Sniff the two formats the corpus allows.
  const char* mime = "image/png";
  if (bytes.size() >= 2 && bytes[0] == 0xFF && bytes[1] == 0xD8) mime = "image/jpeg";
  return std::string("data:") + mime + ";base64," + base64_encode(bytes);
}

// Splits message text on "<image>" and interleaves image parts, producing the
// content array of a chat-completions request.
json message_content_parts(const ChatMessage& message, const Corpus& corpus,
                           const std::string& image_mode) {
  json parts = json::array();
  std::string_view text = message.text;
  size_t image_index = 0;
  size_t pos = 0;
  auto push_text = [&parts](std::string_view chunk) {
    if (chunk.empty()) return;
    json part;
    part["type"] = "text";
    part["text"] = std::string(chunk);
    parts.push_back(std::move(part));
  };
  while (pos <= text.size()) {
    size_t found = text.find(kImagePlaceholder, pos);
    if (found == std::string_view::npos) {
      push_text(text.substr(pos));
      break;
    }
    push_text(text.substr(pos, found - pos));
    const std::string& image = message.images[image_index++];
    json part;
    part["type"] = "image_url";
    if (image_mode == "url") {
      part["image_url"] = json{{"url", image}};
    } else {
      std::filesystem::path path(image);
      if (!path.is_absolute()) path = corpus.base_dir / path;
      part["image_url"] = json{{"url", image_data_uri(read_file_bytes(path))}};
    }
    parts.push_back(std::move(part));
    pos = found + kImagePlaceholder.size();
  }
  return parts;
}

}  // namespace

std::string HttpBackend::complete_text(const ChatExchange& exchange, const DecodingParams& params,
                                       const Corpus& corpus) {
  json messages = json::array();
  for (const auto& message : exchange.messages) {
    json m;
    m["role"] = to_string(message.role);
    if (message.images.empty()) {
      m["content"] = message.text;
    } else {
      m["content"] = message_content_parts(message, corpus, config_.image_mode);
    }
    messages.push_back(std::move(m));
  }
  json payload;
  payload["model"] = config_.model;
  payload["messages"] = std::move(messages);
  payload["temperature"] = params.temperature;
  payload["max_tokens"] = params.max_tokens;
  if (params.seed) payload["seed"] = *params.seed;
  const std::string body = payload.dump();
  if (body.size() > config_.max_payload_bytes) {
    raise(ErrorCode::oversize_payload,
          std::to_string(body.size()) + " bytes exceeds limit of " +
              std::to_string(config_.max_payload_bytes));
  }

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
    acquire_rate_token();
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout_sec, 0);
    client.set_read_timeout(config_.timeout_sec, 0);
    auto result = client.Post(config_.path, headers, body, "application/json");
    if (!result) {
      last_error = "connection failed: " + httplib::to_string(result.error());
      continue;
    }
    if (result->status == 401 || result->status == 403) {
      raise(ErrorCode::auth_failure, "HTTP " + std::to_string(result->status));
    }
    if (result->status == 413) {
      raise(ErrorCode::oversize_payload, "endpoint rejected payload (HTTP 413)");
    }
    if (result->status >= 500 || result->status == 429) {
      last_error = "HTTP " + std::to_string(result->status);
      continue;
    }
    if (result->status != 200) {
      raise(ErrorCode::malformed_response, "unexpected HTTP " + std::to_string(result->status));
    }
    json response = json::parse(result->body, nullptr, false);
    if (response.is_discarded()) {
      raise(ErrorCode::malformed_response, "endpoint returned invalid JSON");
    }
    if (!response.contains("choices") || !response["choices"].is_array() ||
        response["choices"].empty() || !response["choices"][0].contains("message") ||
        !response["choices"][0]["message"].contains("content") ||
        !response["choices"][0]["message"]["content"].is_string()) {
      raise(ErrorCode::malformed_response, "no choices[0].message.content in response");
    }
    return response["choices"][0]["message"]["content"].get<std::string>();
  }
  raise(ErrorCode::endpoint_unavailable,
        "after " + std::to_string(config_.max_attempts) + " attempts: " + last_error);
}

MockConfig load_mock_fixtures(const std::filesystem::path& jsonl_path) {
  std::ifstream in(jsonl_path);
  if (!in) raise(ErrorCode::io_error, "cannot open fixtures " + jsonl_path.string());
  MockConfig config;
  config.heuristic = false;
  std::string line;
  size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.contains("id") || !record.contains("text")) {
      raise(ErrorCode::malformed_record,
            jsonl_path.string() + " line " + std::to_string(line_number) +
                ": expected {\"id\",\"text\"}");
    }
    config.fixtures[record["id"].get<std::string>()] = record["text"].get<std::string>();
  }
  return config;
}

MockBackend::MockBackend(MockConfig config) : config_(std::move(config)) {}

std::string MockBackend::complete_text(const ChatExchange& exchange, const DecodingParams&,
                                       const Corpus&) {
  auto it = config_.fixtures.find(exchange.test_id);
  if (it != config_.fixtures.end()) return it->second;
  if (!config_.heuristic) {
    raise(ErrorCode::fixture_miss, "no fixture for test id \"" + exchange.test_id + "\"");
  }

  // Heuristic mode: majority vote over demonstration assistant turns; ties go
  // to the last demonstration (the most similar one under similarity order).
  std::vector<std::string> assistant_texts;
  for (const auto& message : exchange.messages) {
    if (message.role == Role::assistant) assistant_texts.push_back(message.text);
  }
  if (assistant_texts.empty()) {
    raise(ErrorCode::fixture_miss,
          "heuristic mock needs demonstrations or a fixture for \"" + exchange.test_id + "\"");
  }
  bool all_grades = std::all_of(assistant_texts.begin(), assistant_texts.end(),
                                [](const std::string& t) { return t == "A" || t == "B" || t == "C"; });
  if (!all_grades) {
    // Feedback-style demonstrations: echo the most similar one.
    return assistant_texts.back();
  }
  std::map<std::string, size_t> votes;
  for (const auto& text : assistant_texts) ++votes[text];
  size_t best = 0;
  for (const auto& [text, count] : votes) best = std::max(best, count);
  std::vector<std::string> winners;
  for (const auto& [text, count] : votes) {
    if (count == best) winners.push_back(text);
  }
  if (winners.size() == 1) return winners.front();
  // Tie: walk demonstrations from the back.
  for (auto it2 = assistant_texts.rbegin(); it2 != assistant_texts.rend(); ++it2) {
    if (std::find(winners.begin(), winners.end(), *it2) != winners.end()) return *it2;
  }
  return assistant_texts.back();
}

ResponseCache::ResponseCache(std::filesystem::path file) : file_(std::move(file)) {
  if (!std::filesystem::exists(file_)) return;
  std::ifstream in(file_);
  std::string line;
  size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded() || !record.contains("request_hash") ||
        !record.contains("raw_text")) {
      raise(ErrorCode::malformed_record,
            file_.string() + " line " + std::to_string(line_number));
    }
    VlmResponse response;
    response.request_hash = record["request_hash"].get<std::string>();
    response.raw_text = record["raw_text"].get<std::string>();
    response.model_id = record.value("model_id", "");
    response.latency_ms = record.value("latency_ms", int64_t{0});
    response.cached = true;
    entries_[response.request_hash] = std::move(response);
  }
}

std::optional<VlmResponse> ResponseCache::get(const std::string& hash) const {
  std::lock_guard<std::mutex> lock(mutex_);
  auto it = entries_.find(hash);
  if (it == entries_.end()) return std::nullopt;
  VlmResponse response = it->second;
  response.cached = true;
  return response;
}

void ResponseCache::put(const VlmResponse& response) {
  std::lock_guard<std::mutex> lock(mutex_);
  if (!entries_.emplace(response.request_hash, response).second) return;  // already stored
  if (file_.empty()) return;
  if (file_.has_parent_path()) std::filesystem::create_directories(file_.parent_path());
  std::ofstream out(file_, std::ios::app | std::ios::binary);
  if (!out) raise(ErrorCode::io_error, "cannot append to " + file_.string());
  json record;
  record["latency_ms"] = response.latency_ms;
  record["model_id"] = response.model_id;
  record["raw_text"] = response.raw_text;
  record["request_hash"] = response.request_hash;
  record["timestamp"] = utc_timestamp();
  out << record.dump() << '\n';
  out.flush();
}

size_t ResponseCache::size() const {
  std::lock_guard<std::mutex> lock(mutex_);
  return entries_.size();
}

Gateway::Gateway(std::shared_ptr<CompletionBackend> backend, std::shared_ptr<ResponseCache> cache)
    : backend_(std::move(backend)), cache_(std::move(cache)) {}

VlmResponse Gateway::complete(const ChatExchange& exchange, const DecodingParams& params,
                              const Corpus& corpus) {
  validate_exchange(exchange);
  const std::string hash = request_hash(backend_->model_id(), exchange, params, corpus);
  if (auto cached = cache_->get(hash)) return *cached;

  auto start = std::chrono::steady_clock::now();
  std::string text = backend_->complete_text(exchange, params, corpus);
  auto elapsed = std::chrono::steady_clock::now() - start;

  VlmResponse response;
  response.raw_text = std::move(text);
  response.model_id = backend_->model_id();
  response.request_hash = hash;
  response.latency_ms = std::chrono::duration_cast<std::chrono::milliseconds>(elapsed).count();
  response.cached = false;
  cache_->put(response);
  return response;
}

}  // namespace hanzi
