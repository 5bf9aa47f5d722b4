#include "hanzi/corpus.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "hanzi/error.hpp"
#include "hanzi/image.hpp"
#include "hanzi/util.hpp"

namespace hanzi {

using json = nlohmann::json;

std::string grade_letter(Grade grade) {
  switch (grade) {
    case Grade::A: return "A";
    case Grade::B: return "B";
    case Grade::C: return "C";
  }
  return {};
}

const char* grade_display_name(Grade grade) {
  switch (grade) {
    case Grade::A: return "Excellent";
    case Grade::B: return "Medium";
    case Grade::C: return "Unqualified";
  }
  return "";
}

Grade grade_from_letter(std::string_view letter) {
  if (letter == "A") return Grade::A;
  if (letter == "B") return Grade::B;
  if (letter == "C") return Grade::C;
  raise(ErrorCode::unparsable_grade, "expected A, B or C, got \"" + std::string(letter) + "\"");
}

const char* to_string(SampleSource source) {
  switch (source) {
    case SampleSource::task1: return "task1";
    case SampleSource::task2: return "task2";
    case SampleSource::chaed: return "chaed";
    case SampleSource::external: return "external";
  }
  return "external";
}

SampleSource sample_source_from_string(std::string_view name) {
  if (name == "task1") return SampleSource::task1;
  if (name == "task2") return SampleSource::task2;
  if (name == "chaed") return SampleSource::chaed;
  if (name == "external") return SampleSource::external;
  raise(ErrorCode::malformed_record, "unknown source \"" + std::string(name) + "\"");
}

const HandwritingSample* Corpus::find(std::string_view id) const {
  for (const auto& sample : samples) {
    if (sample.id == id) return &sample;
  }
  return nullptr;
}

std::filesystem::path Corpus::image_path(const HandwritingSample& sample) const {
  std::filesystem::path p(sample.image);
  if (p.is_absolute() || base_dir.empty()) return p;
  return base_dir / p;
}

std::vector<uint8_t> Corpus::image_content(const HandwritingSample& sample) const {
  if (!sample.image_bytes.empty()) return sample.image_bytes;
  return read_file_bytes(image_path(sample));
}

namespace {

HandwritingSample sample_from_json(const json& record, size_t line_number) {
  auto fail = [line_number](const std::string& what) -> HandwritingSample {
    raise(ErrorCode::malformed_record, "line " + std::to_string(line_number) + ": " + what);
  };
  if (!record.is_object()) return fail("not a JSON object");
  for (const char* key : {"id", "image", "grade", "feedback", "source"}) {
    if (!record.contains(key)) return fail(std::string("missing field \"") + key + "\"");
  }
  HandwritingSample sample;
  if (!record["id"].is_string() || record["id"].get<std::string>().empty()) {
    return fail("\"id\" must be a non-empty string");
  }
  sample.id = record["id"].get<std::string>();
  if (!record["image"].is_string()) return fail("\"image\" must be a string");
  sample.image = record["image"].get<std::string>();
  if (record["grade"].is_string()) {
    try {
      sample.grade = grade_from_letter(record["grade"].get<std::string>());
    } catch (const Error&) {
      return fail("\"grade\" must be A, B, C or null");
    }
  } else if (!record["grade"].is_null()) {
    return fail("\"grade\" must be A, B, C or null");
  }
  if (record["feedback"].is_string()) {
    sample.feedback = record["feedback"].get<std::string>();
  } else if (!record["feedback"].is_null()) {
    return fail("\"feedback\" must be a string or null");
  }
  if (!record["source"].is_string()) return fail("\"source\" must be a string");
  try {
    sample.source = sample_source_from_string(record["source"].get<std::string>());
  } catch (const Error&) {
    return fail("unknown \"source\" value");
  }
  return sample;
}

json sample_to_json(const HandwritingSample& sample) {
  json record;
  record["id"] = sample.id;
  record["image"] = sample.image;
  record["grade"] = sample.grade ? json(grade_letter(*sample.grade)) : json(nullptr);
  record["feedback"] = sample.feedback ? json(*sample.feedback) : json(nullptr);
  record["source"] = to_string(sample.source);
  return record;
}

}  // namespace

Corpus load_corpus(const std::filesystem::path& manifest_path, const LoadOptions& options) {
  std::ifstream in(manifest_path);
  if (!in) raise(ErrorCode::io_error, "cannot open manifest " + manifest_path.string());

  Corpus corpus;
  corpus.base_dir = manifest_path.has_parent_path() ? manifest_path.parent_path()
                                                    : std::filesystem::path(".");
  std::unordered_set<std::string> seen_ids;
  std::string line;
  size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.empty()) continue;
    json record = json::parse(line, nullptr, false);
    if (record.is_discarded()) {
      raise(ErrorCode::malformed_record,
            "line " + std::to_string(line_number) + ": invalid JSON");
    }
    HandwritingSample sample = sample_from_json(record, line_number);
    if (!seen_ids.insert(sample.id).second) {
      raise(ErrorCode::duplicate_id, "\"" + sample.id + "\"");
    }
    corpus.samples.push_back(std::move(sample));
  }

  if (options.validate_images) {
    for (const auto& sample : corpus.samples) {
      auto path = corpus.image_path(sample);
      if (!std::filesystem::exists(path)) {
        raise(ErrorCode::missing_image, "sample \"" + sample.id + "\": " + path.string());
      }
      if (!is_decodable_image(path)) {
        raise(ErrorCode::decode_failure, "sample \"" + sample.id + "\": " + path.string());
      }
    }
  }
  return corpus;
}

std::string corpus_to_manifest(const Corpus& corpus) {
  std::string out;
  for (const auto& sample : corpus.samples) {
    out += sample_to_json(sample).dump();
    out += '\n';
  }
  return out;
}

void save_corpus(const Corpus& corpus, const std::filesystem::path& manifest_path) {
  write_file_text(manifest_path, corpus_to_manifest(corpus));
}

std::string corpus_hash(const Corpus& corpus) { return sha256_hex(corpus_to_manifest(corpus)); }

Grade bin_chaed_score(double score) {
  if (!(score >= 0.0 && score <= 100.0)) {
    raise(ErrorCode::out_of_range, "score " + std::to_string(score) + " outside [0,100]");
  }
  if (score > 80.0) return Grade::A;
  if (score < 30.0) return Grade::C;
  return Grade::B;
}

Corpus import_chaed_csv(const std::filesystem::path& csv_path, const std::string& id_prefix) {
  std::ifstream in(csv_path);
  if (!in) raise(ErrorCode::io_error, "cannot open CSV " + csv_path.string());

  Corpus corpus;
  corpus.base_dir = csv_path.has_parent_path() ? csv_path.parent_path()
                                               : std::filesystem::path(".");
  std::unordered_set<std::string> seen_ids;
  std::string line;
  size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line_number == 1) {
      if (line != "path,score") {
        raise(ErrorCode::malformed_record, "line 1: expected header \"path,score\"");
      }
      continue;
    }
    size_t comma = line.rfind(',');
    if (comma == std::string::npos || comma == 0 || comma + 1 == line.size()) {
      raise(ErrorCode::malformed_record, "line " + std::to_string(line_number) + ": expected path,score");
    }
    std::string path = line.substr(0, comma);
    double score = 0.0;
    try {
      size_t consumed = 0;
      score = std::stod(line.substr(comma + 1), &consumed);
      if (consumed != line.size() - comma - 1) throw std::invalid_argument("trailing junk");
    } catch (const std::exception&) {
      raise(ErrorCode::malformed_record, "line " + std::to_string(line_number) + ": invalid score");
    }

    HandwritingSample sample;
    sample.id = id_prefix + std::filesystem::path(path).stem().string();
    sample.image = path;
    sample.grade = bin_chaed_score(score);
    sample.source = SampleSource::chaed;
    if (!seen_ids.insert(sample.id).second) {
      raise(ErrorCode::duplicate_id, "\"" + sample.id + "\"");
    }
    corpus.samples.push_back(std::move(sample));
  }
  return corpus;
}

const char* to_string(SplitStrategy strategy) {
  return strategy == SplitStrategy::stratified_random ? "stratified_random" : "random";
}

SplitStrategy split_strategy_from_string(std::string_view name) {
  if (name == "stratified_random") return SplitStrategy::stratified_random;
  if (name == "random") return SplitStrategy::random;
  raise(ErrorCode::config_error, "unknown split strategy \"" + std::string(name) + "\"");
}

CorpusSplit split_corpus(const Corpus& corpus, size_t dev_size, uint64_t seed,
                         SplitStrategy strategy) {
  if (dev_size == 0 || dev_size >= corpus.size()) {
    raise(ErrorCode::dev_too_large,
          "dev_size " + std::to_string(dev_size) + " for corpus of " + std::to_string(corpus.size()));
  }

  std::vector<size_t> dev_positions;
  if (strategy == SplitStrategy::random) {
    Rng rng = Rng::from_key(seed, "split/random");
    dev_positions = rng.sample_indices(corpus.size(), dev_size);
  } else {
    // Group positions by grade (A, B, C), preserving corpus order within each.
    std::map<Grade, std::vector<size_t>> groups;
    for (size_t i = 0; i < corpus.size(); ++i) {
      const auto& sample = corpus.samples[i];
      if (!sample.grade) {
        raise(ErrorCode::missing_grades, "sample \"" + sample.id + "\" has no grade");
      }
      groups[*sample.grade].push_back(i);
    }
    // Per-grade dev counts by largest remainder, so each count is within one
    // sample of the exact proportion and the total is exactly dev_size.
    struct Allocation {
      Grade grade;
      size_t count;
      double remainder;
    };
    std::vector<Allocation> allocations;
    size_t assigned = 0;
    for (const auto& [grade, positions] : groups) {
      double exact = static_cast<double>(dev_size) * positions.size() / corpus.size();
      size_t base = static_cast<size_t>(std::floor(exact));
      allocations.push_back({grade, base, exact - static_cast<double>(base)});
      assigned += base;
    }
    std::stable_sort(allocations.begin(), allocations.end(),
                     [](const Allocation& a, const Allocation& b) { return a.remainder > b.remainder; });
    for (size_t i = 0; assigned < dev_size; ++assigned, ++i) {
      ++allocations[i % allocations.size()].count;
    }
    for (const auto& allocation : allocations) {
      auto positions = groups[allocation.grade];
      Rng rng = Rng::from_key(seed, std::string("split/stratified/") + grade_letter(allocation.grade));
      rng.shuffle(positions);
      size_t take = std::min(allocation.count, positions.size());
      dev_positions.insert(dev_positions.end(), positions.begin(),
                           positions.begin() + static_cast<ptrdiff_t>(take));
    }
  }

  std::sort(dev_positions.begin(), dev_positions.end());
  std::vector<bool> in_dev(corpus.size(), false);
  for (size_t pos : dev_positions) in_dev[pos] = true;

  CorpusSplit split;
  split.seed = seed;
  split.strategy = strategy;
  for (size_t i = 0; i < corpus.size(); ++i) {
    (in_dev[i] ? split.dev_ids : split.train_ids).push_back(corpus.samples[i].id);
  }
  return split;
}

Corpus subset_by_ids(const Corpus& corpus, const std::vector<std::string>& ids) {
  std::unordered_set<std::string> wanted(ids.begin(), ids.end());
  Corpus out;
  out.base_dir = corpus.base_dir;
  for (const auto& sample : corpus.samples) {
    if (wanted.count(sample.id)) out.samples.push_back(sample);
  }
  return out;
}

Corpus merge_corpora(const Corpus& a, const Corpus& b) {
  std::unordered_set<std::string> ids;
  for (const auto& sample : a.samples) ids.insert(sample.id);
  for (const auto& sample : b.samples) {
    if (ids.count(sample.id)) {
      raise(ErrorCode::duplicate_id, "\"" + sample.id + "\" present in both corpora");
    }
  }
  Corpus merged;
  merged.base_dir = a.base_dir.empty() ? b.base_dir : a.base_dir;
  merged.samples = a.samples;
  merged.samples.insert(merged.samples.end(), b.samples.begin(), b.samples.end());
  return merged;
}

}  // namespace hanzi
