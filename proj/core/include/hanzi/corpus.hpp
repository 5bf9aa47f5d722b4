#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace hanzi {

// Three-level quality grade. Ordered A > B > C for reporting only.
enum class Grade { A, B, C };

// "A" / "B" / "C"
std::string grade_letter(Grade grade);
// "Excellent" / "Medium" / "Unqualified"
const char* grade_display_name(Grade grade);
// Parses a bare letter; throws UnparsableGrade otherwise.
Grade grade_from_letter(std::string_view letter);

enum class SampleSource { task1, task2, chaed, external };

const char* to_string(SampleSource source);
SampleSource sample_source_from_string(std::string_view name);

// One handwriting image with optional gold labels; the atom of all corpora.
struct HandwritingSample {
  std::string id;
  std::string image;  // path relative to the corpus base directory
  std::optional<Grade> grade;
  std::optional<std::string> feedback;
  SampleSource source = SampleSource::external;
  // Optional in-memory image content; takes precedence over `image` when set
  // (programmatic corpora, tests).
  std::vector<uint8_t> image_bytes;

  bool operator==(const HandwritingSample& other) const {
    return id == other.id && image == other.image && grade == other.grade &&
           feedback == other.feedback && source == other.source;
  }
};

struct Corpus {
  std::vector<HandwritingSample> samples;
  std::filesystem::path base_dir;  // directory image paths are relative to

  size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
  const HandwritingSample* find(std::string_view id) const;
  // Resolved on-disk location of a sample's image.
  std::filesystem::path image_path(const HandwritingSample& sample) const;
  // Image content, preferring in-memory bytes over the file.
  std::vector<uint8_t> image_content(const HandwritingSample& sample) const;
};

struct LoadOptions {
  // Verify that every image decodes as PNG/JPEG. Disable for label-only work
  // on manifests whose images live elsewhere.
  bool validate_images = true;
};

// Loads and validates a JSONL manifest. Order preserved. Throws
// MalformedRecord (with line number), DuplicateId, MissingImage.
Corpus load_corpus(const std::filesystem::path& manifest_path, const LoadOptions& options = {});

// Canonical JSONL manifest (sorted keys, all five fields, one trailing
// newline). save -> load -> save is byte-identical.
std::string corpus_to_manifest(const Corpus& corpus);
void save_corpus(const Corpus& corpus, const std::filesystem::path& manifest_path);

// SHA-256 of the canonical manifest bytes.
std::string corpus_hash(const Corpus& corpus);

// CHAED aesthetic score (0-100) to grade: >80 -> A, [30,80] -> B, <30 -> C.
// Throws OutOfRange outside [0,100].
Grade bin_chaed_score(double score);

// Ingests a `path,score` CSV, binning scores into grades. Image paths are kept
// relative to the CSV location. Sample ids are id_prefix + file stem.
Corpus import_chaed_csv(const std::filesystem::path& csv_path, const std::string& id_prefix = "chaed_");

enum class SplitStrategy { stratified_random, random };

const char* to_string(SplitStrategy strategy);
SplitStrategy split_strategy_from_string(std::string_view name);

struct CorpusSplit {
  std::vector<std::string> train_ids;
  std::vector<std::string> dev_ids;
  uint64_t seed = 0;
  SplitStrategy strategy = SplitStrategy::stratified_random;
};

// Deterministic train/dev split. Stratified splits keep per-grade proportions
// within one sample. Throws DevTooLarge, MissingGrades.
CorpusSplit split_corpus(const Corpus& corpus, size_t dev_size, uint64_t seed,
                         SplitStrategy strategy = SplitStrategy::stratified_random);

// Materializes one side of a split, preserving corpus order.
Corpus subset_by_ids(const Corpus& corpus, const std::vector<std::string>& ids);

// Concatenation a-then-b. Throws DuplicateId on overlapping ids.
Corpus merge_corpora(const Corpus& a, const Corpus& b);

}  // namespace hanzi
