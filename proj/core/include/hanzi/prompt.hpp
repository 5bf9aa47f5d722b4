#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "hanzi/corpus.hpp"
#include "hanzi/selector.hpp"

namespace hanzi {

enum class Task { task1, task2 };

const char* to_string(Task task);
Task task_from_string(std::string_view name);

// The literal token that marks an image slot inside message text.
inline constexpr std::string_view kImagePlaceholder = "<image>";

enum class Role { system, user, assistant };

const char* to_string(Role role);
Role role_from_string(std::string_view name);

struct ChatMessage {
  Role role = Role::user;
  std::string text;                 // may contain "<image>" placeholders
  std::vector<std::string> images;  // one image ref per placeholder
};

enum class ExchangePurpose {
  icl_task1,
  icl_task2,
  lora_task1,
  lora_task2_plain,
  lora_task2_with_grade,
  // Inference-side counterpart of lora_task2_with_grade: the single user
  // query sent to a model fine-tuned on that format.
  query_task2_with_grade,
};

const char* to_string(ExchangePurpose purpose);
ExchangePurpose exchange_purpose_from_string(std::string_view name);

struct ChatExchange {
  std::vector<ChatMessage> messages;
  ExchangePurpose purpose = ExchangePurpose::icl_task1;
  std::string test_id;  // in-memory only, not serialized

  size_t placeholder_count() const;
  size_t image_count() const;
};

// Structural invariants: placeholder/image balance per message, no images on
// system messages, purpose-specific message layout. Throws MalformedRecord.
void validate_exchange(const ChatExchange& exchange);

// Compact canonical JSON (sorted keys, UTF-8): {"messages":[...],"purpose":...}.
std::string serialize_exchange(const ChatExchange& exchange);
ChatExchange parse_exchange(std::string_view serialized);

enum class PromptLanguage { zh, en };

const char* to_string(PromptLanguage language);
PromptLanguage prompt_language_from_string(std::string_view name);

struct PromptCatalog {
  PromptLanguage language = PromptLanguage::zh;
  std::string system_task1;
  std::string system_task2;
  std::string test_task1;
  std::string test_task2;

  const std::string& system_prompt(Task task) const;
  const std::string& test_prompt(Task task) const;
};

// Compiled-in catalogs; byte-identical to the files under prompts/<lang>/.
PromptCatalog builtin_catalog(PromptLanguage language);

// Loads a catalog from <dir>/<lang>/{system_task1,system_task2,test_task1,
// test_task2}.txt. Exactly one trailing newline is stripped from each file.
PromptCatalog load_catalog(const std::filesystem::path& prompts_dir, PromptLanguage language);

// [system] + k x [user(image), assistant(label)] + [user(TEST_PROMPT + image)].
// Demonstration order is preserved. Throws MissingLabel when a demo lacks the
// grade (task1) or feedback (task2) it must contribute.
ChatExchange build_icl_exchange(const HandwritingSample& test, const DemonstrationList& demos,
                                Task task, const PromptCatalog& catalog);

enum class LoraFormat { task1, task2_plain, task2_with_grade };

const char* to_string(LoraFormat format);
LoraFormat lora_format_from_string(std::string_view name);

// Single-turn training row: one user message (the image, plus the grade
// sentence for task2_with_grade) and one assistant message (grade letter or
// feedback). Throws MissingLabel / MissingPredictedGrade.
ChatExchange build_lora_row(const HandwritingSample& sample, LoraFormat format,
                            std::optional<Grade> predicted_grade = std::nullopt);

// The user-side query matching lora_task2_with_grade, for inference runs.
ChatExchange build_graded_query(const HandwritingSample& test, Grade predicted_grade);

}  // namespace hanzi
