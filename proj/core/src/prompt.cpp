#include "hanzi/prompt.hpp"

#include <nlohmann/json.hpp>

#include "hanzi/error.hpp"
#include "hanzi/util.hpp"

namespace hanzi {

using json = nlohmann::json;

#include "prompt_texts.inc"

const char* to_string(Task task) { return task == Task::task1 ? "task1" : "task2"; }

Task task_from_string(std::string_view name) {
  if (name == "task1") return Task::task1;
  if (name == "task2") return Task::task2;
  raise(ErrorCode::config_error, "unknown task \"" + std::string(name) + "\"");
}

const char* to_string(Role role) {
  switch (role) {
    case Role::system: return "system";
    case Role::user: return "user";
    case Role::assistant: return "assistant";
  }
  return "user";
}

Role role_from_string(std::string_view name) {
  if (name == "system") return Role::system;
  if (name == "user") return Role::user;
  if (name == "assistant") return Role::assistant;
  raise(ErrorCode::malformed_record, "unknown role \"" + std::string(name) + "\"");
}

const char* to_string(ExchangePurpose purpose) {
  switch (purpose) {
    case ExchangePurpose::icl_task1: return "icl_task1";
    case ExchangePurpose::icl_task2: return "icl_task2";
    case ExchangePurpose::lora_task1: return "lora_task1";
    case ExchangePurpose::lora_task2_plain: return "lora_task2_plain";
    case ExchangePurpose::lora_task2_with_grade: return "lora_task2_with_grade";
    case ExchangePurpose::query_task2_with_grade: return "query_task2_with_grade";
  }
  return "icl_task1";
}

ExchangePurpose exchange_purpose_from_string(std::string_view name) {
  if (name == "icl_task1") return ExchangePurpose::icl_task1;
  if (name == "icl_task2") return ExchangePurpose::icl_task2;
  if (name == "lora_task1") return ExchangePurpose::lora_task1;
  if (name == "lora_task2_plain") return ExchangePurpose::lora_task2_plain;
  if (name == "lora_task2_with_grade") return ExchangePurpose::lora_task2_with_grade;
  if (name == "query_task2_with_grade") return ExchangePurpose::query_task2_with_grade;
  raise(ErrorCode::malformed_record, "unknown exchange purpose \"" + std::string(name) + "\"");
}

namespace {

size_t count_placeholders(std::string_view text) {
  size_t count = 0;
  size_t pos = 0;
  while ((pos = text.find(kImagePlaceholder, pos)) != std::string_view::npos) {
    ++count;
    pos += kImagePlaceholder.size();
  }
  return count;
}

}  // namespace

size_t ChatExchange::placeholder_count() const {
  size_t count = 0;
  for (const auto& message : messages) count += count_placeholders(message.text);
  return count;
}

size_t ChatExchange::image_count() const {
  size_t count = 0;
  for (const auto& message : messages) count += message.images.size();
  return count;
}

void validate_exchange(const ChatExchange& exchange) {
  auto fail = [](const std::string& what) { raise(ErrorCode::malformed_record, what); };

  for (size_t i = 0; i < exchange.messages.size(); ++i) {
    const auto& message = exchange.messages[i];
    if (count_placeholders(message.text) != message.images.size()) {
      fail("message " + std::to_string(i) + ": placeholder/image count mismatch");
    }
    if (message.role == Role::system && !message.images.empty()) {
      fail("message " + std::to_string(i) + ": system messages carry no images");
    }
  }

  const auto& messages = exchange.messages;
  switch (exchange.purpose) {
    case ExchangePurpose::icl_task1:
    case ExchangePurpose::icl_task2: {
      // [system] + k x [user, assistant] + [user]
      if (messages.size() < 2 || messages.size() % 2 != 0) {
        fail("icl exchange must hold 1 + 2k + 1 messages");
      }
      if (messages.front().role != Role::system) fail("icl exchange must start with system");
      for (size_t i = 1; i + 1 < messages.size(); ++i) {
        Role expected = (i % 2 == 1) ? Role::user : Role::assistant;
        if (messages[i].role != expected) fail("icl demonstration roles must alternate");
      }
      if (messages.back().role != Role::user) fail("icl exchange must end with a user query");
      break;
    }
    case ExchangePurpose::lora_task1:
    case ExchangePurpose::lora_task2_plain:
    case ExchangePurpose::lora_task2_with_grade: {
      if (messages.size() != 2 || messages[0].role != Role::user ||
          messages[1].role != Role::assistant) {
        fail("lora exchange must be exactly user + assistant");
      }
      break;
    }
    case ExchangePurpose::query_task2_with_grade: {
      if (messages.size() != 1 || messages[0].role != Role::user) {
        fail("graded query must be a single user message");
      }
      break;
    }
  }
}

std::string serialize_exchange(const ChatExchange& exchange) {
  json messages = json::array();
  for (const auto& message : exchange.messages) {
    json m;
    m["content"] = message.text;
    m["role"] = to_string(message.role);
    if (!message.images.empty()) m["images"] = message.images;
    messages.push_back(std::move(m));
  }
  json root;
  root["messages"] = std::move(messages);
  root["purpose"] = to_string(exchange.purpose);
  return root.dump();
}

ChatExchange parse_exchange(std::string_view serialized) {
  json root = json::parse(serialized, nullptr, false);
  if (root.is_discarded() || !root.is_object() || !root.contains("messages") ||
      !root.contains("purpose") || !root["messages"].is_array()) {
    raise(ErrorCode::malformed_record, "invalid exchange JSON");
  }
  ChatExchange exchange;
  exchange.purpose = exchange_purpose_from_string(root["purpose"].get<std::string>());
  for (const auto& m : root["messages"]) {
    if (!m.is_object() || !m.contains("role") || !m.contains("content") ||
        !m["content"].is_string()) {
      raise(ErrorCode::malformed_record, "invalid exchange message");
    }
    ChatMessage message;
    message.role = role_from_string(m["role"].get<std::string>());
    message.text = m["content"].get<std::string>();
    if (m.contains("images")) message.images = m["images"].get<std::vector<std::string>>();
    exchange.messages.push_back(std::move(message));
  }
  validate_exchange(exchange);
  return exchange;
}

const char* to_string(PromptLanguage language) { return language == PromptLanguage::zh ? "zh" : "en"; }

PromptLanguage prompt_language_from_string(std::string_view name) {
  if (name == "zh") return PromptLanguage::zh;
  if (name == "en") return PromptLanguage::en;
  raise(ErrorCode::config_error, "unknown prompt language \"" + std::string(name) + "\"");
}

const std::string& PromptCatalog::system_prompt(Task task) const {
  return task == Task::task1 ? system_task1 : system_task2;
}

const std::string& PromptCatalog::test_prompt(Task task) const {
  return task == Task::task1 ? test_task1 : test_task2;
}

PromptCatalog builtin_catalog(PromptLanguage language) {
  PromptCatalog catalog;
  catalog.language = language;
  if (language == PromptLanguage::zh) {
    catalog.system_task1 = k_zh_system_task1;
    catalog.system_task2 = k_zh_system_task2;
    catalog.test_task1 = k_zh_test_task1;
    catalog.test_task2 = k_zh_test_task2;
  } else {
    catalog.system_task1 = k_en_system_task1;
    catalog.system_task2 = k_en_system_task2;
    catalog.test_task1 = k_en_test_task1;
    catalog.test_task2 = k_en_test_task2;
  }
  return catalog;
}

PromptCatalog load_catalog(const std::filesystem::path& prompts_dir, PromptLanguage language) {
  auto read_prompt = [&](const char* name) {
    auto path = prompts_dir / to_string(language) / (std::string(name) + ".txt");
    std::string text = read_file_text(path);
    if (!text.empty() && text.back() == '\n') text.pop_back();
    return text;
  };
  PromptCatalog catalog;
  catalog.language = language;
  catalog.system_task1 = read_prompt("system_task1");
  catalog.system_task2 = read_prompt("system_task2");
  catalog.test_task1 = read_prompt("test_task1");
  catalog.test_task2 = read_prompt("test_task2");
  return catalog;
}

namespace {

// What a demonstration contributes as the assistant turn.
std::string demo_label(const Demonstration& demo, Task task) {
  if (task == Task::task1) {
    if (!demo.grade) {
      raise(ErrorCode::missing_label, "demonstration \"" + demo.sample_id + "\" has no grade");
    }
    return grade_letter(*demo.grade);
  }
  if (!demo.feedback || demo.feedback->empty()) {
    raise(ErrorCode::missing_label, "demonstration \"" + demo.sample_id + "\" has no feedback");
  }
  return *demo.feedback;
}

constexpr const char* kGradedQueryPrefix =
    " The evaluation for the above handwritten Chinese characters is ";
constexpr const char* kGradedQuerySuffix = ", generate a comment.";

}  // namespace

ChatExchange build_icl_exchange(const HandwritingSample& test, const DemonstrationList& demos,
                                Task task, const PromptCatalog& catalog) {
  ChatExchange exchange;
  exchange.purpose = task == Task::task1 ? ExchangePurpose::icl_task1 : ExchangePurpose::icl_task2;
  exchange.test_id = test.id;

  ChatMessage system;
  system.role = Role::system;
  system.text = catalog.system_prompt(task);
  exchange.messages.push_back(std::move(system));

  for (const auto& demo : demos.demos) {
    ChatMessage user;
    user.role = Role::user;
    user.text = kImagePlaceholder;
    user.images.push_back(demo.image);
    exchange.messages.push_back(std::move(user));

    ChatMessage assistant;
    assistant.role = Role::assistant;
    assistant.text = demo_label(demo, task);
    exchange.messages.push_back(std::move(assistant));
  }

  ChatMessage query;
  query.role = Role::user;
  query.text = catalog.test_prompt(task) + "\n" + std::string(kImagePlaceholder);
  query.images.push_back(test.image);
  exchange.messages.push_back(std::move(query));

  validate_exchange(exchange);
  return exchange;
}

const char* to_string(LoraFormat format) {
  switch (format) {
    case LoraFormat::task1: return "task1";
    case LoraFormat::task2_plain: return "task2_plain";
    case LoraFormat::task2_with_grade: return "task2_with_grade";
  }
  return "task1";
}

LoraFormat lora_format_from_string(std::string_view name) {
  if (name == "task1") return LoraFormat::task1;
  if (name == "task2_plain" || name == "task2-plain") return LoraFormat::task2_plain;
  if (name == "task2_with_grade" || name == "task2-with-grade") {
    return LoraFormat::task2_with_grade;
  }
  raise(ErrorCode::config_error, "unknown LoRA format \"" + std::string(name) + "\"");
}

ChatExchange build_lora_row(const HandwritingSample& sample, LoraFormat format,
                            std::optional<Grade> predicted_grade) {
  ChatExchange exchange;
  exchange.test_id = sample.id;

  ChatMessage user;
  user.role = Role::user;
  user.text = kImagePlaceholder;
  user.images.push_back(sample.image);

  ChatMessage assistant;
  assistant.role = Role::assistant;

  switch (format) {
    case LoraFormat::task1:
      exchange.purpose = ExchangePurpose::lora_task1;
      if (!sample.grade) {
        raise(ErrorCode::missing_label, "sample \"" + sample.id + "\" has no grade");
      }
      assistant.text = grade_letter(*sample.grade);
      break;
    case LoraFormat::task2_plain:
      exchange.purpose = ExchangePurpose::lora_task2_plain;
      if (!sample.feedback || sample.feedback->empty()) {
        raise(ErrorCode::missing_label, "sample \"" + sample.id + "\" has no feedback");
      }
      assistant.text = *sample.feedback;
      break;
    case LoraFormat::task2_with_grade:
      exchange.purpose = ExchangePurpose::lora_task2_with_grade;
      if (!sample.feedback || sample.feedback->empty()) {
        raise(ErrorCode::missing_label, "sample \"" + sample.id + "\" has no feedback");
      }
      if (!predicted_grade) {
        raise(ErrorCode::missing_predicted_grade, "sample \"" + sample.id + "\"");
      }
      user.text += kGradedQueryPrefix + grade_letter(*predicted_grade) + kGradedQuerySuffix;
      assistant.text = *sample.feedback;
      break;
  }

  exchange.messages.push_back(std::move(user));
  exchange.messages.push_back(std::move(assistant));
  validate_exchange(exchange);
  return exchange;
}

ChatExchange build_graded_query(const HandwritingSample& test, Grade predicted_grade) {
  ChatExchange exchange;
  exchange.purpose = ExchangePurpose::query_task2_with_grade;
  exchange.test_id = test.id;

  ChatMessage user;
  user.role = Role::user;
  user.text = std::string(kImagePlaceholder) + kGradedQueryPrefix +
              grade_letter(predicted_grade) + kGradedQuerySuffix;
  user.images.push_back(test.image);
  exchange.messages.push_back(std::move(user));

  validate_exchange(exchange);
  return exchange;
}

}  // namespace hanzi
