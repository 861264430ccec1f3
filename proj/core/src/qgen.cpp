#include "qgpt/qgen.hpp"

#include <algorithm>
#include <cctype>
#include <unordered_set>

#include "generation_loop.hpp"
#include "json_extract.hpp"
#include "qgpt/error.hpp"

namespace qgpt {

namespace {

struct StrategyName {
  RepresentationStrategy strategy;
  std::string_view name;
};

constexpr StrategyName kStrategyNames[] = {
    {RepresentationStrategy::kPT, "pT"},
    {RepresentationStrategy::kHeaderOnly, "header-only"},
    {RepresentationStrategy::kDescOnly, "desc-only"},
    {RepresentationStrategy::kQGOnly, "QG-only"},
    {RepresentationStrategy::kPTPlusHeader, "pT+header"},
    {RepresentationStrategy::kPTPlusDesc, "pT+desc"},
    {RepresentationStrategy::kQGpT, "QGpT"},
};

bool iequals(std::string_view a, std::string_view b) {
  return a.size() == b.size() &&
         std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
           return std::tolower(static_cast<unsigned char>(x)) ==
                  std::tolower(static_cast<unsigned char>(y));
         });
}

std::vector<std::string> dedupe(std::vector<std::string> items) {
  std::unordered_set<std::string> seen;
  std::vector<std::string> out;
  for (auto& s : items) {
    if (seen.insert(s).second) out.push_back(std::move(s));
  }
  return out;
}

std::string join_lines(const std::vector<std::string>& items) {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += '\n';
    out += items[i];
  }
  return out;
}

}  // namespace

std::string_view to_string(RepresentationStrategy strategy) {
  for (const auto& [s, name] : kStrategyNames) {
    if (s == strategy) return name;
  }
  return "unknown";
}

RepresentationStrategy parse_strategy(std::string_view name) {
  for (const auto& [s, n] : kStrategyNames) {
    if (iequals(n, name)) return s;
  }
  throw Error(ErrorCategory::kInvalidArgument,
              "unknown representation strategy '" + std::string(name) + "'");
}

bool needs_questions(RepresentationStrategy s) {
  return s == RepresentationStrategy::kQGOnly || s == RepresentationStrategy::kQGpT;
}

bool needs_headers(RepresentationStrategy s) {
  return s == RepresentationStrategy::kHeaderOnly ||
         s == RepresentationStrategy::kPTPlusHeader;
}

bool needs_description(RepresentationStrategy s) {
  return s == RepresentationStrategy::kDescOnly || s == RepresentationStrategy::kPTPlusDesc;
}

std::string_view to_string(GenMode mode) {
  return mode == GenMode::kFullPipeline ? "full" : "questions-only";
}

GenMode parse_gen_mode(std::string_view name) {
  if (iequals(name, "full") || iequals(name, "full-pipeline")) return GenMode::kFullPipeline;
  if (iequals(name, "questions-only")) return GenMode::kQuestionsOnly;
  throw Error(ErrorCategory::kInvalidArgument,
              "unknown generation mode '" + std::string(name) +
                  "' (expected full or questions-only)");
}

GenResult parse_json_strict(std::string_view raw, GenMode mode) {
  auto extracted = detail::extract_json_object(raw);
  GenResult result;
  result.raw = std::string(raw);
  result.questions = dedupe(detail::string_list(extracted.value, "questions"));
  if (result.questions.empty()) {
    throw ParseFailure(ExtractionStage::kValidation, "'questions' is empty");
  }
  if (mode == GenMode::kFullPipeline && !extracted.value.contains("headers")) {
    throw ParseFailure(ExtractionStage::kValidation, "'headers' is missing");
  }
  if (extracted.value.contains("headers")) {
    result.headers = detail::string_list(extracted.value, "headers");
  }
  return result;
}

bool validate_count(std::size_t headers_count, std::size_t question_count) {
  if (headers_count == 0) return question_count > 0;
  return question_count >= (headers_count + 1) / 2;
}

GenResult generate(const PartialTable& pt, TextGenProvider& provider, GenMode mode,
                   const RetryPolicy& policy, const GenOptions& options) {
  const auto prompt = build_prompt(pt, mode, options.include_title);
  auto outcome = detail::run_generation<GenResult>(
      prompt, provider, policy.max_attempts, options.cache,
      [mode](std::string_view raw) { return parse_json_strict(raw, mode); },
      [mode](const GenResult& r) {
        // Header count is unknown in questions-only mode.
        return mode == GenMode::kQuestionsOnly
                   ? !r.questions.empty()
                   : validate_count(r.headers.size(), r.questions.size());
      });
  if (!outcome.value) throw ExhaustedRetries(outcome.calls, outcome.raw);
  GenResult result = std::move(*outcome.value);
  result.model_id = provider.model_id();
  result.attempts = outcome.calls;
  result.from_cache = outcome.from_cache;
  result.under_provisioned = !outcome.accepted;
  return result;
}

std::string parse_description(std::string_view raw) {
  auto extracted = detail::extract_json_object(raw);
  auto it = extracted.value.find("description");
  if (it == extracted.value.end() || !it->is_string()) {
    throw ParseFailure(ExtractionStage::kValidation, "'description' must be a string");
  }
  auto text = it->get<std::string>();
  if (text.find_first_not_of(" \t\r\n") == std::string::npos) {
    throw ParseFailure(ExtractionStage::kValidation, "'description' is empty");
  }
  return text;
}

std::string generate_description(const PartialTable& pt, TextGenProvider& provider,
                                 const RetryPolicy& policy, const GenOptions& options) {
  const auto prompt = build_description_prompt(pt, options.include_title);
  auto outcome = detail::run_generation<std::string>(
      prompt, provider, policy.max_attempts, options.cache,
      [](std::string_view raw) { return parse_description(raw); },
      [](const std::string&) { return true; });
  if (!outcome.value) throw ExhaustedRetries(outcome.calls, outcome.raw);
  return std::move(*outcome.value);
}

AugmentedTable augment(const PartialTable& pt, const AugmentInputs& inputs,
                       RepresentationStrategy strategy) {
  AugmentedTable at;
  at.partial = pt;
  at.strategy = strategy;
  const auto mismatch = [&](const char* what) {
    return Error(ErrorCategory::kStrategyMismatch,
                 std::string(to_string(strategy)) + " for '" + pt.source_id + "' needs " + what);
  };

  if (needs_questions(strategy)) {
    if (!inputs.generation || inputs.generation->questions.empty()) {
      throw mismatch("generated questions");
    }
    at.questions = dedupe(inputs.generation->questions);
    at.under_provisioned = inputs.generation->under_provisioned;
    if (!inputs.generation->headers.empty()) at.headers = inputs.generation->headers;
  }
  if (needs_headers(strategy)) {
    if (!inputs.generation || inputs.generation->headers.empty()) {
      throw mismatch("extracted headers");
    }
    at.headers = inputs.generation->headers;
  }
  if (needs_description(strategy)) {
    if (!inputs.description ||
        inputs.description->find_first_not_of(" \t\r\n") == std::string::npos) {
      throw mismatch("a description");
    }
    at.description = inputs.description;
  }
  return at;
}

std::string render_for_embedding(const AugmentedTable& at, bool include_title) {
  using S = RepresentationStrategy;
  const auto with_title = [&](const std::string& body) {
    if (!include_title) return body;
    auto line = title_line(at.partial.title, at.partial.sheet_name);
    return line.empty() ? body : line + "\n" + body;
  };
  const std::vector<std::string> no_headers;
  const auto& headers = at.headers ? *at.headers : no_headers;

  switch (at.strategy) {
    case S::kPT:
      return to_markdown(at.partial, include_title);
    case S::kQGpT:
      return to_markdown(at.partial, include_title) + "\n\n" + join_lines(at.questions);
    case S::kPTPlusHeader:
      return to_markdown(at.partial, include_title) + "\n\n" + join_lines(headers);
    case S::kPTPlusDesc:
      return to_markdown(at.partial, include_title) + "\n\n" + at.description.value_or("");
    case S::kQGOnly:
      return with_title(join_lines(at.questions));
    case S::kHeaderOnly:
      return with_title(join_lines(headers));
    case S::kDescOnly:
      return with_title(at.description.value_or(""));
  }
  return {};
}

}  // namespace qgpt
