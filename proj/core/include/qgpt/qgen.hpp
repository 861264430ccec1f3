#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "qgpt/cache.hpp"
#include "qgpt/provider.hpp"
#include "qgpt/table.hpp"

namespace qgpt {

enum class RepresentationStrategy {
  kPT,
  kHeaderOnly,
  kDescOnly,
  kQGOnly,
  kPTPlusHeader,
  kPTPlusDesc,
  kQGpT,
};

/// Names: "pT", "header-only", "desc-only", "QG-only", "pT+header",
/// "pT+desc", "QGpT". Parsing is case-insensitive.
std::string_view to_string(RepresentationStrategy strategy);
RepresentationStrategy parse_strategy(std::string_view name);

bool needs_questions(RepresentationStrategy s);
bool needs_headers(RepresentationStrategy s);
bool needs_description(RepresentationStrategy s);

enum class GenMode {
  kFullPipeline,   // extract headers + generate questions
  kQuestionsOnly,  // generate questions only
};

std::string_view to_string(GenMode mode);
GenMode parse_gen_mode(std::string_view name);

// ---------------------------------------------------------------------------
// Prompts

/// The header-extraction + question prompt (full pipeline) or the
/// question-only prompt, with the table's markdown substituted at the input
/// slot. `include_title` decides whether the title line is serialized.
std::string build_prompt(const PartialTable& pt, GenMode mode, bool include_title);

/// Asks for a short natural-language summary as {"description": "..."}.
std::string build_description_prompt(const PartialTable& pt, bool include_title);

// ---------------------------------------------------------------------------
// Generation

struct RetryPolicy {
  int max_attempts = 3;
};

struct GenResult {
  std::vector<std::string> headers;
  std::vector<std::string> questions;
  std::string raw;
  std::string model_id;
  int attempts = 0;              // provider calls made; 0 when served from cache
  bool from_cache = false;
  bool under_provisioned = false;  // kept although the count rule never held
};

/// Extracts and validates a {"headers", "questions"} payload. The "headers"
/// key is required in full-pipeline mode (it may be empty) and optional
/// otherwise. Questions are
/// de-duplicated preserving order. Throws ParseFailure.
GenResult parse_json_strict(std::string_view raw, GenMode mode = GenMode::kFullPipeline);

/// |questions| >= ceil(headers_count / 2); headers_count == 0 accepts any
/// non-empty list.
bool validate_count(std::size_t headers_count, std::size_t question_count);

struct GenOptions {
  bool include_title = false;
  GenerationCache* cache = nullptr;
};

/// Prompts `provider`, retrying (same prompt) on unparsable replies and on
/// count-rule violations up to policy.max_attempts provider calls. When only
/// the count rule failed, the last parsed reply is returned flagged
/// under_provisioned. Throws ExhaustedRetries when no reply ever parsed.
GenResult generate(const PartialTable& pt, TextGenProvider& provider, GenMode mode,
                   const RetryPolicy& policy, const GenOptions& options = {});

/// Extracts a non-empty {"description": "..."} payload. Throws ParseFailure.
std::string parse_description(std::string_view raw);

std::string generate_description(const PartialTable& pt, TextGenProvider& provider,
                                 const RetryPolicy& policy,
                                 const GenOptions& options = {});

// ---------------------------------------------------------------------------
// Augmentation

struct AugmentedTable {
  PartialTable partial;
  std::vector<std::string> questions;
  std::optional<std::vector<std::string>> headers;
  std::optional<std::string> description;
  RepresentationStrategy strategy = RepresentationStrategy::kPT;
  bool under_provisioned = false;
};

struct AugmentInputs {
  std::optional<GenResult> generation;
  std::optional<std::string> description;
};

/// Attaches the parts `strategy` uses. Throws kStrategyMismatch when a
/// required part is missing or empty.
AugmentedTable augment(const PartialTable& pt, const AugmentInputs& inputs,
                       RepresentationStrategy strategy);

/// Text handed to the embedder.
///   pT          markdown
///   QGpT        markdown + "\n\n" + questions (one per line)
///   pT+header   markdown + "\n\n" + headers (one per line)
///   pT+desc     markdown + "\n\n" + description
///   QG-only     [title line + "\n"] + questions (one per line)
///   header-only [title line + "\n"] + headers (one per line)
///   desc-only   [title line + "\n"] + description
std::string render_for_embedding(const AugmentedTable& at, bool include_title);

}  // namespace qgpt
