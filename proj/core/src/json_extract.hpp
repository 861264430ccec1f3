#pragma once

#include <string_view>

#include "json.hpp"
#include "qgpt/error.hpp"

namespace qgpt::detail {

struct ExtractedJson {
  nlohmann::json value;
  ExtractionStage stage;
};

/// Pulls a JSON object out of a model reply: the whole string, else the first
/// fenced code block, else the first balanced-brace substring that parses.
/// Throws ParseFailure(kSubstring) when every stage fails.
ExtractedJson extract_json_object(std::string_view raw);

/// Reads `obj[key]` as a list of non-empty strings, nested lists flattened,
/// blank entries dropped. Throws ParseFailure(kValidation) on type errors.
std::vector<std::string> string_list(const nlohmann::json& obj, const char* key);

}  // namespace qgpt::detail
