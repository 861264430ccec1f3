#include "json_extract.hpp"

#include <optional>
#include <string>

namespace qgpt::detail {

using json = nlohmann::json;

namespace {

std::optional<json> try_object(std::string_view text) {
  auto parsed = json::parse(text.begin(), text.end(), nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) return std::nullopt;
  return parsed;
}

std::optional<std::string_view> first_fenced_block(std::string_view raw) {
  const auto open = raw.find("```");
  if (open == std::string_view::npos) return std::nullopt;
  // Skip an optional language tag on the opening fence line.
  auto body = raw.find('\n', open + 3);
  if (body == std::string_view::npos) return std::nullopt;
  ++body;
  const auto close = raw.find("```", body);
  if (close == std::string_view::npos) return std::nullopt;
  return raw.substr(body, close - body);
}

// Index one past the brace matching raw[start] == '{', honoring JSON strings.
std::optional<std::size_t> matching_brace(std::string_view raw, std::size_t start) {
  int depth = 0;
  bool in_string = false;
  for (std::size_t i = start; i < raw.size(); ++i) {
    const char c = raw[i];
    if (in_string) {
      if (c == '\\') {
        ++i;
      } else if (c == '"') {
        in_string = false;
      }
      continue;
    }
    if (c == '"') {
      in_string = true;
    } else if (c == '{') {
      ++depth;
    } else if (c == '}') {
      if (--depth == 0) return i + 1;
    }
  }
  return std::nullopt;
}

void flatten_into(const json& v, std::vector<std::string>& out, const char* key) {
  if (v.is_string()) {
    auto s = v.get<std::string>();
    if (s.find_first_not_of(" \t\r\n") != std::string::npos) out.push_back(std::move(s));
    return;
  }
  if (v.is_array()) {
    for (const auto& e : v) flatten_into(e, out, key);
    return;
  }
  throw ParseFailure(ExtractionStage::kValidation,
                     std::string("'") + key + "' must contain only strings");
}

}  // namespace

ExtractedJson extract_json_object(std::string_view raw) {
  if (auto v = try_object(raw)) return {std::move(*v), ExtractionStage::kWhole};
  if (auto block = first_fenced_block(raw)) {
    if (auto v = try_object(*block)) return {std::move(*v), ExtractionStage::kFenced};
  }
  for (auto start = raw.find('{'); start != std::string_view::npos;
       start = raw.find('{', start + 1)) {
    auto end = matching_brace(raw, start);
    if (!end) break;
    if (auto v = try_object(raw.substr(start, *end - start))) {
      return {std::move(*v), ExtractionStage::kSubstring};
    }
  }
  throw ParseFailure(ExtractionStage::kSubstring, "no JSON object found in reply");
}

std::vector<std::string> string_list(const json& obj, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) {
    throw ParseFailure(ExtractionStage::kValidation,
                       std::string("missing field '") + key + "'");
  }
  if (!it->is_array()) {
    throw ParseFailure(ExtractionStage::kValidation,
                       std::string("'") + key + "' must be a list");
  }
  std::vector<std::string> out;
  flatten_into(*it, out, key);
  return out;
}

}  // namespace qgpt::detail
