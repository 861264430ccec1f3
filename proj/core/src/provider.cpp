#include "qgpt/provider.hpp"

#include <algorithm>
#include <sstream>
#include <vector>

#include "http_json.hpp"
#include "json.hpp"
#include "qgpt/error.hpp"

namespace qgpt {

using json = nlohmann::json;

HttpChatProvider::HttpChatProvider(HttpChatConfig config) : config_(std::move(config)) {
  if (config_.model.empty()) {
    throw Error(ErrorCategory::kConfigError, "chat provider needs a model name");
  }
}

std::string HttpChatProvider::complete(std::string_view prompt) {
  json body{{"model", config_.model},
            {"messages", json::array({{{"role", "user"}, {"content", std::string(prompt)}}})},
            {"temperature", config_.temperature}};
  auto reply = detail::post_json(config_.base_url, "/chat/completions", body,
                                 config_.api_key, config_.timeout_seconds);
  try {
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const json::exception&) {
    throw Error(ErrorCategory::kProviderError,
                "chat response lacks choices[0].message.content");
  }
}

std::string ScriptedProvider::complete(std::string_view prompt) {
  std::lock_guard lock(mu_);
  const int index = calls_.fetch_add(1);
  return script_(prompt, index);
}

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_lines(std::string_view text) {
  std::vector<std::string> lines;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

std::vector<std::string> grid_cells(const std::string& line) {
  std::vector<std::string> cells;
  std::string_view rest(line);
  if (!rest.empty() && rest.front() == '|') rest.remove_prefix(1);
  if (!rest.empty() && rest.back() == '|') rest.remove_suffix(1);
  std::size_t start = 0;
  while (true) {
    const auto bar = rest.find('|', start);
    cells.push_back(trim(rest.substr(start, bar == std::string_view::npos
                                                ? std::string_view::npos
                                                : bar - start)));
    if (bar == std::string_view::npos) break;
    start = bar + 1;
  }
  return cells;
}

struct ParsedTable {
  std::string title;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

ParsedTable table_after(std::string_view prompt, std::string_view marker) {
  ParsedTable t;
  const auto at = prompt.find(marker);
  if (at == std::string_view::npos) return t;
  bool seen_grid = false;
  for (const auto& line : split_lines(prompt.substr(at + marker.size()))) {
    if (line.empty()) continue;
    if (line.front() != '|') {
      if (!seen_grid && t.title.empty()) t.title = trim(line);
      continue;
    }
    auto cells = grid_cells(line);
    if (!seen_grid) {
      t.header = std::move(cells);
      seen_grid = true;
    } else if (!std::all_of(cells.begin(), cells.end(),
                            [](const std::string& c) { return c == "---"; })) {
      t.rows.push_back(std::move(cells));
    }
  }
  return t;
}

bool meaningful_header(const std::string& h) {
  return !h.empty() && h != "nan" && h.rfind("Unnamed:", 0) != 0;
}

json mock_questions(const ParsedTable& t, bool with_headers) {
  std::vector<std::string> headers;
  std::vector<std::size_t> columns;
  for (std::size_t c = 0; c < t.header.size(); ++c) {
    if (meaningful_header(t.header[c])) {
      headers.push_back(t.header[c]);
      columns.push_back(c);
    }
  }
  const std::string prefix = t.title.empty() ? "" : "In " + t.title + ", ";
  std::vector<std::string> questions;
  const std::size_t n = std::max<std::size_t>(1, (headers.size() + 1) / 2);
  for (std::size_t i = 0; i < n; ++i) {
    if (headers.empty()) {
      questions.push_back(prefix + "what does this table list?");
      continue;
    }
    const auto& asked = headers[(2 * i) % headers.size()];
    if (headers.size() < 2) {
      questions.push_back(prefix + "what are the values of '" + asked + "'?");
      continue;
    }
    const std::size_t key_pos = (2 * i + 1) % headers.size();
    std::string value;
    if (!t.rows.empty() && columns[key_pos] < t.rows.front().size()) {
      value = t.rows.front()[columns[key_pos]];
    }
    std::string q = prefix + "what is the '" + asked + "' for '" + headers[key_pos] + "'";
    if (!value.empty()) q += " " + value;
    questions.push_back(q + "?");
  }
  json out;
  if (with_headers) out["headers"] = headers;
  out["questions"] = questions;
  return out;
}

json mock_description(const ParsedTable& t) {
  std::string d = "Table " + (t.title.empty() ? std::string("(untitled)") : t.title) +
                  " with " + std::to_string(t.header.size()) + " columns:";
  for (std::size_t i = 0; i < t.header.size(); ++i) {
    d += (i ? ", " : " ") + t.header[i];
  }
  d += ".";
  if (!t.rows.empty()) {
    d += " Example row:";
    for (std::size_t i = 0; i < t.rows.front().size(); ++i) {
      d += (i ? ", " : " ") + t.rows.front()[i];
    }
    d += ".";
  }
  return json{{"description", d}};
}

json mock_decomposition(std::string_view prompt) {
  static constexpr std::string_view kMarker = "Question:\n";
  const auto at = prompt.find(kMarker);
  const std::string question =
      trim(at == std::string_view::npos ? prompt : prompt.substr(at + kMarker.size()));
  std::vector<std::string> parts;
  std::string_view rest(question);
  static constexpr std::string_view kAnd = " and ";
  while (parts.size() < 2) {
    const auto pos = rest.find(kAnd);
    if (pos == std::string_view::npos) break;
    parts.push_back(trim(rest.substr(0, pos)));
    rest.remove_prefix(pos + kAnd.size());
  }
  parts.push_back(trim(rest));
  parts.erase(std::remove(parts.begin(), parts.end(), std::string()), parts.end());
  if (parts.empty()) parts.push_back(question);
  return json{{"sub_queries", parts}};
}

}  // namespace

std::string TemplateMockProvider::complete(std::string_view prompt) {
  calls_.fetch_add(1);
  static constexpr std::string_view kTable = "Input Table:\n";
  if (prompt.find("\"sub_queries\"") != std::string_view::npos) {
    return mock_decomposition(prompt).dump();
  }
  const auto table = table_after(prompt, kTable);
  if (prompt.find("\"description\"") != std::string_view::npos) {
    return mock_description(table).dump();
  }
  const bool full = prompt.find("Extract Header Names") != std::string_view::npos;
  return mock_questions(table, full).dump();
}

}  // namespace qgpt
