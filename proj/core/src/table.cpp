#include "qgpt/table.hpp"

#include <algorithm>

#include "qgpt/error.hpp"

namespace qgpt {

bool structurally_equal(const Table& a, const Table& b) {
  return a.id == b.id && a.title == b.title && a.sheet_name == b.sheet_name &&
         a.rows == b.rows;
}

namespace {

PartialTable prefix_of(const Table& table, std::size_t n, Selection selection) {
  PartialTable pt;
  pt.source_id = table.id;
  pt.rows.assign(table.rows.begin(),
                 table.rows.begin() + static_cast<std::ptrdiff_t>(
                                          std::min(n, table.rows.size())));
  pt.selection = selection;
  pt.title = table.title;
  pt.sheet_name = table.sheet_name;
  return pt;
}

void append_row(std::string& out, const std::vector<std::string>& cells,
                std::size_t width) {
  out += '|';
  for (std::size_t c = 0; c < width; ++c) {
    out += ' ';
    if (c < cells.size()) out += cells[c];
    out += " |";
  }
}

}  // namespace

PartialTable select_top_rows(const Table& table, std::size_t k) {
  if (k == 0) {
    throw Error(ErrorCategory::kInvalidArgument, "top-k row count must be >= 1");
  }
  return prefix_of(table, k, Selection::top_k_rows(k));
}

PartialTable truncate_by_tokens(const Table& table, std::size_t budget,
                                bool include_title, const TokenCounter& counter) {
  const auto selection = Selection::token_budget(budget);
  auto fits = [&](std::size_t n) {
    return counter.count(to_markdown(prefix_of(table, n, selection),
                                     include_title)) <= budget;
  };
  if (table.rows.empty() || !fits(1)) {
    throw Error(ErrorCategory::kBudgetTooSmall,
                "table '" + table.id + "': first row exceeds budget of " +
                    std::to_string(budget) + " tokens");
  }
  // Token counts of row prefixes are non-decreasing (padding only adds
  // cells), so the largest fitting prefix can be found by bisection.
  std::size_t lo = 1;
  std::size_t hi = table.rows.size();
  while (lo < hi) {
    const std::size_t mid = lo + (hi - lo + 1) / 2;
    if (fits(mid)) {
      lo = mid;
    } else {
      hi = mid - 1;
    }
  }
  return prefix_of(table, lo, selection);
}

std::string title_line(const std::optional<std::string>& title,
                       const std::optional<std::string>& sheet_name) {
  if (title && sheet_name) return *title + " / " + *sheet_name;
  if (title) return *title;
  if (sheet_name) return *sheet_name;
  return {};
}

std::string to_markdown(const PartialTable& pt, bool include_title) {
  std::string out;
  if (include_title) {
    auto line = title_line(pt.title, pt.sheet_name);
    if (!line.empty()) {
      out += line;
      if (!pt.rows.empty()) out += '\n';
    }
  }
  if (pt.rows.empty()) return out;

  std::size_t width = 0;
  for (const auto& row : pt.rows) width = std::max(width, row.cells.size());

  append_row(out, pt.rows.front().cells, width);
  out += "\n|";
  for (std::size_t c = 0; c < width; ++c) out += " --- |";
  for (std::size_t r = 1; r < pt.rows.size(); ++r) {
    out += '\n';
    append_row(out, pt.rows[r].cells, width);
  }
  return out;
}

PartialTable as_partial(const Table& table) {
  return prefix_of(table, table.rows.size(),
                   Selection::top_k_rows(std::max<std::size_t>(1, table.rows.size())));
}

}  // namespace qgpt
