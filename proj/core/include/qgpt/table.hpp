#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include "qgpt/tokenizer.hpp"

namespace qgpt {

struct Row {
  std::vector<std::string> cells;

  bool operator==(const Row&) const = default;
};

struct Provenance {
  std::string path;
  std::string format;  // "csv", "tsv", "records"
};

struct Table {
  std::string id;
  std::optional<std::string> title;
  std::optional<std::string> sheet_name;
  std::vector<Row> rows;
  Provenance provenance;
};

/// Equality of identity and content; provenance is ignored.
bool structurally_equal(const Table& a, const Table& b);

struct Selection {
  enum class Kind { kTopKRows, kTokenBudget };
  Kind kind = Kind::kTopKRows;
  std::size_t value = 10;

  static Selection top_k_rows(std::size_t k) { return {Kind::kTopKRows, k}; }
  static Selection token_budget(std::size_t n) { return {Kind::kTokenBudget, n}; }

  bool operator==(const Selection&) const = default;
};

struct PartialTable {
  std::string source_id;
  std::vector<Row> rows;
  Selection selection;
  std::optional<std::string> title;
  std::optional<std::string> sheet_name;
};

/// Rows 1..min(k, |rows|) of `table`. Throws kInvalidArgument when k == 0.
PartialTable select_top_rows(const Table& table, std::size_t k);

/// Longest row prefix whose markdown fits in `budget` tokens under `counter`.
/// Throws kBudgetTooSmall when the first row alone does not fit.
PartialTable truncate_by_tokens(const Table& table, std::size_t budget,
                                bool include_title,
                                const TokenCounter& counter = default_token_counter());

/// First line of a titled serialization: "title", "title / sheet", or
/// "sheet" when only a sheet name exists. Empty when neither exists.
std::string title_line(const std::optional<std::string>& title,
                       const std::optional<std::string>& sheet_name);

/// Pipe-delimited grid: first row doubles as the header row, followed by a
/// "| --- |" separator; ragged rows are padded with empty cells. Cell text is
/// emitted verbatim. Lines are LF-separated with no trailing newline.
std::string to_markdown(const PartialTable& pt, bool include_title);

/// Whole table as a partial table with no truncation applied.
PartialTable as_partial(const Table& table);

}  // namespace qgpt
