#include "qgpt/corpus.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "io_util.hpp"
#include "json.hpp"
#include "qgpt/error.hpp"
#include "qgpt/hash.hpp"

namespace qgpt {

namespace fs = std::filesystem;
using json = nlohmann::json;

CorpusFormat parse_corpus_format(std::string_view name) {
  if (name == "csv-dir") return CorpusFormat::kCsvDir;
  if (name == "tsv-dir") return CorpusFormat::kTsvDir;
  if (name == "records") return CorpusFormat::kRecords;
  throw Error(ErrorCategory::kInvalidArgument,
              "unknown corpus format '" + std::string(name) +
                  "' (expected csv-dir, tsv-dir or records)");
}

std::vector<Row> parse_delimited(std::string_view text, char delimiter,
                                 const std::string& source_name) {
  std::vector<Row> rows;
  Row row;
  std::string cell;
  bool in_quotes = false;
  bool field_started = false;  // current line has produced any content
  std::size_t line = 1;
  std::size_t quote_line = 0;

  auto end_cell = [&] {
    row.cells.push_back(std::move(cell));
    cell.clear();
  };
  auto end_row = [&] {
    end_cell();
    // A line with a single empty unquoted cell is blank.
    if (field_started) rows.push_back(std::move(row));
    row = Row{};
    field_started = false;
  };

  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < text.size() && text[i + 1] == '"') {
          cell += '"';
          ++i;
        } else {
          in_quotes = false;
        }
      } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
        // CRLF inside a quoted cell collapses to LF.
      } else {
        if (c == '\n') ++line;
        cell += c;
      }
      continue;
    }
    if (c == '"' && cell.empty()) {
      in_quotes = true;
      field_started = true;
      quote_line = line;
    } else if (c == delimiter) {
      field_started = true;
      end_cell();
    } else if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') {
      // handled by the following '\n'
    } else if (c == '\n') {
      end_row();
      ++line;
    } else {
      field_started = true;
      cell += c;
    }
  }
  if (in_quotes) {
    throw ParseError(source_name, quote_line, "unterminated quoted field");
  }
  if (field_started || !cell.empty()) end_row();
  return rows;
}

namespace {

std::string scalar_to_cell(const json& v) {
  if (v.is_string()) return v.get<std::string>();
  if (v.is_null()) return {};
  return v.dump();
}

std::optional<std::string> optional_string(const json& obj, const char* key,
                                           const std::string& file,
                                           std::size_t line) {
  auto it = obj.find(key);
  if (it == obj.end() || it->is_null()) return std::nullopt;
  if (!it->is_string()) {
    throw ParseError(file, line, std::string("field '") + key + "' must be a string");
  }
  return it->get<std::string>();
}

std::string normalize_newlines(std::string s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\r' && i + 1 < s.size() && s[i + 1] == '\n') continue;
    out += s[i];
  }
  return out;
}

Table parse_record(const std::string& text, const std::string& file,
                   std::size_t line) {
  json obj;
  try {
    obj = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(file, line, std::string("invalid JSON: ") + e.what());
  }
  if (!obj.is_object()) throw ParseError(file, line, "record is not an object");
  auto id = obj.find("id");
  if (id == obj.end() || !id->is_string() || id->get<std::string>().empty()) {
    throw ParseError(file, line, "record needs a non-empty string 'id'");
  }
  Table table;
  table.id = id->get<std::string>();
  table.title = optional_string(obj, "title", file, line);
  table.sheet_name = optional_string(obj, "sheet", file, line);
  table.provenance = {file, "records"};
  auto rows = obj.find("rows");
  if (rows == obj.end() || !rows->is_array()) {
    throw ParseError(file, line, "record needs an array 'rows'");
  }
  for (const auto& r : *rows) {
    if (!r.is_array()) throw ParseError(file, line, "each row must be an array");
    if (r.empty()) continue;
    Row row;
    for (const auto& cell : r) {
      if (cell.is_array() || cell.is_object()) {
        throw ParseError(file, line, "cells must be scalars");
      }
      row.cells.push_back(normalize_newlines(scalar_to_cell(cell)));
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

template <typename Fn>
void for_each_line(const std::string& text, Fn&& fn) {
  std::size_t line = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    ++line;
    std::string_view piece(text.data() + start, end - start);
    if (!piece.empty() && piece.back() == '\r') piece.remove_suffix(1);
    if (piece.find_first_not_of(" \t") != std::string_view::npos) {
      fn(std::string(piece), line);
    }
    if (end == text.size()) break;
    start = end + 1;
  }
}

void admit(Table table, IngestResult& result,
           std::unordered_set<std::string>& seen) {
  if (!seen.insert(table.id).second) {
    throw Error(ErrorCategory::kDuplicateId, "duplicate table id '" + table.id + "'");
  }
  if (table.rows.empty()) {
    spdlog::warn("skipping empty table '{}' from {}", table.id,
                 table.provenance.path);
    ++result.report.skipped;
    result.report.skipped_ids.push_back(table.id);
    return;
  }
  result.tables.push_back(std::move(table));
  ++result.report.tables;
}

}  // namespace

IngestResult ingest_corpus(const fs::path& path, CorpusFormat format) {
  IngestResult result;
  std::unordered_set<std::string> seen;

  if (format == CorpusFormat::kRecords) {
    const auto text = detail::read_file(path);
    result.report.files = 1;
    for_each_line(text, [&](const std::string& line_text, std::size_t line) {
      admit(parse_record(line_text, path.string(), line), result, seen);
    });
    return result;
  }

  const bool csv = format == CorpusFormat::kCsvDir;
  const std::string ext = csv ? ".csv" : ".tsv";
  std::error_code ec;
  if (!fs::is_directory(path, ec)) {
    throw Error(ErrorCategory::kIoError, path.string() + " is not a directory");
  }
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(path)) {
    if (entry.is_regular_file() && entry.path().extension() == ext) {
      files.push_back(entry.path());
    }
  }
  std::sort(files.begin(), files.end());
  for (const auto& file : files) {
    Table table;
    table.id = file.stem().string();
    table.title = table.id;
    table.provenance = {file.string(), csv ? "csv" : "tsv"};
    table.rows = parse_delimited(detail::read_file(file), csv ? ',' : '\t',
                                 file.string());
    ++result.report.files;
    admit(std::move(table), result, seen);
  }
  return result;
}

std::vector<QueryRecord> ingest_queries(const fs::path& path) {
  const auto text = detail::read_file(path);
  const auto file = path.string();
  std::vector<QueryRecord> queries;
  std::unordered_set<std::string> seen;
  for_each_line(text, [&](const std::string& line_text, std::size_t line) {
    json obj;
    try {
      obj = json::parse(line_text);
    } catch (const json::parse_error& e) {
      throw ParseError(file, line, std::string("invalid JSON: ") + e.what());
    }
    QueryRecord q;
    if (!obj.is_object() || !obj.contains("qid") || !obj["qid"].is_string() ||
        !obj.contains("question") || !obj["question"].is_string() ||
        !obj.contains("gold_ids") || !obj["gold_ids"].is_array()) {
      throw ParseError(file, line,
                       "query needs string 'qid', string 'question' and array 'gold_ids'");
    }
    q.qid = obj["qid"].get<std::string>();
    q.question = obj["question"].get<std::string>();
    for (const auto& g : obj["gold_ids"]) {
      if (!g.is_string()) throw ParseError(file, line, "gold ids must be strings");
      auto id = g.get<std::string>();
      if (std::find(q.gold_ids.begin(), q.gold_ids.end(), id) == q.gold_ids.end()) {
        q.gold_ids.push_back(std::move(id));
      }
    }
    if (q.gold_ids.empty()) throw ParseError(file, line, "gold_ids is empty");
    if (!seen.insert(q.qid).second) {
      throw Error(ErrorCategory::kDuplicateId, "duplicate query id '" + q.qid + "'");
    }
    queries.push_back(std::move(q));
  });
  return queries;
}

namespace {

std::string normalize_header(std::string_view cell) {
  std::string out;
  bool pending_space = false;
  for (const char ch : cell) {
    const auto c = static_cast<unsigned char>(ch);
    if (c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v') {
      pending_space = !out.empty();
      continue;
    }
    if (pending_space) out += ' ';
    pending_space = false;
    out += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch;
  }
  return out;
}

}  // namespace

std::string SchemaSignature::hash() const {
  std::string joined = std::to_string(column_count);
  for (const auto& h : headers) {
    joined += '\x1f';
    joined += h;
  }
  return sha256_hex(joined).substr(0, 16);
}

SchemaSignature schema_signature(const Table& table) {
  SchemaSignature sig;
  if (!table.rows.empty()) {
    for (const auto& cell : table.rows.front().cells) {
      sig.headers.push_back(normalize_header(cell));
    }
  }
  sig.column_count = sig.headers.size();
  return sig;
}

std::string group_name(const Table& table) {
  return table.title.value_or(table.id);
}

bool IdRemap::is_identity() const {
  return std::all_of(by_original.begin(), by_original.end(),
                     [](const auto& kv) { return kv.first == kv.second; });
}

DedupResult deduplicate(const std::vector<Table>& tables,
                        const std::vector<QueryRecord>& queries) {
  DedupResult out;
  // name -> list of (signature, new id) in first-seen order
  std::unordered_map<std::string, std::vector<std::pair<SchemaSignature, std::string>>>
      variants;

  for (const auto& table : tables) {
    const auto name = group_name(table);
    auto sig = schema_signature(table);
    auto& seen = variants[name];
    auto it = std::find_if(seen.begin(), seen.end(),
                           [&](const auto& v) { return v.first == sig; });
    std::string new_id;
    if (it != seen.end()) {
      new_id = it->second;
    } else {
      new_id = name + "__" + std::to_string(seen.size() + 1);
      out.remap.entries.push_back({name, sig.hash(), new_id});
      Table rep = table;
      rep.id = new_id;
      rep.title = name;
      out.tables.push_back(std::move(rep));
      seen.emplace_back(std::move(sig), new_id);
    }
    if (!out.remap.by_original.emplace(table.id, new_id).second) {
      throw Error(ErrorCategory::kDuplicateId, "duplicate table id '" + table.id + "'");
    }
  }

  out.queries.reserve(queries.size());
  for (const auto& q : queries) {
    QueryRecord nq{q.qid, q.question, {}};
    for (const auto& gold : q.gold_ids) {
      auto it = out.remap.by_original.find(gold);
      if (it == out.remap.by_original.end()) {
        throw Error(ErrorCategory::kDanglingGold,
                    "query '" + q.qid + "' references unknown table '" + gold + "'");
      }
      if (std::find(nq.gold_ids.begin(), nq.gold_ids.end(), it->second) ==
          nq.gold_ids.end()) {
        nq.gold_ids.push_back(it->second);
      }
    }
    out.queries.push_back(std::move(nq));
  }
  return out;
}

namespace {

json table_to_json(const Table& t) {
  json rows = json::array();
  for (const auto& r : t.rows) rows.push_back(r.cells);
  return json{{"id", t.id},
              {"title", t.title ? json(*t.title) : json(nullptr)},
              {"sheet", t.sheet_name ? json(*t.sheet_name) : json(nullptr)},
              {"rows", std::move(rows)}};
}

json remap_to_json(const std::vector<RemapEntry>& remap) {
  json arr = json::array();
  for (const auto& e : remap) {
    arr.push_back({{"name", e.name}, {"signature_hash", e.signature_hash}, {"id", e.new_id}});
  }
  return arr;
}

}  // namespace

CorpusManifest write_corpus(const std::vector<Table>& tables,
                            const std::vector<QueryRecord>& queries,
                            const std::vector<RemapEntry>& remap,
                            std::size_t skipped, const fs::path& dir) {
  std::string tables_text;
  for (const auto& t : tables) tables_text += table_to_json(t).dump() + "\n";
  std::string queries_text;
  for (const auto& q : queries) {
    queries_text += json{{"qid", q.qid}, {"question", q.question}, {"gold_ids", q.gold_ids}}.dump() + "\n";
  }
  std::string remap_text;
  for (const auto& e : remap) {
    remap_text += e.name + "\t" + e.signature_hash + "\t" + e.new_id + "\n";
  }
  CorpusManifest manifest{tables.size(), queries.size(), skipped, remap};
  json m{{"n_tables", manifest.n_tables},
         {"n_queries", manifest.n_queries},
         {"skipped", manifest.skipped},
         {"remap", remap_to_json(remap)}};

  detail::write_file(dir / "tables.jsonl", tables_text);
  detail::write_file(dir / "queries.jsonl", queries_text);
  detail::write_file(dir / "remap.tsv", remap_text);
  detail::write_file(dir / "manifest.json", m.dump(2) + "\n");
  return manifest;
}

CorpusManifest read_manifest(const fs::path& dir) {
  const auto path = dir / "manifest.json";
  json m;
  try {
    m = json::parse(detail::read_file(path));
  } catch (const json::exception& e) {
    throw ParseError(path.string(), 0, e.what());
  }
  CorpusManifest manifest;
  try {
    manifest.n_tables = m.at("n_tables").get<std::size_t>();
    manifest.n_queries = m.at("n_queries").get<std::size_t>();
    manifest.skipped = m.at("skipped").get<std::size_t>();
    for (const auto& e : m.at("remap")) {
      manifest.remap.push_back({e.at("name").get<std::string>(),
                                e.at("signature_hash").get<std::string>(),
                                e.at("id").get<std::string>()});
    }
  } catch (const json::exception& e) {
    throw ParseError(path.string(), 0, e.what());
  }
  return manifest;
}

}  // namespace qgpt
