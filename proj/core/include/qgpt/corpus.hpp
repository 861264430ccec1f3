#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "qgpt/table.hpp"

namespace qgpt {

struct QueryRecord {
  std::string qid;
  std::string question;
  std::vector<std::string> gold_ids;

  bool operator==(const QueryRecord&) const = default;
};

enum class CorpusFormat { kCsvDir, kTsvDir, kRecords };

/// Accepts "csv-dir", "tsv-dir" and "records".
CorpusFormat parse_corpus_format(std::string_view name);

struct IngestReport {
  std::size_t files = 0;
  std::size_t tables = 0;
  std::size_t skipped = 0;
  std::vector<std::string> skipped_ids;
};

struct IngestResult {
  std::vector<Table> tables;
  IngestReport report;
};

/// RFC 4180 style reader: quoted fields may contain the delimiter, doubled
/// quotes and newlines. CRLF is normalized to LF. Blank lines are dropped.
std::vector<Row> parse_delimited(std::string_view text, char delimiter,
                                 const std::string& source_name);

/// csv-dir/tsv-dir: one table per *.csv / *.tsv file (sorted by name), id and
/// title taken from the file stem. records: one JSON object per line,
/// {id, title, sheet, rows}. Tables without rows are skipped and reported.
IngestResult ingest_corpus(const std::filesystem::path& path, CorpusFormat format);

/// One JSON object per line: {qid, question, gold_ids}.
std::vector<QueryRecord> ingest_queries(const std::filesystem::path& path);

struct SchemaSignature {
  std::vector<std::string> headers;  // lower-cased, whitespace-collapsed
  std::size_t column_count = 0;

  bool operator==(const SchemaSignature&) const = default;

  /// First 16 hex chars of SHA-256 over the normalized header tuple.
  std::string hash() const;
};

SchemaSignature schema_signature(const Table& table);

/// Name a table is grouped under during deduplication: its title, or its id
/// when untitled.
std::string group_name(const Table& table);

struct RemapEntry {
  std::string name;
  std::string signature_hash;
  std::string new_id;

  bool operator==(const RemapEntry&) const = default;
};

struct IdRemap {
  std::vector<RemapEntry> entries;                  // one per representative
  std::map<std::string, std::string> by_original;   // every input id -> new id

  /// True when every original id maps to itself.
  bool is_identity() const;
};

struct DedupResult {
  std::vector<Table> tables;
  std::vector<QueryRecord> queries;
  IdRemap remap;
};

/// Keeps the first table of every distinct (name, signature) pair, renamed
/// `name__i` with i counted from 1 per name in first-seen order, and rewrites
/// gold ids through the remap. Throws kDanglingGold on unknown gold ids.
DedupResult deduplicate(const std::vector<Table>& tables,
                        const std::vector<QueryRecord>& queries);

struct CorpusManifest {
  std::size_t n_tables = 0;
  std::size_t n_queries = 0;
  std::size_t skipped = 0;
  std::vector<RemapEntry> remap;
};

/// Writes tables.jsonl, queries.jsonl, remap.tsv and manifest.json into `dir`.
CorpusManifest write_corpus(const std::vector<Table>& tables,
                            const std::vector<QueryRecord>& queries,
                            const std::vector<RemapEntry>& remap,
                            std::size_t skipped,
                            const std::filesystem::path& dir);

CorpusManifest read_manifest(const std::filesystem::path& dir);

}  // namespace qgpt
