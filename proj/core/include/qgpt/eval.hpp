#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qgpt/cache.hpp"
#include "qgpt/corpus.hpp"
#include "qgpt/embed.hpp"
#include "qgpt/index.hpp"
#include "qgpt/provider.hpp"
#include "qgpt/qgen.hpp"

namespace qgpt {

enum class RecallMode {
  kPartialCredit,  // |gold ∩ top-k| / |gold|
  kAllGold,        // 1 when every gold table is in the top-k, else 0
};

std::string_view to_string(RecallMode mode);
RecallMode parse_recall_mode(std::string_view name);

struct QueryHits {
  std::string qid;
  std::vector<std::string> gold_ids;
  std::vector<std::string> retrieved;  // top max(ks) ids
  std::map<std::size_t, double> recall;
  std::vector<std::string> sub_queries;  // MTR runs only
  bool decomposition_fallback = false;
};

struct EvalReport {
  std::string method;
  std::string retriever;
  std::string strategy;
  RecallMode mode = RecallMode::kPartialCredit;
  std::vector<std::size_t> ks;
  std::map<std::size_t, double> recall;  // macro average over queries
  std::size_t n_queries = 0;
  std::vector<QueryHits> per_query;      // in query order
};

/// Per-query results keyed by qid.
using RunSet = std::map<std::string, SearchResult>;

/// Scores `runs` against `queries`. Throws kMissingRun when a query has no
/// run or a run names an unknown qid, kInvalidArgument for empty or zero ks.
EvalReport recall_at_k(const RunSet& runs, std::span<const QueryRecord> queries,
                       std::vector<std::size_t> ks,
                       RecallMode mode = RecallMode::kPartialCredit);

// ---------------------------------------------------------------------------
// Query decomposition baseline

struct SubQuerySet {
  std::string qid;
  std::string question;
  std::vector<std::string> sub_queries;
  bool fallback = false;  // provider never produced a usable split
  int attempts = 0;
};

std::string build_decomposition_prompt(std::string_view question);

/// Extracts a non-empty {"sub_queries": [...]} payload. Throws ParseFailure.
std::vector<std::string> parse_sub_queries(std::string_view raw);

/// Falls back to {question} (flagged) when retries are exhausted. Provider
/// transport errors propagate.
SubQuerySet mtr_decompose(std::string qid, std::string question, TextGenProvider& provider,
                          const RetryPolicy& policy, GenerationCache* cache = nullptr);

enum class MergeStrategy {
  kMaxScore,    // per-id maximum score, then ranked
  kRoundRobin,  // interleave ranks across lists, first occurrence kept
};

std::string_view to_string(MergeStrategy strategy);
MergeStrategy parse_merge_strategy(std::string_view name);

/// Round-robin output keeps each id's score from the list it was taken from
/// and is ordered by interleave position rather than by score.
SearchResult mtr_merge(std::span<const SearchResult> results, std::size_t k,
                       MergeStrategy strategy = MergeStrategy::kMaxScore);

// ---------------------------------------------------------------------------
// Benchmark runs

/// Text-to-ranking search over one embedded corpus.
class Retriever {
 public:
  virtual ~Retriever() = default;
  virtual SearchResult search(const std::string& text, std::size_t k) = 0;
  virtual std::string name() const = 0;
};

/// IVF search over dense vectors; nprobe == nlist gives exact results.
class DenseRetriever final : public Retriever {
 public:
  DenseRetriever(const DenseIndex& index, Embedder& embedder, std::size_t nprobe);

  SearchResult search(const std::string& text, std::size_t k) override;
  std::string name() const override { return "dense-ivf"; }

 private:
  const DenseIndex& index_;
  Embedder& embedder_;
  std::size_t nprobe_;
};

class MultiRetriever final : public Retriever {
 public:
  MultiRetriever(const MultiIndex& index, Embedder& embedder);

  SearchResult search(const std::string& text, std::size_t k) override;
  std::string name() const override { return "late-interaction"; }

 private:
  const MultiIndex& index_;
  Embedder& embedder_;
};

struct BenchmarkSpec {
  std::string method;    // e.g. "pT", "QGpT", "MTR", "MTR+QGpT"
  std::string strategy;  // corpus representation the retriever searches
  std::vector<std::size_t> ks{1, 5, 10};
  RecallMode mode = RecallMode::kPartialCredit;
  bool decompose = false;                 // MTR-style methods
  TextGenProvider* decomposer = nullptr;  // required when decompose is set
  RetryPolicy retry;
  GenerationCache* cache = nullptr;
  MergeStrategy merge = MergeStrategy::kMaxScore;
  std::size_t concurrency = 1;
};

/// True for method names starting with "MTR".
bool is_decomposition_method(std::string_view method);

/// Retrieves top max(ks) for every query (per sub-query, then merged, for
/// decomposition methods) and scores the runs.
EvalReport run_benchmark(Retriever& retriever, std::span<const QueryRecord> queries,
                         const BenchmarkSpec& spec);

/// Machine-readable report: {method, retriever, strategy, recall_mode, ks,
/// n_queries, recall:{k: value}, per_query:[...]}.
std::string report_to_json(const EvalReport& report);
/// Aligned plain-text summary table.
std::string report_to_text(const EvalReport& report);

/// Writes `<stem>.json` and `<stem>.txt`.
void write_report(const EvalReport& report, const std::filesystem::path& stem);

}  // namespace qgpt
