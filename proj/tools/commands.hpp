#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "config.hpp"
#include "qgpt/provider.hpp"

namespace qgpt::app {

/// Run directory layout:
///   corpus/                 ingested tables + queries
///   dedup/                  deduplicated corpus (when enabled)
///   augmented/<strategy>.jsonl
///   vectors/<strategy>.jsonl
///   index/<strategy>.ivf | .mvi
///   reports/<method>.json | .txt
///   manifest.json
struct RunLayout {
  std::filesystem::path root;

  std::filesystem::path corpus_dir() const { return root / "corpus"; }
  std::filesystem::path dedup_dir() const { return root / "dedup"; }
  std::filesystem::path augmented(std::string_view strategy) const;
  std::filesystem::path vectors(std::string_view strategy) const;
  std::filesystem::path index(std::string_view strategy, bool multi) const;
  std::filesystem::path report_stem(std::string_view method) const;
  std::filesystem::path manifest() const { return root / "manifest.json"; }

  std::filesystem::path active_corpus(bool dedup) const {
    return dedup ? dedup_dir() : corpus_dir();
  }
};

struct IngestSummary {
  std::size_t files = 0;
  std::size_t tables = 0;
  std::size_t queries = 0;
  std::size_t skipped = 0;
};

struct DedupSummary {
  std::size_t tables_in = 0;
  std::size_t tables_out = 0;
  std::size_t queries = 0;
};

struct AugmentSummary {
  std::string strategy;
  std::size_t tables = 0;
  std::size_t provider_calls = 0;
  std::size_t cache_hits = 0;
  std::size_t under_provisioned = 0;
};

struct EmbedSummary {
  std::string strategy;
  std::size_t vectors = 0;
  std::size_t truncated = 0;
  std::size_t dim = 0;
};

struct IndexSummary {
  std::string strategy;
  std::size_t vectors = 0;
  std::size_t nlist = 0;  // 0 for multi-vector indexes
};

/// Text-generation provider described by the config. The API key is read
/// from the environment variable named in generation.api_key_env.
std::unique_ptr<TextGenProvider> make_provider(const PipelineConfig& config);

IngestSummary cmd_ingest(const PipelineConfig& config);
DedupSummary cmd_dedup(const PipelineConfig& config);

/// `provider` overrides the configured one when non-null.
AugmentSummary cmd_augment(const PipelineConfig& config, RepresentationStrategy strategy,
                           TextGenProvider* provider = nullptr);
EmbedSummary cmd_embed(const PipelineConfig& config, RepresentationStrategy strategy);
IndexSummary cmd_index(const PipelineConfig& config, RepresentationStrategy strategy);

/// Prints k lines of "rank id score".
void cmd_search(const PipelineConfig& config, RepresentationStrategy strategy,
                const std::string& query, std::size_t k, std::ostream& out);

std::vector<EvalReport> cmd_eval(const PipelineConfig& config,
                                 TextGenProvider* decomposer = nullptr);

struct PipelineOptions {
  bool run_eval = true;
};

/// ingest, dedup (if enabled), then augment/embed/index for every strategy
/// the config or its eval methods need, then eval. Writes manifest.json.
std::vector<EvalReport> cmd_pipeline(const PipelineConfig& config,
                                     const PipelineOptions& options = {},
                                     TextGenProvider* provider = nullptr);

}  // namespace qgpt::app
