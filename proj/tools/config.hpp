#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "qgpt/corpus.hpp"
#include "qgpt/embed.hpp"
#include "qgpt/eval.hpp"
#include "qgpt/qgen.hpp"

namespace qgpt::app {

struct CorpusConfig {
  std::filesystem::path path;
  CorpusFormat format = CorpusFormat::kCsvDir;
  std::optional<std::filesystem::path> queries;
  bool dedup = false;
};

struct GenerationConfig {
  std::string provider = "mock";  // "mock" or "http"
  std::string model = "mock-template";
  std::string base_url = "http://127.0.0.1:8000/v1";
  std::string api_key_env = "QGPT_API_KEY";
  GenMode mode = GenMode::kFullPipeline;
  double temperature = 0.2;
  int max_attempts = 3;
  int timeout_seconds = 120;
};

struct IndexConfig {
  std::size_t nlist = 256;
  std::size_t nprobe = 16;
  std::uint64_t seed = 42;
  int max_iterations = 20;
};

struct EvalConfig {
  std::vector<std::string> methods{"pT", "QGpT"};
  std::vector<std::size_t> ks{1, 5, 10};
  RecallMode recall_mode = RecallMode::kPartialCredit;
  MergeStrategy merge = MergeStrategy::kMaxScore;
};

struct PipelineConfig {
  std::filesystem::path run_dir = "run";
  CorpusConfig corpus;
  RepresentationStrategy strategy = RepresentationStrategy::kQGpT;
  Selection selection = Selection::top_k_rows(10);
  bool include_title_corpus = false;
  bool include_title_generation = false;
  GenerationConfig generation;
  EmbedderSpec embedder;
  std::string embedder_api_key_env = "QGPT_EMBED_API_KEY";
  IndexConfig index;
  EvalConfig eval;
  std::optional<std::filesystem::path> cache_dir;  // default: <run_dir>/cache
  std::size_t concurrency = 4;

  std::filesystem::path effective_cache_dir() const {
    return cache_dir ? *cache_dir : run_dir / "cache";
  }
};

PipelineConfig default_config();

/// Parses a JSON config document over the defaults. Unknown keys and type
/// errors throw kConfigError. Relative paths resolve against `base_dir`.
PipelineConfig parse_config(std::string_view json_text,
                            const std::filesystem::path& base_dir = {});
PipelineConfig load_config(const std::filesystem::path& path);

/// Applies QGPT_LLM_BASE_URL / QGPT_EMBED_BASE_URL and reads API keys from
/// the configured environment variables.
void apply_environment(PipelineConfig& config);

/// Cross-field checks run before any stage. Throws kConfigError.
void validate(const PipelineConfig& config);

/// Strategy a method searches: "MTR" -> pT, "MTR+QGpT" -> QGpT, otherwise
/// the method names a strategy itself.
RepresentationStrategy strategy_for_method(std::string_view method);

}  // namespace qgpt::app
