#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "commands.hpp"
#include "qgpt/error.hpp"

namespace {

using qgpt::app::PipelineConfig;

// Flag values; unset options leave the config file value in place.
struct Overrides {
  std::string config_path;
  std::optional<std::string> run_dir, corpus, format, queries, strategy, provider, model,
      base_url, gen_mode, embedder, embed_model, recall_mode, merge, cache_dir;
  std::optional<bool> dedup, title_corpus, title_generation;
  std::optional<std::size_t> top_k_rows, token_budget, dim, nlist, nprobe, concurrency;
  std::optional<std::uint64_t> seed, index_seed;
  std::optional<int> max_attempts;
  std::vector<std::size_t> ks;
  std::vector<std::string> methods;
};

void add_overrides(CLI::App& app, Overrides& o) {
  app.add_option("-c,--config", o.config_path, "JSON config file");
  app.add_option("--run-dir", o.run_dir, "Artifact directory");
  app.add_option("--corpus", o.corpus, "Corpus directory or records file");
  app.add_option("--format", o.format, "csv-dir | tsv-dir | records");
  app.add_option("--queries", o.queries, "Queries JSONL");
  app.add_flag("--dedup,!--no-dedup", o.dedup, "Schema-based deduplication");
  app.add_option("--strategy", o.strategy, "Representation strategy");
  app.add_option("--top-k-rows", o.top_k_rows, "Rows kept per table");
  app.add_option("--token-budget", o.token_budget, "Token budget per table");
  app.add_flag("--title-corpus,!--no-title-corpus", o.title_corpus,
               "Serialize titles in embedded text");
  app.add_flag("--title-generation,!--no-title-generation", o.title_generation,
               "Serialize titles in generation prompts");
  app.add_option("--provider", o.provider, "mock | http");
  app.add_option("--model", o.model, "Generation model id");
  app.add_option("--llm-base-url", o.base_url, "Chat-completions base URL");
  app.add_option("--gen-mode", o.gen_mode, "full | questions-only");
  app.add_option("--max-attempts", o.max_attempts, "Provider calls per table");
  app.add_option("--embedder", o.embedder, "mock_dense | mock_multi | remote_dense | remote_multi");
  app.add_option("--embed-model", o.embed_model, "Embedding model id");
  app.add_option("--dim", o.dim, "Embedding dimension");
  app.add_option("--seed", o.seed, "Mock embedder seed");
  app.add_option("--nlist", o.nlist, "IVF lists");
  app.add_option("--nprobe", o.nprobe, "IVF lists scanned per query");
  app.add_option("--index-seed", o.index_seed, "k-means seed");
  app.add_option("--ks", o.ks, "Recall cutoffs")->delimiter(',');
  app.add_option("--methods", o.methods, "Evaluated methods")->delimiter(',');
  app.add_option("--recall-mode", o.recall_mode, "partial | all-gold");
  app.add_option("--merge", o.merge, "max | round-robin");
  app.add_option("--cache-dir", o.cache_dir, "Generation cache directory");
  app.add_option("--concurrency", o.concurrency, "Worker threads");
}

PipelineConfig resolve_config(const Overrides& o) {
  auto c = o.config_path.empty() ? qgpt::app::default_config()
                                 : qgpt::app::load_config(o.config_path);
  qgpt::app::apply_environment(c);
  if (o.run_dir) c.run_dir = *o.run_dir;
  if (o.corpus) c.corpus.path = *o.corpus;
  if (o.format) c.corpus.format = qgpt::parse_corpus_format(*o.format);
  if (o.queries) c.corpus.queries = *o.queries;
  if (o.dedup) c.corpus.dedup = *o.dedup;
  if (o.strategy) c.strategy = qgpt::parse_strategy(*o.strategy);
  if (o.top_k_rows) c.selection = qgpt::Selection::top_k_rows(*o.top_k_rows);
  if (o.token_budget) c.selection = qgpt::Selection::token_budget(*o.token_budget);
  if (o.title_corpus) c.include_title_corpus = *o.title_corpus;
  if (o.title_generation) c.include_title_generation = *o.title_generation;
  if (o.provider) c.generation.provider = *o.provider;
  if (o.model) c.generation.model = *o.model;
  if (o.base_url) c.generation.base_url = *o.base_url;
  if (o.gen_mode) c.generation.mode = qgpt::parse_gen_mode(*o.gen_mode);
  if (o.max_attempts) c.generation.max_attempts = *o.max_attempts;
  if (o.embedder) c.embedder.kind = qgpt::parse_embedder_kind(*o.embedder);
  if (o.embed_model) c.embedder.model = *o.embed_model;
  if (o.dim) c.embedder.dim = *o.dim;
  if (o.seed) c.embedder.seed = *o.seed;
  if (o.nlist) c.index.nlist = *o.nlist;
  if (o.nprobe) c.index.nprobe = *o.nprobe;
  if (o.index_seed) c.index.seed = *o.index_seed;
  if (!o.ks.empty()) c.eval.ks = o.ks;
  if (!o.methods.empty()) c.eval.methods = o.methods;
  if (o.recall_mode) c.eval.recall_mode = qgpt::parse_recall_mode(*o.recall_mode);
  if (o.merge) c.eval.merge = qgpt::parse_merge_strategy(*o.merge);
  if (o.cache_dir) c.cache_dir = *o.cache_dir;
  if (o.concurrency) c.concurrency = *o.concurrency;
  qgpt::app::validate(c);
  return c;
}

std::string one_line(std::string s) {
  for (auto& ch : s) {
    if (ch == '\n' || ch == '\r') ch = ' ';
  }
  return s;
}

}  // namespace

int main(int argc, char** argv) {
  auto logger = spdlog::stderr_color_mt("qgpt");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%Y-%m-%d %H:%M:%S.%e] [%l] %v");

  CLI::App app{"Table retrieval with question-augmented partial tables"};
  app.require_subcommand(1);
  app.fallthrough();
  Overrides o;
  add_overrides(app, o);
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace | debug | info | warn | error | off");

  auto* ingest = app.add_subcommand("ingest", "Load the corpus and queries into the run directory");
  auto* dedup = app.add_subcommand("dedup", "Collapse schema-identical table variants");
  auto* augment = app.add_subcommand("augment", "Build table representations");
  auto* embed = app.add_subcommand("embed", "Embed augmented tables");
  auto* index = app.add_subcommand("index", "Build the vector index");
  auto* search = app.add_subcommand("search", "Query the index");
  auto* eval = app.add_subcommand("eval", "Score retrieval against gold tables");
  auto* pipeline = app.add_subcommand("pipeline", "Run every offline stage, then eval");

  std::string query;
  std::size_t k = 10;
  search->add_option("-q,--query", query, "Question text")->required();
  search->add_option("-k", k, "Results to print");
  bool skip_eval = false;
  pipeline->add_flag("--skip-eval", skip_eval, "Stop after indexing");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    spdlog::set_level(spdlog::level::from_str(log_level));
    if (ingest->parsed() && !o.corpus && o.config_path.empty()) {
      throw qgpt::Error(qgpt::ErrorCategory::kConfigError, "--corpus or --config is required");
    }
    if (!o.corpus && o.config_path.empty()) o.corpus = ".";
    const auto config = resolve_config(o);

    if (ingest->parsed()) qgpt::app::cmd_ingest(config);
    if (dedup->parsed()) qgpt::app::cmd_dedup(config);
    if (augment->parsed()) qgpt::app::cmd_augment(config, config.strategy);
    if (embed->parsed()) qgpt::app::cmd_embed(config, config.strategy);
    if (index->parsed()) qgpt::app::cmd_index(config, config.strategy);
    if (search->parsed()) qgpt::app::cmd_search(config, config.strategy, query, k, std::cout);
    if (eval->parsed()) {
      for (const auto& r : qgpt::app::cmd_eval(config)) std::cout << qgpt::report_to_text(r);
    }
    if (pipeline->parsed()) {
      const auto reports = qgpt::app::cmd_pipeline(config, {.run_eval = !skip_eval});
      for (const auto& r : reports) std::cout << qgpt::report_to_text(r);
    }
  } catch (const qgpt::Error& e) {
    std::cerr << "error: " << qgpt::to_string(e.category()) << ": " << one_line(e.what()) << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: internal: " << one_line(e.what()) << '\n';
    return 3;
  }
  return 0;
}
