#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iterator>
#include <ostream>
#include <set>

#include <spdlog/spdlog.h>

#include "json.hpp"
#include "qgpt/error.hpp"
#include "qgpt/parallel.hpp"

namespace qgpt::app {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Counts calls that reach the wrapped provider.
class CountingProvider final : public TextGenProvider {
 public:
  explicit CountingProvider(TextGenProvider& inner) : inner_(inner) {}

  std::string complete(std::string_view prompt) override {
    ++calls_;
    return inner_.complete(prompt);
  }
  std::string model_id() const override { return inner_.model_id(); }
  std::size_t calls() const { return calls_.load(); }

 private:
  TextGenProvider& inner_;
  std::atomic<std::size_t> calls_{0};
};

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCategory::kIoError, "cannot read " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_text(const fs::path& path, std::string_view text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorCategory::kIoError, "cannot write " + tmp.string());
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    if (!out) throw Error(ErrorCategory::kIoError, "write failed for " + tmp.string());
  }
  fs::rename(tmp, path);
}

void require(const fs::path& path, std::string_view stage) {
  if (!fs::exists(path)) {
    throw Error(ErrorCategory::kIoError, "missing " + path.string() + " (run '" +
                                             std::string(stage) + "' first)");
  }
}

struct LoadedCorpus {
  std::vector<Table> tables;
  std::vector<QueryRecord> queries;
};

LoadedCorpus load_corpus(const fs::path& dir, std::string_view stage) {
  require(dir / "tables.jsonl", stage);
  LoadedCorpus c;
  c.tables = ingest_corpus(dir / "tables.jsonl", CorpusFormat::kRecords).tables;
  const auto qpath = dir / "queries.jsonl";
  if (fs::exists(qpath)) c.queries = ingest_queries(qpath);
  return c;
}

PartialTable select(const Table& table, const PipelineConfig& config) {
  if (config.selection.kind == Selection::Kind::kTopKRows) {
    return select_top_rows(table, config.selection.value);
  }
  return truncate_by_tokens(table, config.selection.value, config.include_title_corpus);
}

std::string strategy_name(RepresentationStrategy s) { return std::string(to_string(s)); }

struct AugmentedRecord {
  std::string table_id;
  std::string text;
};

std::vector<AugmentedRecord> read_augmented(const fs::path& path) {
  std::vector<AugmentedRecord> out;
  const auto text = read_text(path);
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string::npos) end = text.size();
    ++line_no;
    const std::string_view line(text.data() + pos, end - pos);
    pos = end + 1;
    if (line.empty()) continue;
    try {
      const auto j = json::parse(line);
      out.push_back({j.at("table_id").get<std::string>(), j.at("text").get<std::string>()});
    } catch (const json::exception& e) {
      throw ParseError(path.string(), line_no, e.what());
    }
  }
  return out;
}

std::string index_kind_suffix(bool multi) { return multi ? ".mvi" : ".ivf"; }

}  // namespace

fs::path RunLayout::augmented(std::string_view strategy) const {
  return root / "augmented" / (std::string(strategy) + ".jsonl");
}

fs::path RunLayout::vectors(std::string_view strategy) const {
  return root / "vectors" / (std::string(strategy) + ".jsonl");
}

fs::path RunLayout::index(std::string_view strategy, bool multi) const {
  return root / "index" / (std::string(strategy) + index_kind_suffix(multi));
}

fs::path RunLayout::report_stem(std::string_view method) const {
  return root / "reports" / std::string(method);
}

std::unique_ptr<TextGenProvider> make_provider(const PipelineConfig& config) {
  const auto& g = config.generation;
  if (g.provider == "mock") return std::make_unique<TemplateMockProvider>(g.model);
  HttpChatConfig http;
  http.base_url = g.base_url;
  http.model = g.model;
  http.temperature = g.temperature;
  http.timeout_seconds = g.timeout_seconds;
  if (const char* key = std::getenv(g.api_key_env.c_str())) http.api_key = key;
  return std::make_unique<HttpChatProvider>(std::move(http));
}

IngestSummary cmd_ingest(const PipelineConfig& config) {
  const Stopwatch clock;
  auto ingested = ingest_corpus(config.corpus.path, config.corpus.format);
  std::vector<QueryRecord> queries;
  if (config.corpus.queries) queries = ingest_queries(*config.corpus.queries);

  std::set<std::string> ids;
  for (const auto& t : ingested.tables) ids.insert(t.id);
  for (const auto& q : queries) {
    for (const auto& g : q.gold_ids) {
      if (!ids.count(g)) {
        throw Error(ErrorCategory::kDanglingGold,
                    "query '" + q.qid + "' names unknown table '" + g + "'");
      }
    }
  }

  const RunLayout layout{config.run_dir};
  write_corpus(ingested.tables, queries, {}, ingested.report.skipped, layout.corpus_dir());
  IngestSummary s{ingested.report.files, ingested.tables.size(), queries.size(),
                  ingested.report.skipped};
  spdlog::info("stage=ingest files={} tables={} queries={} skipped={} seconds={:.3f}", s.files,
               s.tables, s.queries, s.skipped, clock.seconds());
  return s;
}

DedupSummary cmd_dedup(const PipelineConfig& config) {
  const Stopwatch clock;
  const RunLayout layout{config.run_dir};
  auto corpus = load_corpus(layout.corpus_dir(), "ingest");
  const auto manifest = read_manifest(layout.corpus_dir());
  auto result = deduplicate(corpus.tables, corpus.queries);
  write_corpus(result.tables, result.queries, result.remap.entries, manifest.skipped,
               layout.dedup_dir());
  DedupSummary s{corpus.tables.size(), result.tables.size(), result.queries.size()};
  spdlog::info("stage=dedup tables_in={} tables_out={} queries={} seconds={:.3f}", s.tables_in,
               s.tables_out, s.queries, clock.seconds());
  return s;
}

AugmentSummary cmd_augment(const PipelineConfig& config, RepresentationStrategy strategy,
                           TextGenProvider* provider) {
  const Stopwatch clock;
  const RunLayout layout{config.run_dir};
  const auto corpus = load_corpus(layout.active_corpus(config.corpus.dedup),
                                  config.corpus.dedup ? "dedup" : "ingest");

  const bool wants_generation = needs_questions(strategy) || needs_headers(strategy);
  const bool wants_description = needs_description(strategy);

  std::unique_ptr<TextGenProvider> owned;
  if ((wants_generation || wants_description) && !provider) {
    owned = make_provider(config);
    provider = owned.get();
  }
  std::optional<CountingProvider> counter;
  std::optional<GenerationCache> cache;
  if (provider) {
    counter.emplace(*provider);
    cache.emplace(config.effective_cache_dir());
  }
  const GenOptions options{config.include_title_generation, cache ? &*cache : nullptr};
  const RetryPolicy policy{config.generation.max_attempts};

  std::vector<AugmentedTable> out(corpus.tables.size());
  std::vector<char> cached(corpus.tables.size(), 0);
  parallel_for(corpus.tables.size(), config.concurrency, [&](std::size_t i) {
    const auto pt = select(corpus.tables[i], config);
    AugmentInputs inputs;
    if (wants_generation) {
      inputs.generation = generate(pt, *counter, config.generation.mode, policy, options);
      cached[i] = inputs.generation->from_cache;
    }
    if (wants_description) {
      inputs.description = generate_description(pt, *counter, policy, options);
    }
    out[i] = augment(pt, inputs, strategy);
  });

  const auto name = strategy_name(strategy);
  std::string text;
  AugmentSummary s{name, out.size(), counter ? counter->calls() : 0, 0, 0};
  for (std::size_t i = 0; i < out.size(); ++i) {
    const auto& at = out[i];
    json j{{"table_id", at.partial.source_id},
           {"strategy", name},
           {"rows", at.partial.rows.size()},
           {"text", render_for_embedding(at, config.include_title_corpus)}};
    if (!at.questions.empty()) j["questions"] = at.questions;
    if (at.headers) j["headers"] = *at.headers;
    if (at.description) j["description"] = *at.description;
    if (at.under_provisioned) j["under_provisioned"] = true;
    text += j.dump() + "\n";
    s.cache_hits += cached[i] ? 1 : 0;
    s.under_provisioned += at.under_provisioned ? 1 : 0;
  }
  write_text(layout.augmented(name), text);
  spdlog::info(
      "stage=augment strategy={} tables={} provider_calls={} cache_hits={} "
      "under_provisioned={} seconds={:.3f}",
      name, s.tables, s.provider_calls, s.cache_hits, s.under_provisioned, clock.seconds());
  return s;
}

EmbedSummary cmd_embed(const PipelineConfig& config, RepresentationStrategy strategy) {
  const Stopwatch clock;
  const RunLayout layout{config.run_dir};
  const auto name = strategy_name(strategy);
  require(layout.augmented(name), "augment");
  const auto records = read_augmented(layout.augmented(name));
  auto embedder = make_embedder(config.embedder);

  std::vector<std::string> texts;
  texts.reserve(records.size());
  for (const auto& r : records) texts.push_back(r.text);

  const std::size_t batch = std::max<std::size_t>(1, config.embedder.batch_size);
  const std::size_t n_batches = (texts.size() + batch - 1) / batch;
  const bool multi = config.embedder.multi();
  std::vector<DenseRecord> dense(multi ? 0 : texts.size());
  std::vector<MultiRecord> multis(multi ? texts.size() : 0);

  parallel_for(n_batches, config.concurrency, [&](std::size_t b) {
    const std::size_t lo = b * batch;
    const std::size_t hi = std::min(texts.size(), lo + batch);
    const std::span<const std::string> slice(texts.data() + lo, hi - lo);
    if (multi) {
      auto vs = embedder->embed_multi(slice, Side::kDocument);
      for (std::size_t i = lo; i < hi; ++i) {
        multis[i] = {records[i].table_id, std::move(vs[i - lo])};
      }
    } else {
      auto vs = embedder->embed_dense(slice, Side::kDocument);
      for (std::size_t i = lo; i < hi; ++i) {
        dense[i] = {records[i].table_id, std::move(vs[i - lo])};
      }
    }
  });

  EmbedSummary s{name, texts.size(), embedder->stats().truncated, 0};
  if (multi) {
    write_multi_store(layout.vectors(name), name, multis);
    for (const auto& r : multis) {
      if (!r.vector.token_vectors.empty()) {
        s.dim = r.vector.token_vectors.front().values.size();
        break;
      }
    }
  } else {
    write_dense_store(layout.vectors(name), name, dense);
    if (!dense.empty()) s.dim = dense.front().vector.values.size();
  }
  spdlog::info("stage=embed strategy={} kind={} vectors={} dim={} truncated={} seconds={:.3f}",
               name, to_string(config.embedder.kind), s.vectors, s.dim, s.truncated,
               clock.seconds());
  return s;
}

IndexSummary cmd_index(const PipelineConfig& config, RepresentationStrategy strategy) {
  const Stopwatch clock;
  const RunLayout layout{config.run_dir};
  const auto name = strategy_name(strategy);
  require(layout.vectors(name), "embed");
  IndexSummary s{name, 0, 0};
  if (config.embedder.multi()) {
    MultiIndex index;
    for (auto& r : read_multi_store(layout.vectors(name))) {
      index.add(std::move(r.table_id), std::move(r.vector));
    }
    index.save(layout.index(name, true));
    s.vectors = index.size();
  } else {
    const auto records = read_dense_store(layout.vectors(name));
    const auto index =
        build_ivf(records, config.index.nlist, config.index.seed, config.index.max_iterations);
    index.save(layout.index(name, false));
    s.vectors = index.size();
    s.nlist = index.nlist();
  }
  spdlog::info("stage=index strategy={} vectors={} nlist={} seconds={:.3f}", name, s.vectors,
               s.nlist, clock.seconds());
  return s;
}

namespace {

// Loaded index plus the retriever over it.
struct RetrieverBundle {
  std::unique_ptr<Embedder> embedder;
  std::optional<DenseIndex> dense;
  std::optional<MultiIndex> multi;
  std::unique_ptr<Retriever> retriever;
};

RetrieverBundle open_retriever(const PipelineConfig& config, RepresentationStrategy strategy) {
  const RunLayout layout{config.run_dir};
  const auto name = strategy_name(strategy);
  const bool multi = config.embedder.multi();
  const auto path = layout.index(name, multi);
  require(path, "index");
  RetrieverBundle b;
  b.embedder = make_embedder(config.embedder);
  if (multi) {
    b.multi = MultiIndex::load(path);
    b.retriever = std::make_unique<MultiRetriever>(*b.multi, *b.embedder);
  } else {
    b.dense = DenseIndex::load(path);
    b.retriever = std::make_unique<DenseRetriever>(*b.dense, *b.embedder, config.index.nprobe);
  }
  return b;
}

}  // namespace

void cmd_search(const PipelineConfig& config, RepresentationStrategy strategy,
                const std::string& query, std::size_t k, std::ostream& out) {
  if (k == 0) throw Error(ErrorCategory::kInvalidArgument, "k must be >= 1");
  auto bundle = open_retriever(config, strategy);
  const auto hits = bundle.retriever->search(query, k);
  for (std::size_t i = 0; i < hits.size(); ++i) {
    char score[32];
    std::snprintf(score, sizeof score, "%.6f", hits[i].score);
    out << (i + 1) << ' ' << hits[i].id << ' ' << score << '\n';
  }
}

std::vector<EvalReport> cmd_eval(const PipelineConfig& config, TextGenProvider* decomposer) {
  const RunLayout layout{config.run_dir};
  const auto corpus = load_corpus(layout.active_corpus(config.corpus.dedup),
                                  config.corpus.dedup ? "dedup" : "ingest");
  if (corpus.queries.empty()) {
    throw Error(ErrorCategory::kConfigError, "no evaluation queries (set corpus.queries)");
  }

  std::unique_ptr<TextGenProvider> owned;
  std::optional<GenerationCache> cache;
  std::vector<EvalReport> reports;
  for (const auto& method : config.eval.methods) {
    const Stopwatch clock;
    const auto strategy = strategy_for_method(method);
    auto bundle = open_retriever(config, strategy);

    BenchmarkSpec spec;
    spec.method = method;
    spec.strategy = strategy_name(strategy);
    spec.ks = config.eval.ks;
    spec.mode = config.eval.recall_mode;
    spec.merge = config.eval.merge;
    spec.retry = RetryPolicy{config.generation.max_attempts};
    spec.concurrency = config.concurrency;
    if (is_decomposition_method(method)) {
      if (!decomposer) {
        if (!owned) owned = make_provider(config);
        decomposer = owned.get();
      }
      if (!cache) cache.emplace(config.effective_cache_dir());
      spec.decompose = true;
      spec.decomposer = decomposer;
      spec.cache = &*cache;
    }
    auto report = run_benchmark(*bundle.retriever, corpus.queries, spec);
    write_report(report, layout.report_stem(method));

    std::string summary;
    for (const auto& [k, v] : report.recall) {
      char buf[48];
      std::snprintf(buf, sizeof buf, " R@%zu=%.4f", k, v);
      summary += buf;
    }
    spdlog::info("stage=eval method={} queries={}{} seconds={:.3f}", method, report.n_queries,
                 summary, clock.seconds());
    reports.push_back(std::move(report));
  }
  return reports;
}

std::vector<EvalReport> cmd_pipeline(const PipelineConfig& config,
                                     const PipelineOptions& options,
                                     TextGenProvider* provider) {
  validate(config);
  const Stopwatch clock;
  json manifest;

  const auto ingest = cmd_ingest(config);
  manifest["ingest"] = {{"files", ingest.files},
                        {"tables", ingest.tables},
                        {"queries", ingest.queries},
                        {"skipped", ingest.skipped}};
  if (config.corpus.dedup) {
    const auto dedup = cmd_dedup(config);
    manifest["dedup"] = {{"tables_in", dedup.tables_in},
                         {"tables_out", dedup.tables_out},
                         {"queries", dedup.queries}};
  }

  std::vector<RepresentationStrategy> strategies{config.strategy};
  if (options.run_eval) {
    for (const auto& m : config.eval.methods) {
      const auto s = strategy_for_method(m);
      if (std::find(strategies.begin(), strategies.end(), s) == strategies.end()) {
        strategies.push_back(s);
      }
    }
  }

  json stages = json::array();
  for (const auto s : strategies) {
    const auto aug = cmd_augment(config, s, provider);
    const auto emb = cmd_embed(config, s);
    const auto idx = cmd_index(config, s);
    stages.push_back({{"strategy", aug.strategy},
                      {"tables", aug.tables},
                      {"under_provisioned", aug.under_provisioned},
                      {"vectors", emb.vectors},
                      {"dim", emb.dim},
                      {"truncated", emb.truncated},
                      {"nlist", idx.nlist}});
  }
  manifest["strategies"] = stages;

  std::vector<EvalReport> reports;
  if (options.run_eval) {
    reports = cmd_eval(config, provider);
    json methods = json::array();
    for (const auto& r : reports) methods.push_back(r.method);
    manifest["reports"] = methods;
  }
  write_text(RunLayout{config.run_dir}.manifest(), manifest.dump(2) + "\n");
  spdlog::info("stage=pipeline strategies={} reports={} seconds={:.3f}", strategies.size(),
               reports.size(), clock.seconds());
  return reports;
}

}  // namespace qgpt::app
