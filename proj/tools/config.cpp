#include "config.hpp"

#include <cstdlib>
#include <fstream>
#include <iterator>
#include <set>

#include "json.hpp"
#include "qgpt/error.hpp"

namespace qgpt::app {

namespace fs = std::filesystem;
using json = nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& message) {
  throw Error(ErrorCategory::kConfigError, message);
}

// Rejects keys outside `allowed`; `where` names the enclosing section.
void check_keys(const json& obj, const std::string& where,
                std::initializer_list<const char*> allowed) {
  if (!obj.is_object()) fail(where + " must be an object");
  const std::set<std::string> ok(allowed.begin(), allowed.end());
  for (const auto& [key, _] : obj.items()) {
    if (!ok.count(key)) fail("unknown key '" + where + "." + key + "'");
  }
}

template <typename T>
void read(const json& obj, const char* key, T& out, const std::string& where) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const json::exception&) {
    fail(where + "." + key + " has the wrong type");
  }
}

fs::path resolve(const fs::path& base, const std::string& p) {
  fs::path path(p);
  return path.is_absolute() || base.empty() ? path : base / path;
}

template <typename Fn>
auto convert(const std::string& where, Fn&& fn) {
  try {
    return fn();
  } catch (const Error& e) {
    fail(where + ": " + e.what());
  }
}

}  // namespace

PipelineConfig default_config() {
  PipelineConfig c;
  c.embedder.kind = EmbedderKind::kMockDense;
  c.embedder.dim = 384;
  c.embedder.seed = 13;
  return c;
}

PipelineConfig parse_config(std::string_view json_text, const fs::path& base_dir) {
  json root = json::parse(json_text, nullptr, false);
  if (root.is_discarded()) fail("config is not valid JSON");
  check_keys(root, "config",
             {"run_dir", "corpus", "strategy", "selection", "include_title", "generation",
              "embedder", "index", "eval", "cache_dir", "concurrency"});

  PipelineConfig c = default_config();
  std::string s;

  if (root.contains("run_dir")) {
    read(root, "run_dir", s, "config");
    c.run_dir = resolve(base_dir, s);
  }
  if (root.contains("cache_dir")) {
    read(root, "cache_dir", s, "config");
    c.cache_dir = resolve(base_dir, s);
  }
  read(root, "concurrency", c.concurrency, "config");
  if (root.contains("strategy")) {
    read(root, "strategy", s, "config");
    c.strategy = convert("strategy", [&] { return parse_strategy(s); });
  }

  if (auto it = root.find("corpus"); it != root.end()) {
    const auto& o = *it;
    check_keys(o, "corpus", {"path", "format", "queries", "dedup"});
    if (o.contains("path")) {
      read(o, "path", s, "corpus");
      c.corpus.path = resolve(base_dir, s);
    }
    if (o.contains("format")) {
      read(o, "format", s, "corpus");
      c.corpus.format = convert("corpus.format", [&] { return parse_corpus_format(s); });
    }
    if (o.contains("queries")) {
      read(o, "queries", s, "corpus");
      c.corpus.queries = resolve(base_dir, s);
    }
    read(o, "dedup", c.corpus.dedup, "corpus");
  }

  if (auto it = root.find("selection"); it != root.end()) {
    const auto& o = *it;
    check_keys(o, "selection", {"top_k_rows", "token_budget"});
    if (o.contains("top_k_rows") && o.contains("token_budget")) {
      fail("selection takes either top_k_rows or token_budget, not both");
    }
    std::size_t n = 0;
    if (o.contains("top_k_rows")) {
      read(o, "top_k_rows", n, "selection");
      c.selection = Selection::top_k_rows(n);
    } else if (o.contains("token_budget")) {
      read(o, "token_budget", n, "selection");
      c.selection = Selection::token_budget(n);
    }
  }

  if (auto it = root.find("include_title"); it != root.end()) {
    check_keys(*it, "include_title", {"corpus", "generation"});
    read(*it, "corpus", c.include_title_corpus, "include_title");
    read(*it, "generation", c.include_title_generation, "include_title");
  }

  if (auto it = root.find("generation"); it != root.end()) {
    const auto& o = *it;
    check_keys(o, "generation",
               {"provider", "model", "base_url", "api_key_env", "mode", "temperature",
                "max_attempts", "timeout_seconds"});
    auto& g = c.generation;
    read(o, "provider", g.provider, "generation");
    read(o, "model", g.model, "generation");
    read(o, "base_url", g.base_url, "generation");
    read(o, "api_key_env", g.api_key_env, "generation");
    if (o.contains("mode")) {
      read(o, "mode", s, "generation");
      g.mode = convert("generation.mode", [&] { return parse_gen_mode(s); });
    }
    read(o, "temperature", g.temperature, "generation");
    read(o, "max_attempts", g.max_attempts, "generation");
    read(o, "timeout_seconds", g.timeout_seconds, "generation");
  }

  if (auto it = root.find("embedder"); it != root.end()) {
    const auto& o = *it;
    check_keys(o, "embedder",
               {"kind", "dim", "seed", "model", "base_url", "api_key_env", "max_tokens",
                "batch_size", "timeout_seconds", "query_prefix", "document_prefix"});
    auto& e = c.embedder;
    if (o.contains("kind")) {
      read(o, "kind", s, "embedder");
      e.kind = convert("embedder.kind", [&] { return parse_embedder_kind(s); });
    }
    read(o, "dim", e.dim, "embedder");
    if (o.contains("seed")) {
      std::uint64_t seed = 0;
      read(o, "seed", seed, "embedder");
      e.seed = seed;
    }
    read(o, "model", e.model, "embedder");
    read(o, "base_url", e.base_url, "embedder");
    read(o, "api_key_env", c.embedder_api_key_env, "embedder");
    read(o, "max_tokens", e.max_tokens, "embedder");
    read(o, "batch_size", e.batch_size, "embedder");
    read(o, "timeout_seconds", e.timeout_seconds, "embedder");
    read(o, "query_prefix", e.query_prefix, "embedder");
    read(o, "document_prefix", e.document_prefix, "embedder");
  }

  if (auto it = root.find("index"); it != root.end()) {
    check_keys(*it, "index", {"nlist", "nprobe", "seed", "max_iterations"});
    read(*it, "nlist", c.index.nlist, "index");
    read(*it, "nprobe", c.index.nprobe, "index");
    read(*it, "seed", c.index.seed, "index");
    read(*it, "max_iterations", c.index.max_iterations, "index");
  }

  if (auto it = root.find("eval"); it != root.end()) {
    const auto& o = *it;
    check_keys(o, "eval", {"methods", "ks", "recall_mode", "merge"});
    read(o, "methods", c.eval.methods, "eval");
    read(o, "ks", c.eval.ks, "eval");
    if (o.contains("recall_mode")) {
      read(o, "recall_mode", s, "eval");
      c.eval.recall_mode = convert("eval.recall_mode", [&] { return parse_recall_mode(s); });
    }
    if (o.contains("merge")) {
      read(o, "merge", s, "eval");
      c.eval.merge = convert("eval.merge", [&] { return parse_merge_strategy(s); });
    }
  }
  return c;
}

PipelineConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) fail("cannot read config " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return parse_config(text, path.parent_path());
}

void apply_environment(PipelineConfig& config) {
  if (const char* url = std::getenv("QGPT_LLM_BASE_URL"); url && *url) {
    config.generation.base_url = url;
  }
  if (const char* url = std::getenv("QGPT_EMBED_BASE_URL"); url && *url) {
    config.embedder.base_url = url;
  }
  if (const char* key = std::getenv(config.embedder_api_key_env.c_str()); key) {
    config.embedder.api_key = key;
  }
}

void validate(const PipelineConfig& c) {
  if (c.corpus.path.empty()) fail("corpus.path is required");
  if (c.selection.value == 0) fail("selection size must be >= 1");
  if (c.generation.provider != "mock" && c.generation.provider != "http") {
    fail("generation.provider must be 'mock' or 'http'");
  }
  if (c.generation.max_attempts < 1) fail("generation.max_attempts must be >= 1");
  if (c.index.nlist == 0) fail("index.nlist must be >= 1");
  if (c.index.nprobe == 0) fail("index.nprobe must be >= 1");
  if (c.index.max_iterations < 1) fail("index.max_iterations must be >= 1");
  if (c.concurrency == 0) fail("concurrency must be >= 1");
  if (c.eval.ks.empty()) fail("eval.ks must not be empty");
  for (const auto k : c.eval.ks) {
    if (k == 0) fail("eval.ks values must be >= 1");
  }
  if (needs_headers(c.strategy) && c.generation.mode != GenMode::kFullPipeline) {
    fail(std::string(to_string(c.strategy)) + " needs generation.mode 'full'");
  }
  const bool mock = c.embedder.kind == EmbedderKind::kMockDense ||
                    c.embedder.kind == EmbedderKind::kMockMulti;
  if (mock && !c.embedder.seed) fail("mock embedders need embedder.seed");
  if (mock && c.embedder.dim == 0) fail("embedder.dim must be >= 1");
  for (const auto& m : c.eval.methods) {
    convert("eval.methods", [&] { return strategy_for_method(m); });
  }
}

RepresentationStrategy strategy_for_method(std::string_view method) {
  if (is_decomposition_method(method)) {
    if (method.size() == 3) return RepresentationStrategy::kPT;
    if (method[3] != '+') {
      throw Error(ErrorCategory::kInvalidArgument, "unknown method '" + std::string(method) + "'");
    }
    return parse_strategy(method.substr(4));
  }
  return parse_strategy(method);
}

}  // namespace qgpt::app
