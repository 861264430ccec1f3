#include "qgpt/embed.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>

#include "http_json.hpp"
#include "io_util.hpp"
#include "json.hpp"
#include "qgpt/error.hpp"
#include "qgpt/hash.hpp"
#include "qgpt/tokenizer.hpp"

namespace qgpt {

using json = nlohmann::json;

DenseVector normalized(std::vector<float> values) {
  double sq = 0.0;
  for (const float v : values) sq += static_cast<double>(v) * v;
  if (!(sq > 0.0) || !std::isfinite(sq)) {
    throw Error(ErrorCategory::kInvalidArgument, "cannot normalize a zero or non-finite vector");
  }
  const double inv = 1.0 / std::sqrt(sq);
  for (auto& v : values) v = static_cast<float>(v * inv);
  return DenseVector{std::move(values)};
}

double inner_product(const DenseVector& a, const DenseVector& b) {
  if (a.dim() != b.dim()) {
    throw Error(ErrorCategory::kDimensionMismatch,
                "dim " + std::to_string(a.dim()) + " vs " + std::to_string(b.dim()));
  }
  double s = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    s += static_cast<double>(a.values[i]) * b.values[i];
  }
  return s;
}

std::string_view to_string(EmbedderKind kind) {
  switch (kind) {
    case EmbedderKind::kRemoteDense: return "remote_dense";
    case EmbedderKind::kRemoteMulti: return "remote_multi";
    case EmbedderKind::kMockDense: return "mock_dense";
    case EmbedderKind::kMockMulti: return "mock_multi";
  }
  return "unknown";
}

EmbedderKind parse_embedder_kind(std::string_view name) {
  for (auto k : {EmbedderKind::kRemoteDense, EmbedderKind::kRemoteMulti,
                 EmbedderKind::kMockDense, EmbedderKind::kMockMulti}) {
    if (to_string(k) == name) return k;
  }
  throw Error(ErrorCategory::kInvalidArgument,
              "unknown embedder kind '" + std::string(name) + "'");
}

std::size_t mock_token_index(std::string_view token, std::uint64_t seed, std::size_t dim) {
  // splitmix64 finalizer turns the seed into an FNV basis.
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return static_cast<std::size_t>(fnv1a64(token, 0xcbf29ce484222325ULL ^ z) % dim);
}

std::vector<std::string> mock_tokens(std::string_view text) {
  const auto tokens = tokenize(text);
  const bool has_words = std::any_of(tokens.begin(), tokens.end(), [](const Token& t) {
    return t.kind == TokenKind::kWord;
  });
  std::vector<std::string> out;
  for (const auto& t : tokens) {
    if (has_words && t.kind != TokenKind::kWord) continue;
    std::string s(t.text);
    for (auto& c : s) {
      if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    }
    out.push_back(std::move(s));
  }
  return out;
}

namespace {

std::string prefixed(const EmbedderSpec& spec, const std::string& text, Side side) {
  const auto& prefix = side == Side::kQuery ? spec.query_prefix : spec.document_prefix;
  return prefix.empty() ? text : prefix + text;
}

std::vector<std::string> tokens_or_throw(std::string_view text) {
  auto tokens = mock_tokens(text);
  if (tokens.empty()) {
    throw Error(ErrorCategory::kInvalidArgument, "cannot embed text without tokens");
  }
  return tokens;
}

class MockEmbedder final : public Embedder {
 public:
  explicit MockEmbedder(EmbedderSpec spec) : spec_(std::move(spec)) {
    if (!spec_.seed) {
      throw Error(ErrorCategory::kConfigError, "mock embedders require a seed");
    }
    if (spec_.dim == 0) {
      throw Error(ErrorCategory::kConfigError, "mock embedders require dim >= 1");
    }
  }

  std::vector<DenseVector> embed_dense(std::span<const std::string> texts,
                                       Side side) override {
    if (spec_.multi()) {
      throw Error(ErrorCategory::kInvalidArgument, "multi-vector embedder asked for dense output");
    }
    std::vector<DenseVector> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
      std::vector<float> acc(spec_.dim, 0.0F);
      for (const auto& tok : tokens_or_throw(prefixed(spec_, text, side))) {
        acc[mock_token_index(tok, *spec_.seed, spec_.dim)] += 1.0F;
      }
      out.push_back(normalized(std::move(acc)));
    }
    texts_ += texts.size();
    return out;
  }

  std::vector<MultiVector> embed_multi(std::span<const std::string> texts,
                                       Side side) override {
    if (!spec_.multi()) {
      throw Error(ErrorCategory::kInvalidArgument, "dense embedder asked for multi-vector output");
    }
    std::vector<MultiVector> out;
    out.reserve(texts.size());
    for (const auto& text : texts) {
      auto tokens = tokens_or_throw(prefixed(spec_, text, side));
      if (spec_.max_tokens > 0 && tokens.size() > spec_.max_tokens) {
        tokens.resize(spec_.max_tokens);
        ++truncated_;
      }
      MultiVector mv;
      mv.token_vectors.reserve(tokens.size());
      for (const auto& tok : tokens) {
        std::vector<float> one_hot(spec_.dim, 0.0F);
        one_hot[mock_token_index(tok, *spec_.seed, spec_.dim)] = 1.0F;
        mv.token_vectors.push_back(DenseVector{std::move(one_hot)});
      }
      out.push_back(std::move(mv));
    }
    texts_ += texts.size();
    return out;
  }

  const EmbedderSpec& spec() const override { return spec_; }

 private:
  EmbedderSpec spec_;
};

std::vector<float> to_floats(const json& arr) {
  if (!arr.is_array()) {
    throw Error(ErrorCategory::kProviderError, "embedding is not an array");
  }
  std::vector<float> v;
  v.reserve(arr.size());
  for (const auto& x : arr) {
    if (!x.is_number()) throw Error(ErrorCategory::kProviderError, "non-numeric embedding value");
    v.push_back(x.get<float>());
  }
  return v;
}

// OpenAI-style embedding endpoint: POST {base_url}/embeddings with
// {model, input:[texts]}; reply {data:[{index, embedding}]}. Multi-vector
// servers return a list of per-token vectors as each embedding.
class RemoteEmbedder final : public Embedder {
 public:
  explicit RemoteEmbedder(EmbedderSpec spec) : spec_(std::move(spec)), dim_(spec_.dim) {
    if (spec_.base_url.empty() || spec_.model.empty()) {
      throw Error(ErrorCategory::kConfigError, "remote embedder needs base_url and model");
    }
  }

  std::vector<DenseVector> embed_dense(std::span<const std::string> texts,
                                       Side side) override {
    if (spec_.multi()) {
      throw Error(ErrorCategory::kInvalidArgument, "multi-vector embedder asked for dense output");
    }
    std::vector<DenseVector> out;
    for_each_batch(texts, side, [&](const json& embedding) {
      auto v = normalized(to_floats(embedding));
      check_dim(v.dim());
      out.push_back(std::move(v));
    });
    return out;
  }

  std::vector<MultiVector> embed_multi(std::span<const std::string> texts,
                                       Side side) override {
    if (!spec_.multi()) {
      throw Error(ErrorCategory::kInvalidArgument, "dense embedder asked for multi-vector output");
    }
    std::vector<MultiVector> out;
    for_each_batch(texts, side, [&](const json& embedding) {
      if (!embedding.is_array() || embedding.empty()) {
        throw Error(ErrorCategory::kProviderError, "empty multi-vector embedding");
      }
      MultiVector mv;
      for (const auto& tok : embedding) {
        if (spec_.max_tokens > 0 && mv.size() == spec_.max_tokens) {
          ++truncated_;
          break;
        }
        auto v = normalized(to_floats(tok));
        check_dim(v.dim());
        mv.token_vectors.push_back(std::move(v));
      }
      out.push_back(std::move(mv));
    });
    return out;
  }

  const EmbedderSpec& spec() const override { return spec_; }

 private:
  template <typename Sink>
  void for_each_batch(std::span<const std::string> texts, Side side, Sink&& sink) {
    const std::size_t batch = std::max<std::size_t>(1, spec_.batch_size);
    for (std::size_t start = 0; start < texts.size(); start += batch) {
      const auto chunk = texts.subspan(start, std::min(batch, texts.size() - start));
      json input = json::array();
      for (const auto& t : chunk) input.push_back(prefixed(spec_, t, side));
      const json body{{"model", spec_.model}, {"input", std::move(input)}};
      json reply;
      try {
        reply = detail::post_json(spec_.base_url, "/embeddings", body, spec_.api_key,
                                  spec_.timeout_seconds);
      } catch (const Error& e) {
        if (e.category() != ErrorCategory::kProviderError) throw;
        spdlog::warn("embedding batch failed ({}), retrying once", e.what());
        reply = detail::post_json(spec_.base_url, "/embeddings", body, spec_.api_key,
                                  spec_.timeout_seconds);
      }
      auto data = reply.find("data");
      if (data == reply.end() || !data->is_array() || data->size() != chunk.size()) {
        throw Error(ErrorCategory::kProviderError,
                    "embedding response must hold one item per input");
      }
      std::vector<const json*> ordered(chunk.size(), nullptr);
      for (std::size_t i = 0; i < data->size(); ++i) {
        const auto& item = (*data)[i];
        std::size_t pos = i;
        if (item.contains("index") && item["index"].is_number_unsigned()) {
          pos = item["index"].get<std::size_t>();
        }
        if (pos >= ordered.size() || ordered[pos] || !item.contains("embedding")) {
          throw Error(ErrorCategory::kProviderError, "malformed embedding item");
        }
        ordered[pos] = &item["embedding"];
      }
      for (const auto* e : ordered) sink(*e);
      texts_ += chunk.size();
    }
  }

  void check_dim(std::size_t got) {
    std::size_t expected = dim_.load();
    if (expected == 0 && dim_.compare_exchange_strong(expected, got)) return;
    if (got != expected) {
      throw Error(ErrorCategory::kDimensionMismatch,
                  "provider returned dim " + std::to_string(got) + ", expected " +
                      std::to_string(expected));
    }
  }

  EmbedderSpec spec_;
  std::atomic<std::size_t> dim_;
};

}  // namespace

std::unique_ptr<Embedder> make_embedder(const EmbedderSpec& spec) {
  switch (spec.kind) {
    case EmbedderKind::kMockDense:
    case EmbedderKind::kMockMulti:
      return std::make_unique<MockEmbedder>(spec);
    case EmbedderKind::kRemoteDense:
    case EmbedderKind::kRemoteMulti:
      return std::make_unique<RemoteEmbedder>(spec);
  }
  throw Error(ErrorCategory::kConfigError, "unknown embedder kind");
}

DenseVector embed_dense(std::string_view text, const EmbedderSpec& spec) {
  const std::string s(text);
  return make_embedder(spec)->embed_dense(std::span(&s, 1)).front();
}

MultiVector embed_multi(std::string_view text, const EmbedderSpec& spec) {
  const std::string s(text);
  return make_embedder(spec)->embed_multi(std::span(&s, 1)).front();
}

namespace {

json floats_json(const DenseVector& v) {
  json arr = json::array();
  for (const float x : v.values) arr.push_back(x);
  return arr;
}

template <typename Fn>
void read_store_lines(const std::filesystem::path& path, Fn&& fn) {
  const auto text = detail::read_file(path);
  std::size_t line = 0;
  std::size_t start = 0;
  while (start < text.size()) {
    auto end = text.find('\n', start);
    if (end == std::string::npos) end = text.size();
    ++line;
    const auto piece = std::string_view(text).substr(start, end - start);
    start = end + 1;
    if (piece.empty()) continue;
    try {
      fn(json::parse(piece));
    } catch (const json::exception& e) {
      throw ParseError(path.string(), line, e.what());
    }
  }
}

DenseVector dense_from_json(const json& arr, std::size_t dim) {
  DenseVector v{arr.get<std::vector<float>>()};
  if (v.dim() != dim) {
    throw Error(ErrorCategory::kDimensionMismatch, "stored vector length disagrees with dim");
  }
  return v;
}

}  // namespace

void write_dense_store(const std::filesystem::path& path, std::string_view strategy,
                       std::span<const DenseRecord> records) {
  std::string out;
  for (const auto& r : records) {
    out += json{{"table_id", r.table_id},
                {"strategy", strategy},
                {"dim", r.vector.dim()},
                {"values", floats_json(r.vector)}}
               .dump();
    out += '\n';
  }
  detail::write_file(path, out);
}

std::vector<DenseRecord> read_dense_store(const std::filesystem::path& path) {
  std::vector<DenseRecord> records;
  read_store_lines(path, [&](const json& j) {
    const auto dim = j.at("dim").get<std::size_t>();
    records.push_back({j.at("table_id").get<std::string>(), dense_from_json(j.at("values"), dim)});
  });
  return records;
}

void write_multi_store(const std::filesystem::path& path, std::string_view strategy,
                       std::span<const MultiRecord> records) {
  std::string out;
  for (const auto& r : records) {
    json tokens = json::array();
    for (const auto& t : r.vector.token_vectors) tokens.push_back(floats_json(t));
    out += json{{"table_id", r.table_id},
                {"strategy", strategy},
                {"dim", r.vector.dim()},
                {"tokens", std::move(tokens)}}
               .dump();
    out += '\n';
  }
  detail::write_file(path, out);
}

std::vector<MultiRecord> read_multi_store(const std::filesystem::path& path) {
  std::vector<MultiRecord> records;
  read_store_lines(path, [&](const json& j) {
    const auto dim = j.at("dim").get<std::size_t>();
    MultiRecord r{j.at("table_id").get<std::string>(), {}};
    for (const auto& t : j.at("tokens")) r.vector.token_vectors.push_back(dense_from_json(t, dim));
    records.push_back(std::move(r));
  });
  return records;
}

}  // namespace qgpt
