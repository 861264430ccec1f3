#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qgpt {

struct DenseVector {
  std::vector<float> values;

  std::size_t dim() const noexcept { return values.size(); }
  bool operator==(const DenseVector&) const = default;
};

/// Scales `values` to unit L2 norm. Throws kInvalidArgument on a zero vector.
DenseVector normalized(std::vector<float> values);

/// Dot product accumulated in double. Throws kDimensionMismatch.
double inner_product(const DenseVector& a, const DenseVector& b);

struct MultiVector {
  std::vector<DenseVector> token_vectors;

  std::size_t dim() const noexcept {
    return token_vectors.empty() ? 0 : token_vectors.front().dim();
  }
  std::size_t size() const noexcept { return token_vectors.size(); }
  bool operator==(const MultiVector&) const = default;
};

enum class EmbedderKind { kRemoteDense, kRemoteMulti, kMockDense, kMockMulti };

std::string_view to_string(EmbedderKind kind);
EmbedderKind parse_embedder_kind(std::string_view name);

enum class Side { kDocument, kQuery };

struct EmbedderSpec {
  EmbedderKind kind = EmbedderKind::kMockDense;
  std::size_t dim = 384;              // 0 for remote kinds: adopt the provider's dim
  std::optional<std::uint64_t> seed;  // required by mock kinds
  std::size_t max_tokens = 512;       // per-text cap for multi-vector kinds
  std::size_t batch_size = 32;
  std::string model;
  std::string base_url;
  std::string api_key;
  int timeout_seconds = 120;
  std::string query_prefix;
  std::string document_prefix;

  bool multi() const noexcept {
    return kind == EmbedderKind::kRemoteMulti || kind == EmbedderKind::kMockMulti;
  }
};

struct EmbedStats {
  std::size_t texts = 0;
  std::size_t truncated = 0;  // multi-vector texts cut at max_tokens
};

/// Batch embedder. Safe for concurrent calls. Every emitted vector has unit
/// norm; dense kinds reject embed_multi and vice versa (kInvalidArgument).
class Embedder {
 public:
  virtual ~Embedder() = default;

  virtual std::vector<DenseVector> embed_dense(std::span<const std::string> texts,
                                               Side side = Side::kDocument) = 0;
  virtual std::vector<MultiVector> embed_multi(std::span<const std::string> texts,
                                               Side side = Side::kDocument) = 0;

  virtual const EmbedderSpec& spec() const = 0;
  EmbedStats stats() const { return {texts_.load(), truncated_.load()}; }

 protected:
  std::atomic<std::size_t> texts_{0};
  std::atomic<std::size_t> truncated_{0};
};

std::unique_ptr<Embedder> make_embedder(const EmbedderSpec& spec);

/// Single-text conveniences over make_embedder(spec).
DenseVector embed_dense(std::string_view text, const EmbedderSpec& spec);
MultiVector embed_multi(std::string_view text, const EmbedderSpec& spec);

/// Slot in [0, dim) that the mock embedders assign to `token`.
std::size_t mock_token_index(std::string_view token, std::uint64_t seed, std::size_t dim);

/// Tokens the mock embedders hash: lower-cased word tokens, or the
/// punctuation tokens when the text has no words.
std::vector<std::string> mock_tokens(std::string_view text);

// ---------------------------------------------------------------------------
// Vector store files: one JSON record per line.
//   dense: {"table_id", "strategy", "dim", "values": [...]}
//   multi: {"table_id", "strategy", "dim", "tokens": [[...], ...]}

struct DenseRecord {
  std::string table_id;
  DenseVector vector;
};

struct MultiRecord {
  std::string table_id;
  MultiVector vector;
};

void write_dense_store(const std::filesystem::path& path, std::string_view strategy,
                       std::span<const DenseRecord> records);
std::vector<DenseRecord> read_dense_store(const std::filesystem::path& path);

void write_multi_store(const std::filesystem::path& path, std::string_view strategy,
                       std::span<const MultiRecord> records);
std::vector<MultiRecord> read_multi_store(const std::filesystem::path& path);

}  // namespace qgpt
