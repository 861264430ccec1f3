#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "qgpt/embed.hpp"

namespace qgpt {

struct Hit {
  std::string id;
  double score = 0.0;

  bool operator==(const Hit&) const = default;
};

/// Ranked hits, ordered by (score desc, id asc), at most k long.
using SearchResult = std::vector<Hit>;

/// The ranking order: higher score first, lower id on equal scores.
inline bool ranks_before(const Hit& a, const Hit& b) {
  return a.score != b.score ? a.score > b.score : a.id < b.id;
}

/// Best `k` hits in ranking order.
SearchResult top_k(std::vector<Hit> hits, std::size_t k);

/// Inverted-file index over unit vectors with exact scans inside each list.
class DenseIndex {
 public:
  struct Posting {
    std::vector<std::string> ids;
    std::vector<DenseVector> vectors;
  };

  std::size_t dim() const noexcept { return dim_; }
  std::size_t nlist() const noexcept { return centroids_.size(); }
  std::size_t size() const noexcept;
  bool trained() const noexcept { return !centroids_.empty(); }

  const std::vector<DenseVector>& centroids() const noexcept { return centroids_; }
  const std::vector<Posting>& postings() const noexcept { return postings_; }

  /// Versioned little-endian binary image: magic, version, dim, nlist,
  /// vector count, centroids, postings, then a CRC-32 of all prior bytes.
  std::string serialize() const;
  static DenseIndex deserialize(std::string_view bytes);

  void save(const std::filesystem::path& path) const;
  static DenseIndex load(const std::filesystem::path& path);

 private:
  friend DenseIndex build_ivf(std::span<const DenseRecord>, std::size_t, std::uint64_t, int);

  std::size_t dim_ = 0;
  std::vector<DenseVector> centroids_;
  std::vector<Posting> postings_;
};

/// Seeded spherical k-means (k-means++ seeding, at most `max_iterations`
/// Lloyd rounds, inner-product assignment). nlist is clamped to the number of
/// vectors. Throws kDimensionMismatch on mixed dims, kInvalidArgument when
/// `records` is empty.
DenseIndex build_ivf(std::span<const DenseRecord> records, std::size_t nlist,
                     std::uint64_t seed, int max_iterations = 20);

/// Scans the postings of the `nprobe` centroids closest to `query`.
SearchResult search_dense(const DenseIndex& index, const DenseVector& query,
                          std::size_t k, std::size_t nprobe);

/// Exhaustive inner-product scan.
SearchResult brute_force_search(std::span<const DenseRecord> records,
                                const DenseVector& query, std::size_t k);

/// Sum over query tokens of the best inner product with any document token.
double maxsim_score(const MultiVector& query, const MultiVector& doc);

class MultiIndex {
 public:
  /// Throws kDuplicateId on a repeated id, kDimensionMismatch on a dim change.
  void add(std::string id, MultiVector vector);

  std::size_t size() const noexcept { return ids_.size(); }
  std::size_t dim() const noexcept { return dim_; }
  const std::vector<std::string>& ids() const noexcept { return ids_; }
  const std::vector<MultiVector>& vectors() const noexcept { return vectors_; }

  std::string serialize() const;
  static MultiIndex deserialize(std::string_view bytes);
  void save(const std::filesystem::path& path) const;
  static MultiIndex load(const std::filesystem::path& path);

 private:
  std::size_t dim_ = 0;
  std::vector<std::string> ids_;
  std::vector<MultiVector> vectors_;
};

/// Exhaustive MaxSim ranking over every entry.
SearchResult search_multi(const MultiIndex& index, const MultiVector& query, std::size_t k);

/// MaxSim re-ranking restricted to `candidates` (e.g. a dense first stage).
/// Unknown candidate ids are ignored.
SearchResult search_multi_candidates(const MultiIndex& index, const MultiVector& query,
                                     std::span<const std::string> candidates, std::size_t k);

}  // namespace qgpt
