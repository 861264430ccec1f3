#include "qgpt/index.hpp"

#include <zlib.h>

#include <algorithm>
#include <bit>
#include <cstring>
#include <limits>
#include <numeric>
#include <random>
#include <unordered_map>

#include "io_util.hpp"
#include "qgpt/error.hpp"

namespace qgpt {

SearchResult top_k(std::vector<Hit> hits, std::size_t k) {
  const auto n = std::min(k, hits.size());
  std::partial_sort(hits.begin(), hits.begin() + static_cast<std::ptrdiff_t>(n), hits.end(),
                    ranks_before);
  hits.resize(n);
  return hits;
}

std::size_t DenseIndex::size() const noexcept {
  std::size_t n = 0;
  for (const auto& p : postings_) n += p.ids.size();
  return n;
}

namespace {

// Uniform double in [0, 1) from the raw engine output, so sequences do not
// depend on the standard library's distribution implementations.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

std::size_t nearest_centroid(const DenseVector& v, const std::vector<DenseVector>& centroids,
                             double* best_score = nullptr) {
  std::size_t best = 0;
  double best_ip = -std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < centroids.size(); ++c) {
    const double ip = inner_product(v, centroids[c]);
    if (ip > best_ip) {
      best_ip = ip;
      best = c;
    }
  }
  if (best_score) *best_score = best_ip;
  return best;
}

std::vector<DenseVector> kmeanspp_seed(std::span<const DenseRecord> records, std::size_t k,
                                       std::mt19937_64& rng) {
  const std::size_t n = records.size();
  std::vector<DenseVector> centroids;
  centroids.reserve(k);
  centroids.push_back(records[static_cast<std::size_t>(uniform01(rng) * n)].vector);

  // Squared L2 distance on unit vectors is 2 - 2 * ip.
  std::vector<double> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    dist[i] = std::max(0.0, 2.0 - 2.0 * inner_product(records[i].vector, centroids[0]));
  }
  while (centroids.size() < k) {
    const double total = std::accumulate(dist.begin(), dist.end(), 0.0);
    if (!(total > 0.0)) {
      // Every point coincides with a centroid; duplicates stay empty.
      centroids.push_back(centroids.front());
      continue;
    }
    double target = uniform01(rng) * total;
    std::size_t pick = n - 1;
    for (std::size_t i = 0; i < n; ++i) {
      target -= dist[i];
      if (target < 0.0 && dist[i] > 0.0) {
        pick = i;
        break;
      }
    }
    while (dist[pick] <= 0.0) --pick;  // rounding left target >= 0 at the tail
    centroids.push_back(records[pick].vector);
    for (std::size_t i = 0; i < n; ++i) {
      dist[i] = std::min(
          dist[i], std::max(0.0, 2.0 - 2.0 * inner_product(records[i].vector, centroids.back())));
    }
  }
  return centroids;
}

}  // namespace

DenseIndex build_ivf(std::span<const DenseRecord> records, std::size_t nlist,
                     std::uint64_t seed, int max_iterations) {
  if (records.empty()) {
    throw Error(ErrorCategory::kInvalidArgument, "cannot build an index over zero vectors");
  }
  const std::size_t dim = records.front().vector.dim();
  for (const auto& r : records) {
    if (r.vector.dim() != dim) {
      throw Error(ErrorCategory::kDimensionMismatch,
                  "vector '" + r.table_id + "' has dim " + std::to_string(r.vector.dim()) +
                      ", expected " + std::to_string(dim));
    }
  }
  const std::size_t n = records.size();
  const std::size_t k = std::max<std::size_t>(1, std::min(nlist, n));

  std::mt19937_64 rng(seed);
  auto centroids = kmeanspp_seed(records, k, rng);

  std::vector<std::size_t> assign(n, std::numeric_limits<std::size_t>::max());
  std::vector<double> assign_score(n, 0.0);
  for (int iter = 0; iter < max_iterations; ++iter) {
    bool changed = false;
    for (std::size_t i = 0; i < n; ++i) {
      const auto c = nearest_centroid(records[i].vector, centroids, &assign_score[i]);
      changed |= c != assign[i];
      assign[i] = c;
    }
    if (!changed) break;

    std::vector<std::vector<double>> sums(k, std::vector<double>(dim, 0.0));
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t i = 0; i < n; ++i) {
      ++counts[assign[i]];
      const auto& v = records[i].vector.values;
      auto& s = sums[assign[i]];
      for (std::size_t d = 0; d < dim; ++d) s[d] += v[d];
    }
    std::vector<bool> taken(n, false);
    for (std::size_t c = 0; c < k; ++c) {
      if (counts[c] == 0) {
        // Re-seed an empty list with the worst-served point, if any point is
        // not already sitting on its centroid.
        std::size_t worst = n;
        for (std::size_t i = 0; i < n; ++i) {
          if (taken[i] || counts[assign[i]] < 2) continue;
          if (worst == n || assign_score[i] < assign_score[worst]) worst = i;
        }
        if (worst != n && assign_score[worst] < 1.0 - 1e-9) {
          taken[worst] = true;
          --counts[assign[worst]];
          centroids[c] = records[worst].vector;
        }
        continue;
      }
      std::vector<float> mean(dim);
      double sq = 0.0;
      for (std::size_t d = 0; d < dim; ++d) {
        mean[d] = static_cast<float>(sums[c][d] / static_cast<double>(counts[c]));
        sq += static_cast<double>(mean[d]) * mean[d];
      }
      if (sq > 0.0) centroids[c] = normalized(std::move(mean));
    }
  }

  DenseIndex index;
  index.dim_ = dim;
  index.postings_.resize(k);
  for (std::size_t i = 0; i < n; ++i) {
    auto& p = index.postings_[nearest_centroid(records[i].vector, centroids)];
    p.ids.push_back(records[i].table_id);
    p.vectors.push_back(records[i].vector);
  }
  index.centroids_ = std::move(centroids);
  return index;
}

SearchResult search_dense(const DenseIndex& index, const DenseVector& query, std::size_t k,
                          std::size_t nprobe) {
  if (!index.trained()) {
    throw Error(ErrorCategory::kInvalidArgument, "index is not trained");
  }
  if (query.dim() != index.dim()) {
    throw Error(ErrorCategory::kDimensionMismatch,
                "query dim " + std::to_string(query.dim()) + ", index dim " +
                    std::to_string(index.dim()));
  }
  if (nprobe < 1 || nprobe > index.nlist()) {
    throw Error(ErrorCategory::kInvalidArgument,
                "nprobe must be in [1, " + std::to_string(index.nlist()) + "]");
  }
  std::vector<std::pair<double, std::size_t>> order;
  order.reserve(index.nlist());
  for (std::size_t c = 0; c < index.nlist(); ++c) {
    order.emplace_back(inner_product(query, index.centroids()[c]), c);
  }
  std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(nprobe),
                    order.end(), [](const auto& a, const auto& b) {
                      return a.first != b.first ? a.first > b.first : a.second < b.second;
                    });
  std::vector<Hit> hits;
  for (std::size_t p = 0; p < nprobe; ++p) {
    const auto& posting = index.postings()[order[p].second];
    for (std::size_t i = 0; i < posting.ids.size(); ++i) {
      hits.push_back({posting.ids[i], inner_product(query, posting.vectors[i])});
    }
  }
  return top_k(std::move(hits), k);
}

SearchResult brute_force_search(std::span<const DenseRecord> records, const DenseVector& query,
                                std::size_t k) {
  std::vector<Hit> hits;
  hits.reserve(records.size());
  for (const auto& r : records) hits.push_back({r.table_id, inner_product(query, r.vector)});
  return top_k(std::move(hits), k);
}

double maxsim_score(const MultiVector& query, const MultiVector& doc) {
  if (query.size() > 0 && doc.size() > 0 && query.dim() != doc.dim()) {
    throw Error(ErrorCategory::kDimensionMismatch,
                "query dim " + std::to_string(query.dim()) + ", doc dim " +
                    std::to_string(doc.dim()));
  }
  double total = 0.0;
  for (const auto& q : query.token_vectors) {
    double best = -std::numeric_limits<double>::infinity();
    for (const auto& d : doc.token_vectors) best = std::max(best, inner_product(q, d));
    if (!doc.token_vectors.empty()) total += best;
  }
  return total;
}

void MultiIndex::add(std::string id, MultiVector vector) {
  if (vector.size() == 0) {
    throw Error(ErrorCategory::kInvalidArgument, "multi-vector '" + id + "' has no tokens");
  }
  if (std::find(ids_.begin(), ids_.end(), id) != ids_.end()) {
    throw Error(ErrorCategory::kDuplicateId, "duplicate index id '" + id + "'");
  }
  for (const auto& t : vector.token_vectors) {
    if (t.dim() != vector.dim()) {
      throw Error(ErrorCategory::kDimensionMismatch, "ragged token dims in '" + id + "'");
    }
  }
  if (dim_ == 0) dim_ = vector.dim();
  if (vector.dim() != dim_) {
    throw Error(ErrorCategory::kDimensionMismatch,
                "'" + id + "' has dim " + std::to_string(vector.dim()) + ", index dim " +
                    std::to_string(dim_));
  }
  ids_.push_back(std::move(id));
  vectors_.push_back(std::move(vector));
}

SearchResult search_multi(const MultiIndex& index, const MultiVector& query, std::size_t k) {
  std::vector<Hit> hits;
  hits.reserve(index.size());
  for (std::size_t i = 0; i < index.size(); ++i) {
    hits.push_back({index.ids()[i], maxsim_score(query, index.vectors()[i])});
  }
  return top_k(std::move(hits), k);
}

SearchResult search_multi_candidates(const MultiIndex& index, const MultiVector& query,
                                     std::span<const std::string> candidates, std::size_t k) {
  std::unordered_map<std::string_view, std::size_t> pos;
  for (std::size_t i = 0; i < index.size(); ++i) pos.emplace(index.ids()[i], i);
  std::vector<Hit> hits;
  std::vector<bool> seen(index.size(), false);
  for (const auto& id : candidates) {
    auto it = pos.find(id);
    if (it == pos.end() || seen[it->second]) continue;
    seen[it->second] = true;
    hits.push_back({id, maxsim_score(query, index.vectors()[it->second])});
  }
  return top_k(std::move(hits), k);
}

// ---------------------------------------------------------------------------
// Binary images

namespace {

constexpr char kDenseMagic[8] = {'Q', 'G', 'P', 'T', 'I', 'V', 'F', '\0'};
constexpr char kMultiMagic[8] = {'Q', 'G', 'P', 'T', 'M', 'V', 'I', '\0'};
constexpr std::uint32_t kFormatVersion = 1;

static_assert(std::endian::native == std::endian::little,
              "index images are written in native little-endian order");

class Writer {
 public:
  void bytes(const void* p, std::size_t n) { buf_.append(static_cast<const char*>(p), n); }
  void u32(std::uint32_t v) { bytes(&v, sizeof v); }
  void u64(std::uint64_t v) { bytes(&v, sizeof v); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s.data(), s.size());
  }
  void floats(const DenseVector& v) { bytes(v.values.data(), v.values.size() * sizeof(float)); }
  std::string finish() {
    u32(static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(buf_.data()), static_cast<uInt>(buf_.size()))));
    return std::move(buf_);
  }

 private:
  std::string buf_;
};

class Reader {
 public:
  Reader(std::string_view bytes, const char (&magic)[8]) {
    if (bytes.size() < sizeof magic + 4 ||
        std::memcmp(bytes.data(), magic, sizeof magic) != 0) {
      throw Error(ErrorCategory::kIndexFormat, "bad magic");
    }
    const auto body = bytes.substr(0, bytes.size() - 4);
    std::uint32_t stored = 0;
    std::memcpy(&stored, bytes.data() + body.size(), 4);
    const auto actual = static_cast<std::uint32_t>(
        crc32(0L, reinterpret_cast<const Bytef*>(body.data()), static_cast<uInt>(body.size())));
    if (stored != actual) throw Error(ErrorCategory::kIndexFormat, "checksum mismatch");
    data_ = body.substr(sizeof magic);
    if (u32() != kFormatVersion) {
      throw Error(ErrorCategory::kIndexFormat, "unsupported format version");
    }
  }

  std::uint32_t u32() { return scalar<std::uint32_t>(); }
  std::uint64_t u64() { return scalar<std::uint64_t>(); }
  std::string str() {
    const auto n = u32();
    need(n);
    std::string s(data_.substr(0, n));
    data_.remove_prefix(n);
    return s;
  }
  DenseVector floats(std::size_t dim) {
    need(dim * sizeof(float));
    DenseVector v{std::vector<float>(dim)};
    std::memcpy(v.values.data(), data_.data(), dim * sizeof(float));
    data_.remove_prefix(dim * sizeof(float));
    return v;
  }
  void expect_end() const {
    if (!data_.empty()) throw Error(ErrorCategory::kIndexFormat, "trailing bytes");
  }

 private:
  template <typename T>
  T scalar() {
    need(sizeof(T));
    T v;
    std::memcpy(&v, data_.data(), sizeof v);
    data_.remove_prefix(sizeof v);
    return v;
  }
  void need(std::size_t n) const {
    if (data_.size() < n) throw Error(ErrorCategory::kIndexFormat, "truncated image");
  }

  std::string_view data_;
};

}  // namespace

std::string DenseIndex::serialize() const {
  Writer w;
  w.bytes(kDenseMagic, sizeof kDenseMagic);
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(dim_));
  w.u32(static_cast<std::uint32_t>(centroids_.size()));
  w.u64(size());
  for (const auto& c : centroids_) w.floats(c);
  for (const auto& p : postings_) {
    w.u64(p.ids.size());
    for (std::size_t i = 0; i < p.ids.size(); ++i) {
      w.str(p.ids[i]);
      w.floats(p.vectors[i]);
    }
  }
  return w.finish();
}

DenseIndex DenseIndex::deserialize(std::string_view bytes) {
  Reader r(bytes, kDenseMagic);
  DenseIndex index;
  index.dim_ = r.u32();
  const auto nlist = r.u32();
  const auto total = r.u64();
  for (std::uint32_t c = 0; c < nlist; ++c) index.centroids_.push_back(r.floats(index.dim_));
  index.postings_.resize(nlist);
  std::uint64_t seen = 0;
  for (auto& p : index.postings_) {
    const auto count = r.u64();
    for (std::uint64_t i = 0; i < count; ++i) {
      p.ids.push_back(r.str());
      p.vectors.push_back(r.floats(index.dim_));
    }
    seen += count;
  }
  r.expect_end();
  if (seen != total) throw Error(ErrorCategory::kIndexFormat, "posting sizes disagree with header");
  return index;
}

void DenseIndex::save(const std::filesystem::path& path) const {
  detail::write_file(path, serialize());
}

DenseIndex DenseIndex::load(const std::filesystem::path& path) {
  return deserialize(detail::read_file(path));
}

std::string MultiIndex::serialize() const {
  Writer w;
  w.bytes(kMultiMagic, sizeof kMultiMagic);
  w.u32(kFormatVersion);
  w.u32(static_cast<std::uint32_t>(dim_));
  w.u64(ids_.size());
  for (std::size_t i = 0; i < ids_.size(); ++i) {
    w.str(ids_[i]);
    w.u32(static_cast<std::uint32_t>(vectors_[i].size()));
    for (const auto& t : vectors_[i].token_vectors) w.floats(t);
  }
  return w.finish();
}

MultiIndex MultiIndex::deserialize(std::string_view bytes) {
  Reader r(bytes, kMultiMagic);
  MultiIndex index;
  const auto dim = r.u32();
  const auto n = r.u64();
  for (std::uint64_t i = 0; i < n; ++i) {
    auto id = r.str();
    MultiVector mv;
    const auto tokens = r.u32();
    for (std::uint32_t t = 0; t < tokens; ++t) mv.token_vectors.push_back(r.floats(dim));
    index.add(std::move(id), std::move(mv));
  }
  r.expect_end();
  return index;
}

void MultiIndex::save(const std::filesystem::path& path) const {
  detail::write_file(path, serialize());
}

MultiIndex MultiIndex::load(const std::filesystem::path& path) {
  return deserialize(detail::read_file(path));
}

}  // namespace qgpt
