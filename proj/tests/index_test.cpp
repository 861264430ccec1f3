#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <set>

#include "qgpt/error.hpp"
#include "qgpt/index.hpp"
#include "test_util.hpp"

namespace qgpt {
namespace {

DenseVector random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<float> g;
  std::vector<float> v(dim);
  for (auto& x : v) x = g(rng);
  return normalized(std::move(v));
}

std::vector<DenseRecord> random_records(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<DenseRecord> out;
  char id[16];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(id, sizeof id, "v%05zu", i);
    out.push_back({id, random_unit(rng, dim)});
  }
  return out;
}

MultiVector random_multi(std::mt19937_64& rng, std::size_t tokens, std::size_t dim) {
  MultiVector mv;
  for (std::size_t i = 0; i < tokens; ++i) mv.token_vectors.push_back(random_unit(rng, dim));
  return mv;
}

double naive_maxsim(const MultiVector& q, const MultiVector& d) {
  double total = 0;
  for (const auto& qt : q.token_vectors) {
    double best = -1e300;
    for (const auto& dt : d.token_vectors) {
      double s = 0;
      for (std::size_t i = 0; i < qt.values.size(); ++i) {
        s += static_cast<double>(qt.values[i]) * dt.values[i];
      }
      best = std::max(best, s);
    }
    total += best;
  }
  return total;
}

ErrorCategory category_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.category();
  }
  ADD_FAILURE() << "no error";
  return ErrorCategory::kInvalidArgument;
}

// ---------------------------------------------------------------------------

TEST(BruteForce, SingleEntry) {
  const std::vector<DenseRecord> r{{"only", normalized({1, 0})}};
  const auto hits = brute_force_search(r, normalized({0, 1}), 5);
  ASSERT_EQ(hits.size(), 1u);
  EXPECT_EQ(hits[0].id, "only");
}

TEST(BruteForce, TiesGoToLowerId) {
  const std::vector<DenseRecord> r{{"b", normalized({1, 0})}, {"a", normalized({1, 0})}};
  const auto hits = brute_force_search(r, normalized({1, 0}), 2);
  EXPECT_EQ(hits[0].id, "a");
  EXPECT_EQ(hits[1].id, "b");
}

TEST(BruteForce, HandComputedOrder) {
  // q = (1,0); scores: x=(0.6,0.8)->0.6, y=(0.8,-0.6)->0.8, z=(-1,0)->-1.
  const std::vector<DenseRecord> r{{"x", DenseVector{{0.6F, 0.8F}}},
                                   {"y", DenseVector{{0.8F, -0.6F}}},
                                   {"z", DenseVector{{-1.0F, 0.0F}}}};
  const auto hits = brute_force_search(r, DenseVector{{1.0F, 0.0F}}, 3);
  ASSERT_EQ(hits.size(), 3u);
  EXPECT_EQ(hits[0].id, "y");
  EXPECT_EQ(hits[1].id, "x");
  EXPECT_EQ(hits[2].id, "z");
  EXPECT_NEAR(hits[0].score, 0.8, 1e-6);
  EXPECT_NEAR(hits[2].score, -1.0, 1e-6);
}

TEST(Ivf, NlistClampedToCorpus) {
  const auto records = random_records(10, 8, 1);
  const auto index = build_ivf(records, 256, 42);
  EXPECT_EQ(index.nlist(), 10u);
  EXPECT_EQ(index.size(), 10u);
}

TEST(Ivf, IdenticalVectorsShareOneList) {
  std::vector<DenseRecord> records;
  for (int i = 0; i < 12; ++i) records.push_back({"id" + std::to_string(i), normalized({1, 2, 3})});
  const auto index = build_ivf(records, 4, 7);
  std::size_t non_empty = 0;
  for (const auto& p : index.postings()) non_empty += p.ids.empty() ? 0 : 1;
  EXPECT_EQ(non_empty, 1u);
  EXPECT_EQ(index.size(), 12u);
}

TEST(Ivf, SeededBuildIsByteIdentical) {
  const auto records = random_records(300, 16, 3);
  EXPECT_EQ(build_ivf(records, 16, 99).serialize(), build_ivf(records, 16, 99).serialize());
}

TEST(Ivf, PartitionProperty) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto records = random_records(50 + seed * 37, 8, seed);
    const auto index = build_ivf(records, 1 + seed * 3, seed);
    std::multiset<std::string> seen;
    for (const auto& p : index.postings()) {
      ASSERT_EQ(p.ids.size(), p.vectors.size());
      seen.insert(p.ids.begin(), p.ids.end());
    }
    std::multiset<std::string> expected;
    for (const auto& r : records) expected.insert(r.table_id);
    ASSERT_EQ(seen, expected);
  }
}

TEST(Ivf, FullProbeIsExact) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto records = random_records(400, 12, seed);
    const auto index = build_ivf(records, 20, seed);
    std::mt19937_64 rng(seed + 1000);
    for (int q = 0; q < 20; ++q) {
      const auto query = random_unit(rng, 12);
      ASSERT_EQ(search_dense(index, query, 10, index.nlist()),
                brute_force_search(records, query, 10));
    }
  }
}

TEST(Ivf, StoredVectorRanksFirst) {
  const auto records = random_records(200, 16, 5);
  const auto index = build_ivf(records, 8, 5);
  for (std::size_t i = 0; i < 20; ++i) {
    const auto hits = search_dense(index, records[i].vector, 1, 2);
    ASSERT_EQ(hits[0].id, records[i].table_id);
    ASSERT_NEAR(hits[0].score, 1.0, 1e-6);
  }
}

TEST(Ivf, PartialProbeRecall) {
  const auto records = random_records(1000, 16, 2024);
  const auto index = build_ivf(records, 32, 2024);
  std::mt19937_64 rng(77);
  double found = 0;
  const int queries = 100;
  for (int q = 0; q < queries; ++q) {
    const auto query = random_unit(rng, 16);
    const auto truth = brute_force_search(records, query, 10);
    const auto got = search_dense(index, query, 10, 16);
    std::set<std::string> ids;
    for (const auto& h : got) ids.insert(h.id);
    for (const auto& h : truth) found += ids.count(h.id);
  }
  EXPECT_GE(found / (queries * 10.0), 0.8);
}

TEST(Ivf, RankStabilityUnderOrthogonalInsert) {
  std::vector<DenseRecord> records;
  std::mt19937_64 rng(8);
  // Vectors live in the first 8 coordinates; the extra one is on axis 9.
  for (int i = 0; i < 60; ++i) {
    auto v = random_unit(rng, 8).values;
    v.resize(10, 0.0F);
    records.push_back({"r" + std::to_string(i), DenseVector{v}});
  }
  auto q = random_unit(rng, 8).values;
  q.resize(10, 0.0F);
  const DenseVector query{q};
  const auto before = brute_force_search(records, query, 60);
  std::vector<float> ortho(10, 0.0F);
  ortho[9] = 1.0F;
  records.push_back({"orthogonal", DenseVector{ortho}});
  auto after = brute_force_search(records, query, 61);
  after.erase(std::remove_if(after.begin(), after.end(),
                             [](const Hit& h) { return h.id == "orthogonal"; }),
              after.end());
  EXPECT_EQ(before, after);
}

TEST(Ivf, ArgumentChecks) {
  const auto records = random_records(20, 4, 1);
  const auto index = build_ivf(records, 4, 1);
  EXPECT_EQ(category_of([&] { search_dense(index, records[0].vector, 5, 0); }),
            ErrorCategory::kInvalidArgument);
  EXPECT_EQ(category_of([&] { search_dense(index, records[0].vector, 5, 5); }),
            ErrorCategory::kInvalidArgument);
  EXPECT_EQ(category_of([&] { search_dense(index, normalized({1, 0}), 5, 1); }),
            ErrorCategory::kDimensionMismatch);
  EXPECT_EQ(category_of([] { build_ivf(std::vector<DenseRecord>{}, 4, 1); }),
            ErrorCategory::kInvalidArgument);
  auto mixed = records;
  mixed.push_back({"odd", normalized({1, 0})});
  EXPECT_EQ(category_of([&] { build_ivf(mixed, 4, 1); }), ErrorCategory::kDimensionMismatch);
}

TEST(IvfFile, RoundTrip) {
  testing_util::TempDir dir;
  const auto records = random_records(100, 8, 4);
  const auto index = build_ivf(records, 6, 4);
  index.save(dir / "x.ivf");
  const auto back = DenseIndex::load(dir / "x.ivf");
  EXPECT_EQ(back.serialize(), index.serialize());
  EXPECT_EQ(back.dim(), 8u);
  EXPECT_EQ(back.nlist(), 6u);
  std::mt19937_64 rng(1);
  const auto q = random_unit(rng, 8);
  EXPECT_EQ(search_dense(back, q, 5, 3), search_dense(index, q, 5, 3));
}

TEST(IvfFile, CorruptionDetected) {
  const auto bytes = build_ivf(random_records(30, 4, 2), 3, 2).serialize();
  EXPECT_EQ(bytes.substr(0, 8), std::string("QGPTIVF\0", 8));
  auto flipped = bytes;
  flipped[bytes.size() / 2] ^= 0x01;
  EXPECT_EQ(category_of([&] { DenseIndex::deserialize(flipped); }), ErrorCategory::kIndexFormat);
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  EXPECT_EQ(category_of([&] { DenseIndex::deserialize(bad_magic); }),
            ErrorCategory::kIndexFormat);
  EXPECT_EQ(category_of([&] { DenseIndex::deserialize(bytes.substr(0, 20)); }),
            ErrorCategory::kIndexFormat);
}

// ---------------------------------------------------------------------------

TEST(MaxSim, SelfScoreEqualsTokenCount) {
  std::mt19937_64 rng(6);
  for (std::size_t n = 1; n <= 10; ++n) {
    const auto v = random_multi(rng, n, 16);
    EXPECT_NEAR(maxsim_score(v, v), static_cast<double>(n), 1e-6);
  }
}

TEST(MaxSim, DisjointOneHotsScoreZero) {
  const MultiVector q{{DenseVector{{1, 0, 0, 0}}, DenseVector{{0, 1, 0, 0}}}};
  const MultiVector d{{DenseVector{{0, 0, 1, 0}}, DenseVector{{0, 0, 0, 1}}}};
  EXPECT_EQ(maxsim_score(q, d), 0.0);
}

TEST(MaxSim, HandComputedTwoByThree) {
  // q1=(1,0), q2=(0,1); d1=(0.6,0.8), d2=(0.8,0.6), d3=(0,-1).
  // Row maxima: q1 -> 0.8 (d2), q2 -> 0.8 (d1). Sum 1.6.
  const MultiVector q{{DenseVector{{1, 0}}, DenseVector{{0, 1}}}};
  const MultiVector d{{DenseVector{{0.6F, 0.8F}}, DenseVector{{0.8F, 0.6F}}, DenseVector{{0, -1}}}};
  EXPECT_NEAR(maxsim_score(q, d), 1.6, 1e-6);
}

TEST(MaxSim, BoundsAndPermutationInvariance) {
  std::mt19937_64 rng(10);
  for (int trial = 0; trial < 100; ++trial) {
    // Non-negative one-hot style vectors keep the lower bound meaningful.
    auto q = random_multi(rng, 1 + rng() % 8, 8);
    auto d = random_multi(rng, 1 + rng() % 8, 8);
    for (auto* mv : {&q, &d}) {
      for (auto& t : mv->token_vectors) {
        for (auto& x : t.values) x = std::abs(x);
      }
    }
    const double s = maxsim_score(q, d);
    ASSERT_GE(s, 0.0);
    ASSERT_LE(s, static_cast<double>(q.size()) + 1e-6);
    auto dp = d;
    std::shuffle(dp.token_vectors.begin(), dp.token_vectors.end(), rng);
    auto qp = q;
    std::shuffle(qp.token_vectors.begin(), qp.token_vectors.end(), rng);
    ASSERT_NEAR(maxsim_score(q, dp), s, 1e-9);
    ASSERT_NEAR(maxsim_score(qp, d), s, 1e-9);
  }
}

TEST(MaxSim, DimMismatch) {
  const MultiVector a{{DenseVector{{1, 0}}}};
  const MultiVector b{{DenseVector{{1, 0, 0}}}};
  EXPECT_EQ(category_of([&] { maxsim_score(a, b); }), ErrorCategory::kDimensionMismatch);
}

MultiIndex random_multi_index(std::mt19937_64& rng, std::size_t n, std::size_t dim) {
  MultiIndex index;
  for (std::size_t i = 0; i < n; ++i) {
    index.add("d" + std::to_string(100 + i), random_multi(rng, 1 + rng() % 12, dim));
  }
  return index;
}

TEST(MultiSearch, MatchesNaiveScorer) {
  std::mt19937_64 rng(20);
  const auto index = random_multi_index(rng, 20, 16);
  for (int trial = 0; trial < 10; ++trial) {
    const auto q = random_multi(rng, 1 + rng() % 6, 16);
    std::vector<Hit> expected;
    for (std::size_t i = 0; i < index.size(); ++i) {
      expected.push_back({index.ids()[i], naive_maxsim(q, index.vectors()[i])});
    }
    std::sort(expected.begin(), expected.end(), [](const Hit& a, const Hit& b) {
      return a.score != b.score ? a.score > b.score : a.id < b.id;
    });
    const auto got = search_multi(index, q, 20);
    ASSERT_EQ(got.size(), expected.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      ASSERT_EQ(got[i].id, expected[i].id);
      ASSERT_NEAR(got[i].score, expected[i].score, 1e-9);
    }
  }
}

TEST(MultiSearch, SelfFirstAndFullRankingWhenKLarge) {
  std::mt19937_64 rng(21);
  const auto index = random_multi_index(rng, 8, 16);
  const auto hits = search_multi(index, index.vectors()[3], 100);
  EXPECT_EQ(hits.size(), 8u);
  EXPECT_EQ(hits[0].id, index.ids()[3]);
}

TEST(MultiSearch, CandidateRestriction) {
  std::mt19937_64 rng(22);
  const auto index = random_multi_index(rng, 10, 8);
  const std::vector<std::string> candidates{index.ids()[2], index.ids()[5], "unknown"};
  const auto hits = search_multi_candidates(index, index.vectors()[5], candidates, 10);
  ASSERT_EQ(hits.size(), 2u);
  EXPECT_EQ(hits[0].id, index.ids()[5]);
}

TEST(MultiIndexTest, AddChecksAndRoundTrip) {
  std::mt19937_64 rng(23);
  auto index = random_multi_index(rng, 5, 8);
  EXPECT_EQ(category_of([&] { index.add("d100", random_multi(rng, 2, 8)); }),
            ErrorCategory::kDuplicateId);
  EXPECT_EQ(category_of([&] { index.add("new", random_multi(rng, 2, 4)); }),
            ErrorCategory::kDimensionMismatch);
  testing_util::TempDir dir;
  index.save(dir / "m.mvi");
  const auto back = MultiIndex::load(dir / "m.mvi");
  EXPECT_EQ(back.ids(), index.ids());
  EXPECT_EQ(back.vectors(), index.vectors());
  auto bytes = index.serialize();
  bytes[bytes.size() - 10] ^= 0x40;
  EXPECT_EQ(category_of([&] { MultiIndex::deserialize(bytes); }), ErrorCategory::kIndexFormat);
}

}  // namespace
}  // namespace qgpt
