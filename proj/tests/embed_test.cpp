#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "qgpt/embed.hpp"
#include "qgpt/error.hpp"
#include "test_util.hpp"

namespace qgpt {
namespace {

EmbedderSpec mock_spec(std::size_t dim = 384, std::uint64_t seed = 13) {
  EmbedderSpec s;
  s.kind = EmbedderKind::kMockDense;
  s.dim = dim;
  s.seed = seed;
  return s;
}

EmbedderSpec multi_spec(std::size_t dim = 64, std::size_t max_tokens = 512) {
  auto s = mock_spec(dim);
  s.kind = EmbedderKind::kMockMulti;
  s.max_tokens = max_tokens;
  return s;
}

double norm(const DenseVector& v) {
  double s = 0;
  for (const float x : v.values) s += static_cast<double>(x) * x;
  return std::sqrt(s);
}

// Seed under which every token in `tokens` lands in its own slot.
std::uint64_t collision_free_seed(const std::vector<std::string>& tokens, std::size_t dim) {
  for (std::uint64_t seed = 0;; ++seed) {
    std::set<std::size_t> slots;
    for (const auto& t : tokens) slots.insert(mock_token_index(t, seed, dim));
    if (slots.size() == tokens.size()) return seed;
  }
}

TEST(MockDense, DeterministicAndUnitNorm) {
  const auto spec = mock_spec();
  const auto a = embed_dense("Revenue by region in 2023", spec);
  const auto b = embed_dense("Revenue by region in 2023", spec);
  EXPECT_EQ(a.values, b.values);
  EXPECT_NEAR(norm(a), 1.0, 1e-6);
  EXPECT_EQ(a.dim(), 384u);
}

TEST(MockDense, OrderInsensitive) {
  const auto spec = mock_spec();
  EXPECT_EQ(embed_dense("alpha beta", spec).values, embed_dense("beta alpha", spec).values);
  EXPECT_EQ(embed_dense("Alpha  BETA", spec).values, embed_dense("beta alpha", spec).values);
}

TEST(MockDense, SingleTokenIsOneHot) {
  auto spec = mock_spec(8);
  const auto v = embed_dense("a", spec);
  const auto slot = mock_token_index("a", *spec.seed, 8);
  for (std::size_t i = 0; i < 8; ++i) EXPECT_FLOAT_EQ(v.values[i], i == slot ? 1.0F : 0.0F);
}

TEST(MockDense, DisjointTokensAreOrthogonal) {
  const std::vector<std::string> toks{"alpha", "beta", "gamma", "delta"};
  auto spec = mock_spec(64, collision_free_seed(toks, 64));
  EXPECT_NEAR(inner_product(embed_dense("alpha beta", spec), embed_dense("gamma delta", spec)),
              0.0, 1e-9);
}

TEST(MockDense, HalfOverlapCosine) {
  // {a,b,c,d} vs {a,b,e,f}: two shared unit entries, both norms 2 -> 2/4.
  const std::vector<std::string> toks{"a", "b", "c", "d", "e", "f"};
  auto spec = mock_spec(32, collision_free_seed(toks, 32));
  EXPECT_NEAR(inner_product(embed_dense("a b c d", spec), embed_dense("a b e f", spec)), 0.5,
              1e-6);
  // Repeated token: {a,a,b} vs {a}: (2)/(sqrt(5)*1).
  EXPECT_NEAR(inner_product(embed_dense("a a b", spec), embed_dense("a", spec)),
              2.0 / std::sqrt(5.0), 1e-6);
}

TEST(MockDense, SimilarityGrowsWithOverlap) {
  const std::vector<std::string> toks{"w1", "w2", "w3", "w4", "x1", "x2", "x3", "x4"};
  auto spec = mock_spec(256, collision_free_seed(toks, 256));
  const auto anchor = embed_dense("w1 w2 w3 w4", spec);
  double previous = -1.0;
  for (const char* text : {"x1 x2 x3 x4", "w1 x2 x3 x4", "w1 w2 x3 x4", "w1 w2 w3 x4",
                           "w1 w2 w3 w4"}) {
    const double s = inner_product(anchor, embed_dense(text, spec));
    EXPECT_GT(s, previous) << text;
    previous = s;
  }
}

TEST(MockDense, PunctuationIgnoredWhenWordsExist) {
  const auto spec = mock_spec();
  EXPECT_EQ(embed_dense("| a | b |", spec).values, embed_dense("a b", spec).values);
  EXPECT_NEAR(norm(embed_dense("|||", spec)), 1.0, 1e-6);
  EXPECT_THROW(embed_dense("   ", spec), Error);
}

TEST(MockDense, PrefixesApplyPerSide) {
  auto spec = mock_spec();
  spec.query_prefix = "query:";
  auto embedder = make_embedder(spec);
  const std::vector<std::string> text{"tallest building"};
  const auto doc = embedder->embed_dense(text, Side::kDocument);
  const auto query = embedder->embed_dense(text, Side::kQuery);
  EXPECT_NE(doc[0].values, query[0].values);
  EXPECT_EQ(doc[0].values, embed_dense("tallest building", mock_spec()).values);
}

TEST(MockDense, RequiresSeedAndRejectsWrongShape) {
  auto spec = mock_spec();
  spec.seed.reset();
  EXPECT_THROW(make_embedder(spec), Error);
  auto dense = make_embedder(mock_spec());
  const std::vector<std::string> t{"x"};
  EXPECT_THROW(dense->embed_multi(t), Error);
}

TEST(MockMulti, OneVectorPerToken) {
  const auto mv = embed_multi("sales by region", multi_spec());
  ASSERT_EQ(mv.size(), 3u);
  for (const auto& v : mv.token_vectors) EXPECT_NEAR(norm(v), 1.0, 1e-6);
}

TEST(MockMulti, RepeatedTokenGivesIdenticalVectors) {
  const auto mv = embed_multi("x y x", multi_spec());
  EXPECT_EQ(mv.token_vectors[0].values, mv.token_vectors[2].values);
}

TEST(MockMulti, TruncatesAtCapAndCounts) {
  auto embedder = make_embedder(multi_spec(64, 4));
  const std::vector<std::string> texts{"a b c d e f", "a b"};
  const auto out = embedder->embed_multi(texts);
  EXPECT_EQ(out[0].size(), 4u);
  EXPECT_EQ(out[1].size(), 2u);
  EXPECT_EQ(embedder->stats().truncated, 1u);
  EXPECT_EQ(embedder->stats().texts, 2u);
}

TEST(Vectors, InnerProductChecksDims) {
  EXPECT_THROW(inner_product(DenseVector{{1, 0}}, DenseVector{{1, 0, 0}}), Error);
  EXPECT_THROW(normalized({0, 0}), Error);
  EXPECT_NEAR(norm(normalized({3, 4})), 1.0, 1e-7);
}

TEST(Store, DenseRoundTrip) {
  testing_util::TempDir dir;
  const auto spec = mock_spec(16);
  const std::vector<DenseRecord> records{{"t1", embed_dense("one", spec)},
                                         {"t2", embed_dense("two words", spec)}};
  write_dense_store(dir / "v.jsonl", "QGpT", records);
  const auto back = read_dense_store(dir / "v.jsonl");
  ASSERT_EQ(back.size(), 2u);
  EXPECT_EQ(back[1].table_id, "t2");
  EXPECT_EQ(back[1].vector.values, records[1].vector.values);
}

TEST(Store, MultiRoundTrip) {
  testing_util::TempDir dir;
  const auto spec = multi_spec(8);
  const std::vector<MultiRecord> records{{"t1", embed_multi("a b c", spec)}};
  write_multi_store(dir / "m.jsonl", "pT", records);
  const auto back = read_multi_store(dir / "m.jsonl");
  ASSERT_EQ(back.size(), 1u);
  ASSERT_EQ(back[0].vector.size(), 3u);
  EXPECT_EQ(back[0].vector.token_vectors[2].values, records[0].vector.token_vectors[2].values);
}

}  // namespace
}  // namespace qgpt
