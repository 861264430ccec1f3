#include <gtest/gtest.h>

#include <algorithm>
#include <map>
#include <random>

#include "json.hpp"
#include "qgpt/error.hpp"
#include "qgpt/eval.hpp"

namespace qgpt {
namespace {

SearchResult ranked(std::initializer_list<const char*> ids) {
  SearchResult out;
  double score = 1.0;
  for (const char* id : ids) {
    out.push_back({id, score});
    score -= 0.1;
  }
  return out;
}

// Five queries whose recall values are worked out by hand below.
struct Fixture {
  std::vector<QueryRecord> queries{
      {"q1", "?", {"A"}},        // A at rank 1
      {"q2", "?", {"B"}},        // B at rank 3
      {"q3", "?", {"A", "B"}},   // A rank 1, B rank 5
      {"q4", "?", {"D"}},        // never retrieved
      {"q5", "?", {"C", "E"}},   // C rank 2, E rank 5
  };
  RunSet runs{
      {"q1", ranked({"A", "B", "C", "D", "E"})},
      {"q2", ranked({"C", "A", "B", "D", "E"})},
      {"q3", ranked({"A", "C", "D", "E", "B"})},
      {"q4", ranked({"A", "B", "C", "E", "F"})},
      {"q5", ranked({"A", "C", "B", "D", "E"})},
  };
};

TEST(Recall, HandArithmeticPartialCredit) {
  const Fixture f;
  const auto report = recall_at_k(f.runs, f.queries, {1, 2, 3, 5});
  // k=1: q1 1, q3 .5                     -> 1.5/5
  // k=2: q1 1, q3 .5, q5 .5              -> 2/5
  // k=3: q1 1, q2 1, q3 .5, q5 .5        -> 3/5
  // k=5: q1 1, q2 1, q3 1, q4 0, q5 1    -> 4/5
  EXPECT_DOUBLE_EQ(report.recall.at(1), 1.5 / 5);
  EXPECT_DOUBLE_EQ(report.recall.at(2), 2.0 / 5);
  EXPECT_DOUBLE_EQ(report.recall.at(3), 3.0 / 5);
  EXPECT_DOUBLE_EQ(report.recall.at(5), 4.0 / 5);
  EXPECT_DOUBLE_EQ(report.per_query[2].recall.at(2), 0.5);
  EXPECT_EQ(report.per_query[2].retrieved, (std::vector<std::string>{"A", "C", "D", "E", "B"}));
}

TEST(Recall, HandArithmeticAllGold) {
  const Fixture f;
  const auto report = recall_at_k(f.runs, f.queries, {2, 5}, RecallMode::kAllGold);
  // k=2: only q1 complete -> 1/5; k=5: q1 q2 q3 q5 -> 4/5
  EXPECT_DOUBLE_EQ(report.recall.at(2), 1.0 / 5);
  EXPECT_DOUBLE_EQ(report.recall.at(5), 4.0 / 5);
  EXPECT_DOUBLE_EQ(report.per_query[2].recall.at(2), 0.0);
}

TEST(Recall, SingleHitAndMean) {
  const std::vector<QueryRecord> qs{{"a", "?", {"X"}}, {"b", "?", {"X", "Y"}}, {"c", "?", {"Z"}}};
  const RunSet runs{{"a", ranked({"X"})}, {"b", ranked({"X", "W"})}, {"c", ranked({"W"})}};
  const auto r = recall_at_k(runs, qs, {1});
  EXPECT_DOUBLE_EQ(r.per_query[0].recall.at(1), 1.0);
  EXPECT_DOUBLE_EQ(r.recall.at(1), 0.5);
}

TEST(Recall, KsAreSortedAndExact) {
  const Fixture f;
  const auto report = recall_at_k(f.runs, f.queries, {10, 2, 5, 2});
  EXPECT_EQ(report.ks, (std::vector<std::size_t>{2, 5, 10}));
  std::vector<std::size_t> keys;
  for (const auto& [k, _] : report.recall) keys.push_back(k);
  EXPECT_EQ(keys, report.ks);
}

TEST(Recall, ShortRunsCountWhatExists) {
  const std::vector<QueryRecord> qs{{"a", "?", {"X"}}};
  const RunSet runs{{"a", ranked({"W", "X"})}};
  EXPECT_DOUBLE_EQ(recall_at_k(runs, qs, {10}).recall.at(10), 1.0);
}

TEST(Recall, MissingRunsBothWays) {
  const Fixture f;
  auto runs = f.runs;
  runs.erase("q3");
  try {
    recall_at_k(runs, f.queries, {1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.category(), ErrorCategory::kMissingRun);
  }
  runs = f.runs;
  runs["stray"] = ranked({"A"});
  EXPECT_THROW(recall_at_k(runs, f.queries, {1}), Error);
  EXPECT_THROW(recall_at_k(f.runs, f.queries, {}), Error);
  EXPECT_THROW(recall_at_k(f.runs, f.queries, {0, 1}), Error);
}

struct RandomRun {
  std::vector<QueryRecord> queries;
  RunSet runs;
};

RandomRun random_run(std::uint32_t seed) {
  std::mt19937 rng(seed);
  RandomRun r;
  const std::size_t n = 1 + rng() % 40;
  for (std::size_t i = 0; i < n; ++i) {
    QueryRecord q{"q" + std::to_string(i), "?", {}};
    const std::size_t gold = 1 + rng() % 3;
    while (q.gold_ids.size() < gold) {
      auto id = "t" + std::to_string(rng() % 15);
      if (std::find(q.gold_ids.begin(), q.gold_ids.end(), id) == q.gold_ids.end()) {
        q.gold_ids.push_back(id);
      }
    }
    std::vector<std::string> ids;
    for (int t = 0; t < 15; ++t) ids.push_back("t" + std::to_string(t));
    std::shuffle(ids.begin(), ids.end(), rng);
    SearchResult run;
    for (std::size_t j = 0; j < 10; ++j) run.push_back({ids[j], 1.0 - 0.01 * j});
    r.runs[q.qid] = run;
    r.queries.push_back(std::move(q));
  }
  return r;
}

TEST(Recall, MonotoneInK) {
  for (std::uint32_t seed = 0; seed < 100; ++seed) {
    const auto r = random_run(seed);
    for (const auto mode : {RecallMode::kPartialCredit, RecallMode::kAllGold}) {
      const auto report = recall_at_k(r.runs, r.queries, {1, 2, 3, 5, 10}, mode);
      double prev = -1;
      for (const auto k : report.ks) {
        ASSERT_GE(report.recall.at(k), prev);
        prev = report.recall.at(k);
      }
      for (const auto& q : report.per_query) {
        double p = -1;
        for (const auto& [k, v] : q.recall) {
          ASSERT_GE(v, p);
          p = v;
        }
      }
    }
  }
}

TEST(Recall, QueryOrderDoesNotMatter) {
  std::mt19937 rng(4);
  for (std::uint32_t seed = 0; seed < 50; ++seed) {
    auto r = random_run(seed);
    const auto before = recall_at_k(r.runs, r.queries, {1, 5, 10});
    std::shuffle(r.queries.begin(), r.queries.end(), rng);
    const auto after = recall_at_k(r.runs, r.queries, {1, 5, 10});
    ASSERT_EQ(before.recall, after.recall);
  }
}

// ---------------------------------------------------------------------------

TEST(Decompose, TwoSubQueries) {
  ScriptedProvider p("m", [](std::string_view, int) {
    return std::string(R"({"sub_queries": ["Who won in 2012?", "Where was it held?"]})");
  });
  const auto set = mtr_decompose("q", "Who won and where?", p, {});
  EXPECT_EQ(set.sub_queries.size(), 2u);
  EXPECT_FALSE(set.fallback);
}

TEST(Decompose, FallbackOnExhaustion) {
  ScriptedProvider p("m", [](std::string_view, int) { return std::string("no idea"); });
  const auto set = mtr_decompose("q", "Original?", p, {2});
  EXPECT_EQ(set.sub_queries, std::vector<std::string>{"Original?"});
  EXPECT_TRUE(set.fallback);
  EXPECT_EQ(p.calls(), 2);
}

TEST(Decompose, PromptGolden) {
  EXPECT_EQ(
      build_decomposition_prompt("Which singer performed at the largest stadium?"),
      "You are an expert in multi-table question answering. The question below may need "
      "information from several different tables. Decompose it into 2 to 3 sub-questions so "
      "that each sub-question can be answered from a single table. Keep the wording of each "
      "sub-question close to the original question.\n\n"
      "**Output Format (Strictly JSON format)**\n"
      "Only return a JSON dictionary object with a single \"sub_queries\" field, without any "
      "additional explanations or formatting.\n"
      "{ \"sub_queries\": [\"sub-question1\", \"sub-question2\"] }\n\n"
      "Question:\nWhich singer performed at the largest stadium?");
}

TEST(Merge, SingleListIsIdentity) {
  const auto list = ranked({"a", "b", "c"});
  EXPECT_EQ(mtr_merge(std::vector<SearchResult>{list}, 3), list);
}

TEST(Merge, MaxScoreRule) {
  const std::vector<SearchResult> lists{{{"x", 0.7}, {"y", 0.5}}, {{"x", 0.9}, {"z", 0.2}}};
  const auto merged = mtr_merge(lists, 10);
  ASSERT_EQ(merged.size(), 3u);
  EXPECT_EQ(merged[0], (Hit{"x", 0.9}));
  EXPECT_EQ(merged[1].id, "y");
}

TEST(Merge, DisjointListsTopFour) {
  // Union of six entries ranked by score: f .95, a .9, d .8, b .7, e .6, c .3.
  const std::vector<SearchResult> lists{{{"a", 0.9}, {"b", 0.7}, {"c", 0.3}},
                                        {{"f", 0.95}, {"d", 0.8}, {"e", 0.6}}};
  const auto merged = mtr_merge(lists, 4);
  std::vector<std::string> ids;
  for (const auto& h : merged) ids.push_back(h.id);
  EXPECT_EQ(ids, (std::vector<std::string>{"f", "a", "d", "b"}));
}

TEST(Merge, RoundRobin) {
  const std::vector<SearchResult> lists{{{"a", 0.9}, {"b", 0.8}}, {{"c", 0.5}, {"a", 0.4}},
                                        {{"d", 0.1}}};
  const auto merged = mtr_merge(lists, 10, MergeStrategy::kRoundRobin);
  std::vector<std::string> ids;
  for (const auto& h : merged) ids.push_back(h.id);
  EXPECT_EQ(ids, (std::vector<std::string>{"a", "c", "d", "b"}));
}

// ---------------------------------------------------------------------------

// Looks results up by exact text.
class TableRetriever final : public Retriever {
 public:
  explicit TableRetriever(std::map<std::string, SearchResult> table) : table_(std::move(table)) {}
  SearchResult search(const std::string& text, std::size_t k) override {
    auto r = table_.at(text);
    if (r.size() > k) r.resize(k);
    return r;
  }
  std::string name() const override { return "table"; }

 private:
  std::map<std::string, SearchResult> table_;
};

TEST(Benchmark, DirectAndDecomposed) {
  const std::vector<QueryRecord> qs{{"q1", "alpha and beta", {"A", "B"}}};
  TableRetriever retriever({{"alpha and beta", ranked({"A", "C"})},
                            {"alpha", ranked({"A", "C"})},
                            {"beta", {{"B", 0.95}, {"C", 0.1}}}});
  BenchmarkSpec spec;
  spec.method = "pT";
  spec.strategy = "pT";
  spec.ks = {2};
  const auto direct = run_benchmark(retriever, qs, spec);
  EXPECT_DOUBLE_EQ(direct.recall.at(2), 0.5);

  ScriptedProvider decomposer("m", [](std::string_view, int) {
    return std::string(R"({"sub_queries": ["alpha", "beta"]})");
  });
  spec.method = "MTR";
  spec.decompose = true;
  spec.decomposer = &decomposer;
  const auto mtr = run_benchmark(retriever, qs, spec);
  EXPECT_DOUBLE_EQ(mtr.recall.at(2), 1.0);
  EXPECT_EQ(mtr.per_query[0].sub_queries, (std::vector<std::string>{"alpha", "beta"}));
  EXPECT_EQ(mtr.retriever, "table");
}

TEST(Benchmark, DecompositionNeedsProvider) {
  TableRetriever retriever({});
  BenchmarkSpec spec;
  spec.method = "MTR";
  spec.decompose = true;
  EXPECT_THROW(run_benchmark(retriever, {}, spec), Error);
  EXPECT_TRUE(is_decomposition_method("MTR+QGpT"));
  EXPECT_FALSE(is_decomposition_method("QGpT"));
}

TEST(Report, JsonShapeAndDeterminism) {
  const Fixture f;
  auto report = recall_at_k(f.runs, f.queries, {2, 5, 10});
  report.method = "QGpT";
  report.retriever = "dense-ivf";
  report.strategy = "QGpT";
  const auto text = report_to_json(report);
  EXPECT_EQ(text, report_to_json(report));
  const auto j = nlohmann::json::parse(text);
  for (const char* key :
       {"method", "retriever", "strategy", "recall_mode", "ks", "n_queries", "recall",
        "per_query"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["recall"].size(), 3u);
  EXPECT_TRUE(j["recall"].contains("2"));
  EXPECT_TRUE(j["recall"].contains("10"));
  EXPECT_EQ(j["per_query"].size(), 5u);
  EXPECT_EQ(j["recall_mode"], "partial");
}

TEST(Report, TextTable) {
  const Fixture f;
  auto report = recall_at_k(f.runs, f.queries, {1, 5});
  report.method = "pT";
  report.retriever = "dense-ivf";
  report.strategy = "pT";
  EXPECT_EQ(report_to_text(report),
            "method  retriever  strategy  queries  R@1     R@5\n"
            "pT      dense-ivf  pT        5        0.3000  0.8000\n");
}

}  // namespace
}  // namespace qgpt
