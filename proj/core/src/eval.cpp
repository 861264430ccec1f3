#include "qgpt/eval.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "generation_loop.hpp"
#include "io_util.hpp"
#include "json.hpp"
#include "json_extract.hpp"
#include "qgpt/error.hpp"
#include "qgpt/parallel.hpp"

namespace qgpt {

using json = nlohmann::json;

std::string_view to_string(RecallMode mode) {
  return mode == RecallMode::kPartialCredit ? "partial" : "all-gold";
}

RecallMode parse_recall_mode(std::string_view name) {
  if (name == "partial") return RecallMode::kPartialCredit;
  if (name == "all-gold") return RecallMode::kAllGold;
  throw Error(ErrorCategory::kInvalidArgument,
              "unknown recall mode '" + std::string(name) + "' (expected partial or all-gold)");
}

EvalReport recall_at_k(const RunSet& runs, std::span<const QueryRecord> queries,
                       std::vector<std::size_t> ks, RecallMode mode) {
  if (ks.empty() || std::find(ks.begin(), ks.end(), 0) != ks.end()) {
    throw Error(ErrorCategory::kInvalidArgument, "ks must be a non-empty list of positive values");
  }
  std::sort(ks.begin(), ks.end());
  ks.erase(std::unique(ks.begin(), ks.end()), ks.end());

  std::unordered_set<std::string_view> known;
  for (const auto& q : queries) known.insert(q.qid);
  for (const auto& [qid, _] : runs) {
    if (!known.count(qid)) {
      throw Error(ErrorCategory::kMissingRun, "run for unknown query '" + qid + "'");
    }
  }

  EvalReport report;
  report.mode = mode;
  report.ks = ks;
  report.n_queries = queries.size();
  std::map<std::size_t, std::vector<double>> values;

  for (const auto& q : queries) {
    auto run = runs.find(q.qid);
    if (run == runs.end()) {
      throw Error(ErrorCategory::kMissingRun, "no run for query '" + q.qid + "'");
    }
    QueryHits hits;
    hits.qid = q.qid;
    hits.gold_ids = q.gold_ids;
    const auto& ranked = run->second;
    for (std::size_t i = 0; i < std::min(ks.back(), ranked.size()); ++i) {
      hits.retrieved.push_back(ranked[i].id);
    }
    const std::set<std::string> gold(q.gold_ids.begin(), q.gold_ids.end());
    for (const auto k : ks) {
      std::size_t found = 0;
      std::set<std::string> counted;
      for (std::size_t i = 0; i < std::min(k, ranked.size()); ++i) {
        if (gold.count(ranked[i].id) && counted.insert(ranked[i].id).second) ++found;
      }
      double r = 0.0;
      if (!gold.empty()) {
        r = mode == RecallMode::kPartialCredit
                ? static_cast<double>(found) / static_cast<double>(gold.size())
                : (found == gold.size() ? 1.0 : 0.0);
      }
      hits.recall[k] = r;
      values[k].push_back(r);
    }
    report.per_query.push_back(std::move(hits));
  }

  for (auto& [k, v] : values) {
    // Summing in sorted order makes the mean independent of query order.
    std::sort(v.begin(), v.end());
    double sum = 0.0;
    for (const double x : v) sum += x;
    report.recall[k] = sum / static_cast<double>(v.size());
  }
  for (const auto k : ks) report.recall.try_emplace(k, 0.0);
  return report;
}

// ---------------------------------------------------------------------------

namespace {

// Not part of the published prompt set; written for this toolkit.
constexpr std::string_view kDecompositionPrompt =
    R"(You are an expert in multi-table question answering. The question below may need information from several different tables. Decompose it into 2 to 3 sub-questions so that each sub-question can be answered from a single table. Keep the wording of each sub-question close to the original question.

**Output Format (Strictly JSON format)**
Only return a JSON dictionary object with a single "sub_queries" field, without any additional explanations or formatting.
{ "sub_queries": ["sub-question1", "sub-question2"] }

Question:
)";

}  // namespace

std::string build_decomposition_prompt(std::string_view question) {
  std::string out(kDecompositionPrompt);
  out.append(question);
  return out;
}

std::vector<std::string> parse_sub_queries(std::string_view raw) {
  auto extracted = detail::extract_json_object(raw);
  auto subs = detail::string_list(extracted.value, "sub_queries");
  if (subs.empty()) {
    throw ParseFailure(ExtractionStage::kValidation, "'sub_queries' is empty");
  }
  return subs;
}

SubQuerySet mtr_decompose(std::string qid, std::string question, TextGenProvider& provider,
                          const RetryPolicy& policy, GenerationCache* cache) {
  const auto prompt = build_decomposition_prompt(question);
  auto outcome = detail::run_generation<std::vector<std::string>>(
      prompt, provider, policy.max_attempts, cache,
      [](std::string_view raw) { return parse_sub_queries(raw); },
      [](const std::vector<std::string>&) { return true; });
  SubQuerySet set{std::move(qid), std::move(question), {}, false, outcome.calls};
  if (outcome.value) {
    set.sub_queries = std::move(*outcome.value);
  } else {
    set.sub_queries = {set.question};
    set.fallback = true;
  }
  return set;
}

std::string_view to_string(MergeStrategy strategy) {
  return strategy == MergeStrategy::kMaxScore ? "max" : "round-robin";
}

MergeStrategy parse_merge_strategy(std::string_view name) {
  if (name == "max") return MergeStrategy::kMaxScore;
  if (name == "round-robin") return MergeStrategy::kRoundRobin;
  throw Error(ErrorCategory::kInvalidArgument,
              "unknown merge strategy '" + std::string(name) + "' (expected max or round-robin)");
}

SearchResult mtr_merge(std::span<const SearchResult> results, std::size_t k,
                       MergeStrategy strategy) {
  if (strategy == MergeStrategy::kMaxScore) {
    std::unordered_map<std::string, double> best;
    for (const auto& list : results) {
      for (const auto& hit : list) {
        auto [it, inserted] = best.emplace(hit.id, hit.score);
        if (!inserted) it->second = std::max(it->second, hit.score);
      }
    }
    std::vector<Hit> hits;
    hits.reserve(best.size());
    for (auto& [id, score] : best) hits.push_back({id, score});
    return top_k(std::move(hits), k);
  }

  SearchResult merged;
  std::unordered_set<std::string> seen;
  std::size_t longest = 0;
  for (const auto& list : results) longest = std::max(longest, list.size());
  for (std::size_t rank = 0; rank < longest && merged.size() < k; ++rank) {
    for (const auto& list : results) {
      if (rank < list.size() && seen.insert(list[rank].id).second) {
        merged.push_back(list[rank]);
        if (merged.size() == k) break;
      }
    }
  }
  return merged;
}

// ---------------------------------------------------------------------------

DenseRetriever::DenseRetriever(const DenseIndex& index, Embedder& embedder, std::size_t nprobe)
    : index_(index), embedder_(embedder), nprobe_(std::min(nprobe, index.nlist())) {}

SearchResult DenseRetriever::search(const std::string& text, std::size_t k) {
  auto q = embedder_.embed_dense(std::span(&text, 1), Side::kQuery);
  return search_dense(index_, q.front(), k, nprobe_);
}

MultiRetriever::MultiRetriever(const MultiIndex& index, Embedder& embedder)
    : index_(index), embedder_(embedder) {}

SearchResult MultiRetriever::search(const std::string& text, std::size_t k) {
  auto q = embedder_.embed_multi(std::span(&text, 1), Side::kQuery);
  return search_multi(index_, q.front(), k);
}

bool is_decomposition_method(std::string_view method) {
  return method.size() >= 3 && std::toupper(static_cast<unsigned char>(method[0])) == 'M' &&
         std::toupper(static_cast<unsigned char>(method[1])) == 'T' &&
         std::toupper(static_cast<unsigned char>(method[2])) == 'R';
}

EvalReport run_benchmark(Retriever& retriever, std::span<const QueryRecord> queries,
                         const BenchmarkSpec& spec) {
  if (spec.ks.empty()) {
    throw Error(ErrorCategory::kInvalidArgument, "benchmark needs at least one k");
  }
  if (spec.decompose && !spec.decomposer) {
    throw Error(ErrorCategory::kConfigError, spec.method + " needs a decomposition provider");
  }
  const std::size_t depth = *std::max_element(spec.ks.begin(), spec.ks.end());

  std::vector<SearchResult> results(queries.size());
  std::vector<SubQuerySet> decompositions(queries.size());
  parallel_for(queries.size(), spec.concurrency, [&](std::size_t i) {
    const auto& q = queries[i];
    if (!spec.decompose) {
      results[i] = retriever.search(q.question, depth);
      return;
    }
    decompositions[i] = mtr_decompose(q.qid, q.question, *spec.decomposer, spec.retry, spec.cache);
    std::vector<SearchResult> per_sub;
    for (const auto& sub : decompositions[i].sub_queries) {
      per_sub.push_back(retriever.search(sub, depth));
    }
    results[i] = mtr_merge(per_sub, depth, spec.merge);
  });

  RunSet runs;
  for (std::size_t i = 0; i < queries.size(); ++i) runs[queries[i].qid] = std::move(results[i]);
  auto report = recall_at_k(runs, queries, spec.ks, spec.mode);
  report.method = spec.method;
  report.retriever = retriever.name();
  report.strategy = spec.strategy;
  if (spec.decompose) {
    for (std::size_t i = 0; i < queries.size(); ++i) {
      report.per_query[i].sub_queries = decompositions[i].sub_queries;
      report.per_query[i].decomposition_fallback = decompositions[i].fallback;
    }
  }
  return report;
}

std::string report_to_json(const EvalReport& report) {
  json recall = json::object();
  for (const auto& [k, v] : report.recall) recall[std::to_string(k)] = v;
  json per_query = json::array();
  for (const auto& q : report.per_query) {
    json r = json::object();
    for (const auto& [k, v] : q.recall) r[std::to_string(k)] = v;
    json item{{"qid", q.qid}, {"gold_ids", q.gold_ids}, {"retrieved", q.retrieved}, {"recall", r}};
    if (!q.sub_queries.empty()) {
      item["sub_queries"] = q.sub_queries;
      item["decomposition_fallback"] = q.decomposition_fallback;
    }
    per_query.push_back(std::move(item));
  }
  json out{{"method", report.method},
           {"retriever", report.retriever},
           {"strategy", report.strategy},
           {"recall_mode", to_string(report.mode)},
           {"ks", report.ks},
           {"n_queries", report.n_queries},
           {"recall", recall},
           {"per_query", per_query}};
  return out.dump(2) + "\n";
}

std::string report_to_text(const EvalReport& report) {
  std::vector<std::string> header{"method", "retriever", "strategy", "queries"};
  std::vector<std::string> row{report.method, report.retriever, report.strategy,
                               std::to_string(report.n_queries)};
  for (const auto k : report.ks) {
    header.push_back("R@" + std::to_string(k));
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4f", report.recall.at(k));
    row.emplace_back(buf);
  }
  std::string out;
  for (const auto* line : {&header, &row}) {
    for (std::size_t c = 0; c < header.size(); ++c) {
      const auto width = std::max(header[c].size(), row[c].size());
      auto cell = (*line)[c];
      cell.resize(width, ' ');
      out += cell;
      out += c + 1 < header.size() ? "  " : "";
    }
    while (!out.empty() && out.back() == ' ') out.pop_back();
    out += '\n';
  }
  return out;
}

void write_report(const EvalReport& report, const std::filesystem::path& stem) {
  auto json_path = stem;
  json_path += ".json";
  auto text_path = stem;
  text_path += ".txt";
  detail::write_file(json_path, report_to_json(report));
  detail::write_file(text_path, report_to_text(report));
}

}  // namespace qgpt
