#include <benchmark/benchmark.h>

#include <string>

#include "qgpt/embed.hpp"
#include "qgpt/provider.hpp"
#include "qgpt/qgen.hpp"
#include "qgpt/table.hpp"

namespace {

using namespace qgpt;

Table wide_table(std::size_t rows, std::size_t cols) {
  Table t;
  t.id = "bench";
  t.title = "bench table";
  for (std::size_t r = 0; r < rows; ++r) {
    Row row;
    for (std::size_t c = 0; c < cols; ++c) {
      row.cells.push_back(r == 0 ? "column " + std::to_string(c)
                                 : "value " + std::to_string(r * cols + c));
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

void BM_Markdown(benchmark::State& state) {
  const auto pt = select_top_rows(wide_table(200, static_cast<std::size_t>(state.range(0))), 10);
  for (auto _ : state) {
    benchmark::DoNotOptimize(to_markdown(pt, true));
  }
}
BENCHMARK(BM_Markdown)->Arg(8)->Arg(64);

void BM_TokenBudget(benchmark::State& state) {
  const auto t = wide_table(500, 12);
  const auto& counter = default_token_counter();
  for (auto _ : state) {
    benchmark::DoNotOptimize(truncate_by_tokens(t, 2048, true, counter));
  }
}
BENCHMARK(BM_TokenBudget)->Unit(benchmark::kMicrosecond);

void BM_MockEmbed(benchmark::State& state) {
  EmbedderSpec spec;
  spec.seed = 13;
  const auto text = to_markdown(select_top_rows(wide_table(20, 8), 10), true);
  for (auto _ : state) {
    benchmark::DoNotOptimize(embed_dense(text, spec));
  }
}
BENCHMARK(BM_MockEmbed)->Unit(benchmark::kMicrosecond);

void BM_GenerateWithMock(benchmark::State& state) {
  TemplateMockProvider provider("mock-template");
  const auto pt = select_top_rows(wide_table(20, 8), 10);
  for (auto _ : state) {
    benchmark::DoNotOptimize(generate(pt, provider, GenMode::kFullPipeline, {}));
  }
}
BENCHMARK(BM_GenerateWithMock)->Unit(benchmark::kMicrosecond);

}  // namespace

BENCHMARK_MAIN();
