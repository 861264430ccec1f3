#include <benchmark/benchmark.h>

#include <cstdio>
#include <random>
#include <vector>

#include "qgpt/index.hpp"

namespace {

using namespace qgpt;

DenseVector random_unit(std::mt19937_64& rng, std::size_t dim) {
  std::normal_distribution<float> g;
  std::vector<float> v(dim);
  for (auto& x : v) x = g(rng);
  return normalized(std::move(v));
}

std::vector<DenseRecord> random_records(std::size_t n, std::size_t dim, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<DenseRecord> out;
  out.reserve(n);
  char id[24];
  for (std::size_t i = 0; i < n; ++i) {
    std::snprintf(id, sizeof id, "t%06zu", i);
    out.push_back({id, random_unit(rng, dim)});
  }
  return out;
}

void BM_BuildIvf(benchmark::State& state) {
  const auto records = random_records(static_cast<std::size_t>(state.range(0)), 128, 1);
  for (auto _ : state) {
    benchmark::DoNotOptimize(build_ivf(records, 64, 42));
  }
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_BuildIvf)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);

void BM_SearchDense(benchmark::State& state) {
  const auto records = random_records(20000, 128, 2);
  const auto index = build_ivf(records, 128, 42);
  std::mt19937_64 rng(3);
  const auto query = random_unit(rng, 128);
  const auto nprobe = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(search_dense(index, query, 10, nprobe));
  }
}
BENCHMARK(BM_SearchDense)->Arg(1)->Arg(16)->Arg(128)->Unit(benchmark::kMicrosecond);

void BM_BruteForce(benchmark::State& state) {
  const auto records = random_records(20000, 128, 2);
  std::mt19937_64 rng(3);
  const auto query = random_unit(rng, 128);
  for (auto _ : state) {
    benchmark::DoNotOptimize(brute_force_search(records, query, 10));
  }
}
BENCHMARK(BM_BruteForce)->Unit(benchmark::kMicrosecond);

MultiVector random_multi(std::mt19937_64& rng, std::size_t tokens, std::size_t dim) {
  MultiVector mv;
  for (std::size_t i = 0; i < tokens; ++i) mv.token_vectors.push_back(random_unit(rng, dim));
  return mv;
}

void BM_MaxSim(benchmark::State& state) {
  std::mt19937_64 rng(4);
  const auto tokens = static_cast<std::size_t>(state.range(0));
  const auto q = random_multi(rng, 32, 128);
  const auto d = random_multi(rng, tokens, 128);
  for (auto _ : state) {
    benchmark::DoNotOptimize(maxsim_score(q, d));
  }
}
BENCHMARK(BM_MaxSim)->Arg(64)->Arg(512);

void BM_SearchMulti(benchmark::State& state) {
  std::mt19937_64 rng(5);
  MultiIndex index;
  char id[24];
  for (int i = 0; i < 500; ++i) {
    std::snprintf(id, sizeof id, "t%04d", i);
    index.add(id, random_multi(rng, 64, 64));
  }
  const auto q = random_multi(rng, 16, 64);
  for (auto _ : state) {
    benchmark::DoNotOptimize(search_multi(index, q, 10));
  }
}
BENCHMARK(BM_SearchMulti)->Unit(benchmark::kMillisecond);

}  // namespace
