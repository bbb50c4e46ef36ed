// Serial reference vs OpenMP kernels on a generated corpus.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <filesystem>
#include <random>

#include "sockscope/analysis.hpp"
#include "sockscope/corpus_gen.hpp"
#include "sockscope/patterns.hpp"

using namespace sockscope;
namespace fs = std::filesystem;

namespace {

CorpusGenSpec spec_for(std::uint64_t sockets) {
  CorpusGenSpec s;
  s.seed = 3;
  s.apps = 40;
  s.sockets = sockets;
  return s;
}

const Corpus& corpus_of(std::uint64_t sockets) {
  static std::map<std::uint64_t, Corpus> cache;
  auto it = cache.find(sockets);
  if (it == cache.end()) it = cache.emplace(sockets, to_corpus(generate_corpus(spec_for(sockets)))).first;
  return it->second;
}

Execution exec_of(const benchmark::State& state) {
  return state.range(1) ? Execution::parallel : Execution::serial;
}

void BM_ComputeReport(benchmark::State& state) {
  const auto& corpus = corpus_of(static_cast<std::uint64_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(compute_report(corpus, {}, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

void BM_MineFrequent(benchmark::State& state) {
  const auto& corpus = corpus_of(static_cast<std::uint64_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(mine_frequent(corpus, 10, 6, exec_of(state)));
  state.SetItemsProcessed(state.iterations() * state.range(0));
}

struct CorpusDir {
  fs::path path = fs::temp_directory_path() / ("sockscope_bench_" + std::to_string(std::random_device{}()));
  CorpusDir() { write_corpus(path, generate_corpus(spec_for(5'000))); }
  ~CorpusDir() { fs::remove_all(path); }
};

// No serial switch here: one OpenMP thread stands in for it.
void BM_LoadCorpus(benchmark::State& state) {
  static const CorpusDir dir;
  int before = omp_get_max_threads();
  omp_set_num_threads(state.range(0) ? before : 1);
  for (auto _ : state) benchmark::DoNotOptimize(load_corpus(dir.path));
  omp_set_num_threads(before);
}

}  // namespace

BENCHMARK(BM_ComputeReport)->ArgsProduct({{1'000, 10'000}, {0, 1}})->ArgNames({"sockets", "parallel"})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_MineFrequent)->ArgsProduct({{1'000, 10'000}, {0, 1}})->ArgNames({"sockets", "parallel"})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_LoadCorpus)->Arg(0)->Arg(1)->ArgName("parallel")->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
