// Serial reference paths against their OpenMP counterparts.

#include <benchmark/benchmark.h>
#include <omp.h>

#include <random>
#include <string>
#include <vector>

#include "lmdata/eval.hpp"
#include "lmdata/filters.hpp"
#include "lmdata/tokenization.hpp"

namespace {

using lmdata::corpus::Document;

const std::vector<std::string>& vocabulary() {
  static const std::vector<std::string> words = {
      "في", "من", "على", "إلى", "الكتاب", "المدينة", "العلم", "الماء", "الطريق", "المدرسة", "كان", "هذا",
      "التي", "الذي", "جديد", "كبير", "الناس", "اليوم", "ﺑﻴﺖ", "adpromo", "2023", "وقال", "حيث", "بين"};
  return words;
}

std::vector<Document> make_corpus(std::size_t n) {
  std::mt19937_64 rng(7);
  const auto& v = vocabulary();
  std::vector<Document> docs;
  for (std::size_t i = 0; i < n; ++i) {
    Document d;
    d.id = std::to_string(i);
    d.url = "https://example.org/" + d.id;
    d.source = lmdata::corpus::Source::culturax;
    const std::size_t lines = 2 + rng() % 10;
    for (std::size_t l = 0; l < lines; ++l) {
      const std::size_t words = 2 + rng() % 14;
      for (std::size_t w = 0; w < words; ++w) d.text += (w ? " " : "") + v[rng() % v.size()];
      d.text += "\n";
    }
    docs.push_back(std::move(d));
  }
  return docs;
}

std::vector<lmdata::eval::BenchmarkItem> make_items(std::size_t n) {
  std::mt19937_64 rng(11);
  const auto& v = vocabulary();
  std::vector<lmdata::eval::BenchmarkItem> items;
  for (std::size_t i = 0; i < n; ++i) {
    lmdata::eval::BenchmarkItem it;
    it.id = std::to_string(i);
    it.question = "ما " + v[rng() % v.size()] + " " + it.id + "؟";
    const std::size_t k = 2 + rng() % 4;
    for (std::size_t j = 0; j < k; ++j) it.choices.push_back(v[rng() % v.size()] + " " + v[rng() % v.size()]);
    it.gold_index = rng() % k;
    items.push_back(std::move(it));
  }
  return items;
}

const std::vector<Document>& corpus() {
  static const auto docs = make_corpus(20000);
  return docs;
}

void BM_PipelineSerial(benchmark::State& state) {
  const lmdata::filters::Pipeline pipe{lmdata::filters::FilterConfig{}};
  const lmdata::tokenization::IdentityTokenizer tok;
  for (auto _ : state) benchmark::DoNotOptimize(lmdata::filters::run_pipeline_reference(corpus(), pipe, tok));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(corpus().size()));
}

void BM_PipelineParallel(benchmark::State& state) {
  omp_set_num_threads(static_cast<int>(state.range(0)));
  const lmdata::filters::Pipeline pipe{lmdata::filters::FilterConfig{}};
  const lmdata::tokenization::IdentityTokenizer tok;
  for (auto _ : state) benchmark::DoNotOptimize(lmdata::filters::run_pipeline(corpus(), pipe, tok));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(corpus().size()));
}

void BM_FertilitySerial(benchmark::State& state) {
  const lmdata::tokenization::CharacterTokenizer tok;
  for (auto _ : state) benchmark::DoNotOptimize(lmdata::tokenization::fertility_serial(corpus(), tok));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(corpus().size()));
}

void BM_FertilityParallel(benchmark::State& state) {
  omp_set_num_threads(static_cast<int>(state.range(0)));
  const lmdata::tokenization::CharacterTokenizer tok;
  for (auto _ : state) benchmark::DoNotOptimize(lmdata::tokenization::fertility(corpus(), tok));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(corpus().size()));
}

void BM_EvaluateCf(benchmark::State& state) {
  static const auto items = make_items(2000);
  static const auto scorer = lmdata::eval::NgramScorer::from_default_corpus();
  lmdata::eval::CfOptions opts;
  opts.norm = lmdata::eval::Norm::by_bytes;
  opts.parallel = state.range(0) > 0;
  if (opts.parallel) omp_set_num_threads(static_cast<int>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(lmdata::eval::evaluate_cf(items, scorer, opts));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(items.size()));
}

}  // namespace

BENCHMARK(BM_PipelineSerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_PipelineParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
BENCHMARK(BM_FertilitySerial)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_FertilityParallel)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();
// Arg 0 is the serial path.
BENCHMARK(BM_EvaluateCf)->Arg(0)->Arg(1)->Arg(2)->Arg(4)->Arg(8)->Unit(benchmark::kMillisecond)->UseRealTime();

BENCHMARK_MAIN();
