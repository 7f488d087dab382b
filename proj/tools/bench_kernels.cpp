// Serial-reference vs OpenMP comparison for the dense kernels and for one
// full teacher-forced training step at full-scale dimensions.
//
//   ./bench_kernels                     # all benchmarks
//   ./bench_kernels --benchmark_filter=matvec

#include <benchmark/benchmark.h>

#include <vector>

#include "rldialog/corpus.hpp"
#include "rldialog/kernels.hpp"
#include "rldialog/model.hpp"
#include "rldialog/rng.hpp"
#include "rldialog/training.hpp"

using namespace rldialog;

namespace {

std::vector<double> random_vec(size_t n, uint64_t seed) {
  Rng rng(seed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.next_uniform(-1.0, 1.0);
  return v;
}

// paper-scale gate block: 4*1027 x 1027
constexpr size_t kGateRows = 4108;
constexpr size_t kGateCols = 1027;
// vocabulary projection: 12000 x 1027
constexpr size_t kVocabRows = 12000;
constexpr size_t kVocabCols = 1027;

void bench_matvec(benchmark::State& state, kernels::Backend backend, size_t rows, size_t cols) {
  const auto W = random_vec(rows * cols, 1);
  const auto x = random_vec(cols, 2);
  std::vector<double> y(rows);
  for (auto _ : state) {
    if (backend == kernels::Backend::Serial)
      kernels::serial::matvec(W.data(), rows, cols, x.data(), y.data());
    else
      kernels::openmp::matvec(W.data(), rows, cols, x.data(), y.data());
    benchmark::DoNotOptimize(y.data());
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(int64_t(state.iterations()) * int64_t(rows) * int64_t(cols));
}

void bench_matvec_t_acc(benchmark::State& state, kernels::Backend backend, size_t rows,
                        size_t cols) {
  const auto W = random_vec(rows * cols, 3);
  const auto x = random_vec(rows, 4);
  std::vector<double> y(cols, 0.0);
  for (auto _ : state) {
    if (backend == kernels::Backend::Serial)
      kernels::serial::matvec_t_acc(W.data(), rows, cols, x.data(), y.data());
    else
      kernels::openmp::matvec_t_acc(W.data(), rows, cols, x.data(), y.data());
    benchmark::DoNotOptimize(y.data());
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(int64_t(state.iterations()) * int64_t(rows) * int64_t(cols));
}

void bench_outer_acc(benchmark::State& state, kernels::Backend backend, size_t rows, size_t cols) {
  auto G = random_vec(rows * cols, 5);
  const auto a = random_vec(rows, 6);
  const auto b = random_vec(cols, 7);
  for (auto _ : state) {
    if (backend == kernels::Backend::Serial)
      kernels::serial::outer_acc(G.data(), rows, cols, a.data(), b.data());
    else
      kernels::openmp::outer_acc(G.data(), rows, cols, a.data(), b.data());
    benchmark::DoNotOptimize(G.data());
    benchmark::ClobberMemory();
  }
  state.SetItemsProcessed(int64_t(state.iterations()) * int64_t(rows) * int64_t(cols));
}

void bench_softmax(benchmark::State& state, kernels::Backend backend, size_t n) {
  const auto base = random_vec(n, 8);
  std::vector<double> v = base;
  for (auto _ : state) {
    v = base;
    double z;
    if (backend == kernels::Backend::Serial)
      z = kernels::serial::softmax_inplace(v.data(), n);
    else
      z = kernels::openmp::softmax_inplace(v.data(), n);
    benchmark::DoNotOptimize(z);
  }
  state.SetItemsProcessed(int64_t(state.iterations()) * int64_t(n));
}

// one teacher-forced MLE batch (forward + backward + clip + step) on a
// mid-sized model, routed through the selected backend
void bench_train_step(benchmark::State& state, kernels::Backend backend) {
  const kernels::Backend saved = kernels::get_backend();
  kernels::set_backend(backend);

  model::ModelConfig cfg;
  cfg.vocab_size = 2000;
  cfg.embed_dim = 67;  // 64 + 3 affect components
  cfg.hidden_size = 256;
  cfg.num_layers = 2;
  model::Seq2SeqModel m = model::Seq2SeqModel::create(cfg, 9);

  corpus::CorpusSplit split;
  Rng rng(10);
  for (int i = 0; i < 8; ++i) {
    corpus::DialogPair p;
    for (int k = 0; k < 12; ++k)
      p.source.push_back(static_cast<corpus::TokenId>(4 + rng.next_below(1996)));
    for (int k = 0; k < 12; ++k)
      p.target.push_back(static_cast<corpus::TokenId>(4 + rng.next_below(1996)));
    split.train.push_back(p);
  }
  training::OptimizerConfig opt;
  opt.batch_size = 8;
  opt.learning_rate = 0.01;
  opt.epochs = 1;
  for (auto _ : state) {
    training::train_mle(m, split, opt);
  }
  kernels::set_backend(saved);
}

}  // namespace

BENCHMARK_CAPTURE(bench_matvec, gate_serial, kernels::Backend::Serial, kGateRows, kGateCols);
BENCHMARK_CAPTURE(bench_matvec, gate_openmp, kernels::Backend::OpenMP, kGateRows, kGateCols);
BENCHMARK_CAPTURE(bench_matvec, vocab_serial, kernels::Backend::Serial, kVocabRows, kVocabCols);
BENCHMARK_CAPTURE(bench_matvec, vocab_openmp, kernels::Backend::OpenMP, kVocabRows, kVocabCols);
BENCHMARK_CAPTURE(bench_matvec_t_acc, gate_serial, kernels::Backend::Serial, kGateRows, kGateCols);
BENCHMARK_CAPTURE(bench_matvec_t_acc, gate_openmp, kernels::Backend::OpenMP, kGateRows, kGateCols);
BENCHMARK_CAPTURE(bench_outer_acc, vocab_serial, kernels::Backend::Serial, kVocabRows, kVocabCols);
BENCHMARK_CAPTURE(bench_outer_acc, vocab_openmp, kernels::Backend::OpenMP, kVocabRows, kVocabCols);
BENCHMARK_CAPTURE(bench_softmax, vocab_serial, kernels::Backend::Serial, size_t(65536));
BENCHMARK_CAPTURE(bench_softmax, vocab_openmp, kernels::Backend::OpenMP, size_t(65536));
BENCHMARK_CAPTURE(bench_train_step, serial, kernels::Backend::Serial)
    ->Unit(benchmark::kMillisecond);
BENCHMARK_CAPTURE(bench_train_step, openmp, kernels::Backend::OpenMP)
    ->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
