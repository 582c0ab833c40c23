#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include "prokd/diffcore/kernels.hpp"

namespace k = prokd::kernels;

namespace {

std::vector<double> random_values(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = u(rng);
  return v;
}

// Batch of 32 sentences x ~20 tokens through the encoder and classifier.
constexpr std::size_t rows = 640;

template <bool Parallel>
void matmul(benchmark::State& state) {
  const auto kk = static_cast<std::size_t>(state.range(0)), m = static_cast<std::size_t>(state.range(1));
  const auto a = random_values(rows * kk, 1), b = random_values(kk * m, 2);
  std::vector<double> out(rows * m);
  for (auto _ : state) {
    if constexpr (Parallel) k::parallel::matmul(a.data(), b.data(), out.data(), rows, kk, m);
    else k::serial::matmul(a.data(), b.data(), out.data(), rows, kk, m);
    benchmark::DoNotOptimize(out.data());
  }
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * rows * kk * m));
}

template <bool Parallel>
void matmul_tn(benchmark::State& state) {
  const auto kk = static_cast<std::size_t>(state.range(0)), m = static_cast<std::size_t>(state.range(1));
  const auto a = random_values(rows * kk, 3), b = random_values(rows * m, 4);
  std::vector<double> out(kk * m);
  for (auto _ : state) {
    if constexpr (Parallel) k::parallel::matmul_tn(a.data(), b.data(), out.data(), rows, kk, m);
    else k::serial::matmul_tn(a.data(), b.data(), out.data(), rows, kk, m);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void softmax(benchmark::State& state) {
  const auto m = static_cast<std::size_t>(state.range(0));
  const auto x = random_values(rows * m, 5);
  std::vector<double> out(rows * m);
  for (auto _ : state) {
    if constexpr (Parallel) k::parallel::softmax_rows(x.data(), out.data(), rows, m);
    else k::serial::softmax_rows(x.data(), out.data(), rows, m);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void distance(benchmark::State& state) {
  const auto d = static_cast<std::size_t>(state.range(0));
  const std::size_t protos = 9;
  const auto a = random_values(rows * d, 6), b = random_values(protos * d, 7);
  std::vector<double> out(rows * protos);
  for (auto _ : state) {
    if constexpr (Parallel) k::parallel::pairwise_distance(a.data(), b.data(), out.data(), rows, protos, d);
    else k::serial::pairwise_distance(a.data(), b.data(), out.data(), rows, protos, d);
    benchmark::DoNotOptimize(out.data());
  }
}

template <bool Parallel>
void tanh(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto x = random_values(n, 8);
  std::vector<double> out(n);
  for (auto _ : state) {
    if constexpr (Parallel) k::parallel::tanh(x.data(), out.data(), n);
    else k::serial::tanh(x.data(), out.data(), n);
    benchmark::DoNotOptimize(out.data());
  }
}

}  // namespace

BENCHMARK(matmul<false>)->Name("matmul/serial")->Args({160, 64})->Args({64, 9});
BENCHMARK(matmul<true>)->Name("matmul/parallel")->Args({160, 64})->Args({64, 9});
BENCHMARK(matmul_tn<false>)->Name("matmul_tn/serial")->Args({160, 64});
BENCHMARK(matmul_tn<true>)->Name("matmul_tn/parallel")->Args({160, 64});
BENCHMARK(softmax<false>)->Name("softmax_rows/serial")->Arg(9);
BENCHMARK(softmax<true>)->Name("softmax_rows/parallel")->Arg(9);
BENCHMARK(distance<false>)->Name("pairwise_distance/serial")->Arg(64);
BENCHMARK(distance<true>)->Name("pairwise_distance/parallel")->Arg(64);
BENCHMARK(tanh<false>)->Name("tanh/serial")->Arg(rows * 64);
BENCHMARK(tanh<true>)->Name("tanh/parallel")->Arg(rows * 64);

BENCHMARK_MAIN();
