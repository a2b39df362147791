// Microbenchmarks for the hot paths: decomposition, the second-order engine,
// the matrix-element cross-check, and the exact rotation.

#include <benchmark/benchmark.h>

#include "swlab/eigenop.hpp"
#include "swlab/models.hpp"
#include "swlab/sw.hpp"

namespace {

using namespace swlab;

void bench_decompose(benchmark::State& state, const char* preset) {
  auto m = models::build_preset(preset);
  auto spectrum = spectral::diagonalize(m.h0);
  for (auto _ : state) {
    auto dec = eigenop::eigen_decompose(m.v, spectrum);
    benchmark::DoNotOptimize(dec.components.size());
  }
}

void bench_second_order(benchmark::State& state, const char* preset) {
  auto m = models::build_preset(preset);
  for (auto _ : state) {
    auto res = sw::transform(m.h0, m.v, m.blocks);
    benchmark::DoNotOptimize(res.h_prime.nonzeros());
  }
}

void bench_matrix_form(benchmark::State& state, const char* preset) {
  auto m = models::build_preset(preset);
  for (auto _ : state) {
    auto res = sw::second_order_matrix_form(m.h0, m.v, m.blocks);
    benchmark::DoNotOptimize(res.h_prime.nonzeros());
  }
}

void bench_exact_rotation(benchmark::State& state, const char* preset) {
  auto m = models::build_preset(preset);
  auto res = sw::transform(m.h0, m.v, m.blocks);
  auto h = m.h0 + m.v;
  for (auto _ : state) {
    auto rotated = ops::matrix_exponential_rotate(h, res.s);
    benchmark::DoNotOptimize(rotated.nonzeros());
  }
}

}  // namespace

BENCHMARK_CAPTURE(bench_decompose, jc, "jaynes_cummings");
BENCHMARK_CAPTURE(bench_decompose, cubic_fb, "cubic_fb");
BENCHMARK_CAPTURE(bench_second_order, jc, "jaynes_cummings");
BENCHMARK_CAPTURE(bench_second_order, anderson, "anderson");
BENCHMARK_CAPTURE(bench_second_order, cubic_fb, "cubic_fb");
BENCHMARK_CAPTURE(bench_matrix_form, anderson, "anderson");
BENCHMARK_CAPTURE(bench_exact_rotation, anderson, "anderson");

BENCHMARK_MAIN();
