#include <benchmark/benchmark.h>

#include "thinlimit/density.hpp"
#include "thinlimit/envelope.hpp"

using namespace thinlimit;

static void BM_dist2_so(benchmark::State& state) {
    Rng rng(42);
    Matrix Q = random_matrix_in_ball(rng, 3, 3, 3.0);
    for (auto _ : state) benchmark::DoNotOptimize(dist2_so(Q));
}
BENCHMARK(BM_dist2_so);

static void BM_dist2_so_gradient(benchmark::State& state) {
    Rng rng(42);
    Matrix Q = random_matrix_in_ball(rng, 3, 3, 3.0);
    for (auto _ : state) benchmark::DoNotOptimize(dist2_so_gradient(Q));
}
BENCHMARK(BM_dist2_so_gradient);

static void BM_w0_closed_form(benchmark::State& state) {
    Rng rng(7);
    Matrix q2 = random_matrix_in_ball(rng, 3, 2, 3.0);
    for (auto _ : state) benchmark::DoNotOptimize(w0_closed_form(q2));
}
BENCHMARK(BM_w0_closed_form);

static void BM_fiber_minimize_generic(benchmark::State& state) {
    Rng rng(7);
    DensitySpec D = DensitySpec::dist2_so_proto(2);
    Matrix q2 = random_matrix_in_ball(rng, 3, 2, 3.0);
    Vector x0 = Vector::Constant(2, 0.5);
    FiberMinimizeOptions opts;
    opts.use_fast_path = false;
    for (auto _ : state) benchmark::DoNotOptimize(fiber_minimize_W0(D, x0, q2, opts).value);
}
BENCHMARK(BM_fiber_minimize_generic);

static void BM_envelope_eval(benchmark::State& state) {
    DensitySpec D = DensitySpec::dist2_so_proto(2);
    LaminationParams P;
    P.grid_n = 41;
    P.n_directions = 16;
    P.depth = 2;
    EnvelopeTable T = build_envelope_table(D, P);
    Rng rng(3);
    Matrix A = random_matrix_in_ball(rng, 3, 2, 2.0);
    for (auto _ : state) benchmark::DoNotOptimize(T.eval(A).value);
}
BENCHMARK(BM_envelope_eval);

BENCHMARK_MAIN();
