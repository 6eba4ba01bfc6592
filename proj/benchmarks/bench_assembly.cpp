#include <benchmark/benchmark.h>

#include "thinlimit/assembly.hpp"
#include "thinlimit/config.hpp"

using namespace thinlimit;

static void BM_membrane_energy_grad(benchmark::State& state) {
    MetricField M = MetricField::flat(2);
    DensitySpec D = DensitySpec::dist2_so_proto(2);
    SurfaceMesh mesh = triangulate_chart(M.chart_domain, static_cast<int>(state.range(0)));
    ConfigurationField F = apply_boundary_conditions(mesh, boundary_preset("flat_stretch"));
    MembraneEnergy energy(M, D, mesh, nullptr, MembraneDensityKind::w0);
    Matrix grad;
    for (auto _ : state) benchmark::DoNotOptimize(energy.value_and_gradient(F, &grad));
}
BENCHMARK(BM_membrane_energy_grad)->Arg(8)->Arg(16)->Arg(24);

static void BM_bulk_energy_grad(benchmark::State& state) {
    MetricField M = MetricField::flat(2);
    DensitySpec D = DensitySpec::dist2_so_proto(2);
    SurfaceMesh mesh = triangulate_chart(M.chart_domain, static_cast<int>(state.range(0)));
    BulkMesh bulk = extrude_bulk_mesh(mesh, 0.2, 4);
    ConfigurationField f = apply_boundary_conditions(bulk, boundary_preset("flat_stretch"));
    BulkEnergy energy(M, D, bulk, FrameKind::transported);
    Matrix grad;
    for (auto _ : state) benchmark::DoNotOptimize(energy.value_and_gradient(f, &grad));
}
BENCHMARK(BM_bulk_energy_grad)->Arg(8)->Arg(16);

static void BM_transport_normal(benchmark::State& state) {
    MetricField M = MetricField::spherical_cap(2.0);
    Vector x = Vector::Constant(2, 0.4);
    for (auto _ : state) benchmark::DoNotOptimize(transport_normal(M, x, 0.15).columns);
}
BENCHMARK(BM_transport_normal);
