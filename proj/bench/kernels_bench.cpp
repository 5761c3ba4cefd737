// Serial vs OpenMP timings of the pixel kernels at 360x480.
// Argument 0 runs the serial reference, 1 the parallel kernel.
#include <random>

#include <benchmark/benchmark.h>
#include <omp.h>

#include "vstitch/estimation.hpp"
#include "vstitch/grid.hpp"
#include "vstitch/image.hpp"
#include "vstitch/kernels.hpp"
#include "vstitch/objectives.hpp"
#include "vstitch/synth.hpp"
#include "vstitch/tps.hpp"
#include "vstitch/warp.hpp"

using namespace vstitch;

namespace {

constexpr int kH = 360, kW = 480;
const GridShape kShape{6, 8};

kernels::Exec exec_of(const benchmark::State& state) {
  return state.range(0) == 0 ? kernels::Exec::serial : kernels::Exec::parallel;
}

const Frame& texture() {
  static const Frame f = make_texture(kH, kW, 3, TextureKind::noise, 1);
  return f;
}

ControlGrid wobbly_mesh(double dx) {
  std::mt19937 rng(4);
  std::uniform_real_distribution<double> d(-4.0, 4.0);
  ControlGrid m = rigid_mesh(kShape, kW, kH);
  for (auto& p : m) p += Point(dx + d(rng), d(rng));
  return m;
}

void label(benchmark::State& state) {
  state.SetLabel(state.range(0) == 0 ? "serial" : "parallel, " + std::to_string(omp_get_max_threads()) + " threads");
}

void BM_MapLattice(benchmark::State& state) {
  const TpsWarp warp = tps_fit(rigid_mesh(kShape, kW, kH), wobbly_mesh(0.0));
  const kernels::Lattice lattice{kH, kW};
  std::vector<Point> out(lattice.size());
  for (auto _ : state) {
    kernels::map_lattice(warp, lattice, out, exec_of(state));
    benchmark::DoNotOptimize(out.data());
  }
  label(state);
}

void BM_Resample(benchmark::State& state) {
  const TpsWarp warp = tps_fit(rigid_mesh(kShape, kW, kH), wobbly_mesh(0.0));
  const kernels::Lattice lattice{kH, kW};
  std::vector<Point> coords(lattice.size());
  kernels::map_lattice(warp, lattice, coords);
  Frame dst(kH, kW, 3);
  for (auto _ : state) {
    kernels::resample(texture(), coords, dst, exec_of(state));
    benchmark::DoNotOptimize(dst.pixels().data());
  }
  label(state);
}

void BM_WarpFrame(benchmark::State& state) {
  const ControlGrid rigid = rigid_mesh(kShape, kW, kH);
  const ControlGrid mesh = wobbly_mesh(200.0);
  const CanvasSpec canvas{kH + 40, kW + 240, Point(20, 20)};
  const int node_step = static_cast<int>(state.range(1));
  for (auto _ : state) {
    Frame out = warp_frame(rigid, mesh, texture(), canvas, exec_of(state), node_step);
    benchmark::DoNotOptimize(out.pixels().data());
  }
  label(state);
}

void BM_AlignmentTerm(benchmark::State& state) {
  const Frame moving = make_texture(kH, kW, 3, TextureKind::noise, 2);
  const ControlGrid rigid = rigid_mesh(kShape, kW, kH);
  const ControlGrid mesh = wobbly_mesh(0.0);
  std::vector<Point> grad(mesh.size());
  for (auto _ : state) {
    benchmark::DoNotOptimize(tps_alignment_term(texture(), moving, mesh, rigid, grad, 1.0, exec_of(state)));
  }
  label(state);
}

void BM_SpatialEstimate(benchmark::State& state) {
  const Frame wide = make_texture(kH + 40, kW + 240, 3, TextureKind::noise, 3);
  Frame ref(kH, kW, 3), tgt(kH, kW, 3);
  for (int y = 0; y < kH; ++y)
    for (int x = 0; x < kW; ++x)
      for (int c = 0; c < 3; ++c) {
        ref(y, x, c) = wide(y + 10, x + 10, c);
        tgt(y, x, c) = wide(y + 13, x + 230, c);
      }
  EstimatorOptions opts;
  opts.exec = exec_of(state);
  const MotionEstimator est(kShape, {}, opts);
  for (auto _ : state) benchmark::DoNotOptimize(est.spatial(ref, tgt).final_objective);
  label(state);
}

}  // namespace

BENCHMARK(BM_MapLattice)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Resample)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WarpFrame)->Args({0, 1})->Args({1, 1})->Args({0, 4})->Args({1, 4})->Unit(benchmark::kMillisecond);
BENCHMARK(BM_AlignmentTerm)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_SpatialEstimate)->Arg(0)->Arg(1)->Unit(benchmark::kMillisecond)->Iterations(3);

BENCHMARK_MAIN();
