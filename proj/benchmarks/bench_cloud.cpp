#include <benchmark/benchmark.h>

#include <random>

#include "handguide/cloud.hpp"
#include "handguide/registration.hpp"
#include "handguide/surface.hpp"

using namespace handguide;

namespace {

PointCloud random_cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1, 1);
  PointCloud c;
  c.points.resize(n);
  for (auto& p : c.points) p = Vec3(u(rng), u(rng), u(rng));
  return c;
}

PointCloud box_surface(std::size_t n, std::uint64_t seed) {
  TriangleMesh m = tessellate_shape(Box{{0.4, 0.2, 0.1}}, 200);
  TriangleMesh arm = tessellate_shape(Box{{0.05, 0.3, 0.05}}, 100);
  arm.transform(RigidTransform::Translation({0.35, 0.45, 0.1}));
  m.append(arm);
  return sample_mesh(m, n, seed);
}

void BM_KdTreeBuild(benchmark::State& state) {
  const PointCloud c = random_cloud(static_cast<std::size_t>(state.range(0)), 1);
  for (auto _ : state) {
    KdTree t(c.points);
    benchmark::DoNotOptimize(t);
  }
}
BENCHMARK(BM_KdTreeBuild)->Arg(16000)->Arg(256000);

void BM_KdTreeNearest(benchmark::State& state) {
  const PointCloud c = random_cloud(static_cast<std::size_t>(state.range(0)), 2);
  const KdTree t(c.points);
  const PointCloud q = random_cloud(1024, 3);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(t.nearest(q.points[i++ & 1023]));
  }
}
BENCHMARK(BM_KdTreeNearest)->Arg(16000)->Arg(256000);

void BM_KdTreeKnn(benchmark::State& state) {
  const PointCloud c = random_cloud(16000, 4);
  const KdTree t(c.points);
  const PointCloud q = random_cloud(1024, 5);
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(t.knn(q.points[i++ & 1023], static_cast<std::size_t>(state.range(0))));
  }
}
BENCHMARK(BM_KdTreeKnn)->Arg(8)->Arg(50);

void BM_Icp(benchmark::State& state) {
  const PointCloud target = box_surface(static_cast<std::size_t>(state.range(0)), 6);
  const PointCloud source = box_surface(static_cast<std::size_t>(state.range(0)), 7);
  const RigidTransform init = RigidTransform::FromXyzRpy({0.03, -0.02, 0.01}, {0.03, 0.02, -0.05});
  for (auto _ : state) {
    benchmark::DoNotOptimize(icp(source, target, init));
  }
}
BENCHMARK(BM_Icp)->Arg(4000)->Arg(16000)->Unit(benchmark::kMillisecond);

void BM_MlsSmooth(benchmark::State& state) {
  const PointCloud c = box_surface(16000, 8);
  for (auto _ : state) {
    benchmark::DoNotOptimize(mls_smooth(c, 0.03, static_cast<int>(state.range(0))));
  }
}
BENCHMARK(BM_MlsSmooth)->Arg(1)->Arg(2)->Unit(benchmark::kMillisecond);

}  // namespace
