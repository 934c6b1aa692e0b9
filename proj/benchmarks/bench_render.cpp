#include <benchmark/benchmark.h>

#include "geolift/random.hpp"
#include "geolift/render.hpp"
#include "geolift/synth.hpp"

namespace {

geolift::Scene big_scene() {
  geolift::SceneSpec spec;
  spec.seed = 1;
  spec.extent = 140;
  spec.tile = 2;
  spec.buildings = 400;
  return geolift::make_scene(spec);
}

void BM_BuildBvh(benchmark::State& state) {
  const auto scene = big_scene();
  for (auto _ : state) benchmark::DoNotOptimize(geolift::build_bvh(scene.mesh));
  state.counters["triangles"] = static_cast<double>(scene.mesh.size());
}
BENCHMARK(BM_BuildBvh)->Unit(benchmark::kMillisecond);

void BM_Raycast(benchmark::State& state) {
  const auto scene = big_scene();
  const auto bvh = geolift::build_bvh(scene.mesh);
  geolift::Rng rng(2);
  std::vector<geolift::Ray> rays;
  for (int i = 0; i < 4096; ++i) {
    const geolift::Vec3 o(rng.uniform(0, 140), rng.uniform(0, 140), rng.uniform(0.5, 30));
    rays.emplace_back(o, geolift::Vec3(rng.normal(), rng.normal(), rng.normal() - 0.3));
  }
  std::size_t i = 0;
  for (auto _ : state) benchmark::DoNotOptimize(geolift::raycast(bvh, scene.mesh, rays[i++ & 4095]));
}
BENCHMARK(BM_Raycast);

void BM_RenderContext(benchmark::State& state) {
  geolift::SceneSpec spec;
  const auto scene = geolift::make_scene(spec);
  const auto bvh = geolift::build_bvh(scene.mesh);
  const auto cam = geolift::sample_plausible_camera(scene.mesh, bvh, 0);
  for (auto _ : state) benchmark::DoNotOptimize(geolift::render_context(cam, bvh, scene.mesh, 1));
}
BENCHMARK(BM_RenderContext)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
