#include <benchmark/benchmark.h>

#include "geolift/detect_context.hpp"
#include "geolift/seg_context.hpp"
#include "geolift/synth.hpp"

namespace {

struct Fixture {
  geolift::Scene scene;
  geolift::Bvh bvh;
  geolift::Camera cam;
  geolift::ContextMaps maps;
  geolift::PedestrianSet peds;

  Fixture() {
    scene = geolift::make_scene({});
    bvh = geolift::build_bvh(scene.mesh);
    cam = geolift::sample_plausible_camera(scene.mesh, bvh, 0);
    maps = geolift::render_context(cam, bvh, scene.mesh);
    peds = geolift::synth_pedestrians(cam, bvh, scene.mesh, 10, 0);
  }
};

void BM_ContextFeature(benchmark::State& state) {
  const Fixture f;
  std::size_t i = 0;
  for (auto _ : state) {
    const auto& d = f.peds.candidates[i++ % f.peds.candidates.size()];
    benchmark::DoNotOptimize(geolift::build_feature(d, f.cam, f.bvh, f.scene.mesh, f.maps));
  }
}
BENCHMARK(BM_ContextFeature);

void BM_DiscFeatures(benchmark::State& state) {
  const Fixture f;
  const auto radii = geolift::DiscFeatureParams{}.radii(f.cam.f);
  for (auto _ : state) benchmark::DoNotOptimize(geolift::disc_label_features(f.maps.labels, radii));
}
BENCHMARK(BM_DiscFeatures)->Unit(benchmark::kMillisecond);

void BM_PixelFeatures(benchmark::State& state) {
  const Fixture f;
  for (auto _ : state)
    benchmark::DoNotOptimize(geolift::build_pixel_features(f.maps, f.cam.f, f.peds.candidates));
}
BENCHMARK(BM_PixelFeatures)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
