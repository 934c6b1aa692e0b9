#include <benchmark/benchmark.h>

#include "geolift/resection.hpp"
#include "geolift/synth.hpp"

namespace {

struct Fixture {
  geolift::Scene scene;
  geolift::Bvh bvh;
  geolift::Camera cam;
  geolift::SynthCorrespondences sc;

  Fixture() {
    scene = geolift::make_scene({});
    bvh = geolift::build_bvh(scene.mesh);
    cam = geolift::sample_plausible_camera(scene.mesh, bvh, 0);
    geolift::NoiseParams noise;
    noise.outlier_fraction = 0.3;
    noise.pixel_noise_sigma = 0.5;
    sc = geolift::synth_correspondences(cam, bvh, scene.mesh, noise);
  }
};

void BM_P3p(benchmark::State& state) {
  const Fixture f;
  std::array<geolift::Correspondence, 3> three{f.sc.corrs[0], f.sc.corrs[1], f.sc.corrs[2]};
  for (auto _ : state) benchmark::DoNotOptimize(geolift::solve_p3p(three, f.cam.intrinsics()));
}
BENCHMARK(BM_P3p);

void BM_Ransac(benchmark::State& state) {
  const Fixture f;
  for (auto _ : state) benchmark::DoNotOptimize(geolift::ransac_resect(f.sc.corrs, f.cam.intrinsics(), {}));
}
BENCHMARK(BM_Ransac)->Unit(benchmark::kMicrosecond);

void BM_Plausibility(benchmark::State& state) {
  const Fixture f;
  for (auto _ : state) benchmark::DoNotOptimize(geolift::plausibility_filter(f.cam.pose, f.bvh, f.scene.mesh));
}
BENCHMARK(BM_Plausibility);

}  // namespace

BENCHMARK_MAIN();
