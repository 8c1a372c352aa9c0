#include <benchmark/benchmark.h>

#include "igcam/attribution.hpp"
#include "igcam/engine.hpp"
#include "igcam/fixtures.hpp"
#include "igcam/metrics.hpp"
#include "igcam/postprocess.hpp"

using namespace igcam;

namespace {

const Fixture& bench_fixture() {
  static const Fixture fixture = make_gradcheck_fixture(3, 1);
  return fixture;
}

AttributionRequest bench_request(Method method, int steps = 50) {
  AttributionRequest request;
  request.image = bench_fixture().images[0].image;
  request.class_index = 0;
  request.method = method;
  request.path.steps = steps;
  return request;
}

void BM_Forward(benchmark::State& state) {
  const Fixture& fx = bench_fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(forward_logits(fx.model, fx.images[0].image));
  }
}
BENCHMARK(BM_Forward);

void BM_BackwardToLayer(benchmark::State& state) {
  const Fixture& fx = bench_fixture();
  for (auto _ : state) {
    benchmark::DoNotOptimize(
        backward_to_layer(fx.model, fx.images[0].image, 0, "conv2"));
  }
}
BENCHMARK(BM_BackwardToLayer);

void BM_GradCam(benchmark::State& state) {
  const Fixture& fx = bench_fixture();
  const AttributionRequest request = bench_request(Method::grad_cam);
  for (auto _ : state) {
    benchmark::DoNotOptimize(grad_cam(fx.model, request));
  }
}
BENCHMARK(BM_GradCam);

void BM_GradCamPP(benchmark::State& state) {
  const Fixture& fx = bench_fixture();
  const AttributionRequest request = bench_request(Method::grad_cam_pp);
  for (auto _ : state) {
    benchmark::DoNotOptimize(grad_cam_pp(fx.model, request));
  }
}
BENCHMARK(BM_GradCamPP);

// Linear in the step count by construction.
void BM_IntegratedGradCam(benchmark::State& state) {
  const Fixture& fx = bench_fixture();
  const AttributionRequest request =
      bench_request(Method::integrated_grad_cam, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(integrated_grad_cam(fx.model, request));
  }
}
BENCHMARK(BM_IntegratedGradCam)->Arg(10)->Arg(50)->Arg(200);

void BM_IntegratedGradients(benchmark::State& state) {
  const Fixture& fx = bench_fixture();
  const AttributionRequest request =
      bench_request(Method::integrated_gradients, static_cast<int>(state.range(0)));
  for (auto _ : state) {
    benchmark::DoNotOptimize(integrated_gradients(fx.model, request));
  }
}
BENCHMARK(BM_IntegratedGradients)->Arg(50);

void BM_UpsampleBilinear(benchmark::State& state) {
  SaliencyMap map;
  map.values = Tensor({8, 8});
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    map.values[i] = static_cast<double>(i) / 63.0;
  }
  const int target = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(upsample_bilinear(map, target, target));
  }
}
BENCHMARK(BM_UpsampleBilinear)->Arg(64)->Arg(224);

void BM_MetricPair(benchmark::State& state) {
  const Fixture fx = make_quadrant_fixture(5, 1);
  AttributionRequest request;
  request.image = fx.images[0].image;
  request.class_index = 0;
  request.method = Method::grad_cam;
  SaliencyMap map = grad_cam(fx.model, request);
  map = normalize_max(upsample_bilinear(map, 16, 16));
  for (auto _ : state) {
    benchmark::DoNotOptimize(ebpg(map, fx.images[0].mask));
    benchmark::DoNotOptimize(bbox_score(map, fx.images[0].mask));
  }
}
BENCHMARK(BM_MetricPair);

}  // namespace

BENCHMARK_MAIN();
