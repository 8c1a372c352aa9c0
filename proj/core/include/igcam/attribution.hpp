#pragma once

#include <string>
#include <vector>

#include "igcam/engine.hpp"
#include "igcam/model.hpp"
#include "igcam/tensor.hpp"

namespace igcam {

enum class Method { grad_cam, grad_cam_pp, integrated_gradients, integrated_grad_cam };

const char* method_name(Method m);             // CLI spelling, e.g. "grad-cam"
Method method_from_name(const std::string& s);
bool method_uses_path(Method m);
bool method_uses_tap(Method m);

// Where the ReLU sits for integrated_grad_cam: inside each path step (the
// defining form) or once after the step sum (ablation mode).
enum class ReluPlacement { per_step, final_only };

// Whether channel weights carry the 1/Z spatial average or the raw gradient
// sum. The max-normalized map is identical either way; raw sum is kept for
// exactness comparisons.
enum class WeightMode { average, sum };

// Straight path from a baseline image to the input: gamma(a) = I' + a(I - I').
// An empty baseline tensor means the all-zeros "black" image.
struct PathSpec {
  Tensor baseline;
  int steps = 50;
};

// How a CLI-style baseline argument materializes into a tensor.
struct BaselineSpec {
  enum class Kind { black, constant, image };
  Kind kind = Kind::black;
  double value = 0.0;  // for Kind::constant
  Tensor image;        // for Kind::image, already at input shape
};

Tensor make_baseline(const BaselineSpec& spec, const std::vector<int>& shape);

constexpr int kArgmaxClass = -1;

struct AttributionRequest {
  Tensor image;
  int class_index = kArgmaxClass;  // kArgmaxClass: resolve by forward pass on I
  std::string tap_layer;           // empty: last conv layer
  Method method = Method::integrated_grad_cam;
  PathSpec path;
  ReluPlacement relu_placement = ReluPlacement::per_step;
  WeightMode weight_mode = WeightMode::average;
  int threads = 1;
};

enum class Resolution { feature, image };

// 2-D attribution map. CAM methods produce non-negative values at feature
// resolution; integrated_gradients produces a signed map at image resolution.
struct SaliencyMap {
  Tensor values;  // rank-2 (h,w)
  Resolution resolution = Resolution::feature;
  Method method = Method::grad_cam;
  bool signed_values = false;
  int class_index = 0;
  std::string tap_layer;

  int height() const { return values.extent(0); }
  int width() const { return values.extent(1); }
};

// Per-step feature-map differences against the baseline activations,
// delta_k(t) = A_k(gamma(t/m)) - A_k(I'), for t = 1..m.
struct ActivationDelta {
  int steps = 0;
  std::vector<Tensor> per_step;  // per_step[t-1] has shape (N,u,v)
};

// gamma(alpha) for the linear path; alpha must lie in [0,1].
Tensor path_point(const PathSpec& path, const Tensor& image, double alpha);

SaliencyMap grad_cam(const ModelBundle& model, const AttributionRequest& request);
SaliencyMap grad_cam_pp(const ModelBundle& model, const AttributionRequest& request);
SaliencyMap integrated_gradients(const ModelBundle& model,
                                 const AttributionRequest& request);
SaliencyMap integrated_grad_cam(const ModelBundle& model,
                                const AttributionRequest& request);

ActivationDelta delta_maps(const ModelBundle& model, const Tensor& image,
                           const PathSpec& path, const std::string& tap_layer);

// Dispatch on request.method.
SaliencyMap attribute(const ModelBundle& model, const AttributionRequest& request);

// Resolves kArgmaxClass via a forward pass on the original image.
int resolve_class(const ModelBundle& model, const Tensor& image, int class_index);

// Resolves the empty tap-layer name to the model's last conv layer.
std::string resolve_tap_layer(const ModelBundle& model, const std::string& tap_layer);

}  // namespace igcam
