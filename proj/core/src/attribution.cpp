#include "igcam/attribution.hpp"

#include <cmath>

#include "igcam/error.hpp"
#include "igcam/parallel.hpp"

namespace igcam {

namespace {

constexpr double kGradCamPpEpsilon = 1e-12;

Tensor resolved_baseline(const PathSpec& path, const Tensor& image) {
  if (path.baseline.empty()) return Tensor::zeros_like(image);
  if (!path.baseline.same_shape(image)) {
    throw ValidationError("baseline shape " + path.baseline.shape_string() +
                          " does not match image shape " + image.shape_string());
  }
  return path.baseline;
}

void check_steps(const PathSpec& path) {
  if (path.steps < 1) {
    throw ValidationError("path steps must be >= 1, got " +
                          std::to_string(path.steps));
  }
}

// Per-channel weights from tapped gradients: (1/Z) sum_ij g_kij, or the raw
// sum in WeightMode::sum.
std::vector<double> channel_weights(const Tensor& gradients, WeightMode mode) {
  const int n = gradients.extent(0);
  const int u = gradients.extent(1);
  const int v = gradients.extent(2);
  const double scale = mode == WeightMode::average
                           ? 1.0 / (static_cast<double>(u) * v)
                           : 1.0;
  std::vector<double> w(static_cast<std::size_t>(n));
  for (int k = 0; k < n; ++k) {
    double acc = 0.0;
    for (int i = 0; i < u; ++i) {
      for (int j = 0; j < v; ++j) acc += gradients.at(k, i, j);
    }
    w[static_cast<std::size_t>(k)] = acc * scale;
  }
  return w;
}

// sum_k w_k maps_k, one (u,v) plane.
Tensor weighted_combination(const std::vector<double>& w, const Tensor& maps) {
  const int n = maps.extent(0);
  const int u = maps.extent(1);
  const int v = maps.extent(2);
  Tensor out({u, v});
  for (int k = 0; k < n; ++k) {
    const double wk = w[static_cast<std::size_t>(k)];
    for (int i = 0; i < u; ++i) {
      for (int j = 0; j < v; ++j) out.at(i, j) += wk * maps.at(k, i, j);
    }
  }
  return out;
}

void relu_inplace(Tensor& t) {
  for (double& v : t.values()) v = v > 0.0 ? v : 0.0;
}

SaliencyMap make_map(Tensor values, Resolution res, Method method, bool is_signed,
                     int class_index, std::string tap_layer) {
  SaliencyMap map;
  map.values = std::move(values);
  map.resolution = res;
  map.method = method;
  map.signed_values = is_signed;
  map.class_index = class_index;
  map.tap_layer = std::move(tap_layer);
  return map;
}

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::grad_cam: return "grad-cam";
    case Method::grad_cam_pp: return "grad-cam-pp";
    case Method::integrated_gradients: return "integrated-gradients";
    case Method::integrated_grad_cam: return "integrated-grad-cam";
  }
  return "unknown";
}

Method method_from_name(const std::string& s) {
  if (s == "grad-cam") return Method::grad_cam;
  if (s == "grad-cam-pp") return Method::grad_cam_pp;
  if (s == "integrated-gradients") return Method::integrated_gradients;
  if (s == "integrated-grad-cam") return Method::integrated_grad_cam;
  throw UsageError("unknown method '" + s + "'");
}

bool method_uses_path(Method m) {
  return m == Method::integrated_gradients || m == Method::integrated_grad_cam;
}

bool method_uses_tap(Method m) {
  return m != Method::integrated_gradients;
}

Tensor make_baseline(const BaselineSpec& spec, const std::vector<int>& shape) {
  switch (spec.kind) {
    case BaselineSpec::Kind::black: return Tensor(shape);
    case BaselineSpec::Kind::constant: return Tensor::full(shape, spec.value);
    case BaselineSpec::Kind::image:
      if (spec.image.shape() != shape) {
        throw ValidationError("baseline image shape " + spec.image.shape_string() +
                              " does not match input shape " +
                              shape_to_string(shape));
      }
      return spec.image;
  }
  throw ValidationError("unhandled baseline kind");
}

int resolve_class(const ModelBundle& model, const Tensor& image, int class_index) {
  if (class_index == kArgmaxClass) return argmax_class(model, image);
  if (class_index < 0 || class_index >= model.class_count) {
    throw ValidationError("class index " + std::to_string(class_index) +
                          " out of range [0," + std::to_string(model.class_count) +
                          ")");
  }
  return class_index;
}

std::string resolve_tap_layer(const ModelBundle& model, const std::string& tap_layer) {
  if (tap_layer.empty()) return model.last_conv_layer();
  if (model.layer_index(tap_layer) < 0) {
    throw ValidationError("unknown layer '" + tap_layer + "'");
  }
  return tap_layer;
}

Tensor path_point(const PathSpec& path, const Tensor& image, double alpha) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ValidationError("path parameter alpha=" + std::to_string(alpha) +
                          " outside [0,1]");
  }
  const Tensor baseline = resolved_baseline(path, image);
  Tensor out = baseline;
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = baseline[i] + alpha * (image[i] - baseline[i]);
  }
  return out;
}

SaliencyMap grad_cam(const ModelBundle& model, const AttributionRequest& request) {
  const int c = resolve_class(model, request.image, request.class_index);
  const std::string tap = resolve_tap_layer(model, request.tap_layer);
  const TapResult t = backward_to_layer(model, request.image, c, tap);
  const std::vector<double> w =
      channel_weights(t.tapped_gradients, request.weight_mode);
  Tensor map = weighted_combination(w, t.tapped_activations);
  relu_inplace(map);
  return make_map(std::move(map), Resolution::feature, Method::grad_cam, false, c,
                  tap);
}

SaliencyMap grad_cam_pp(const ModelBundle& model, const AttributionRequest& request) {
  const int c = resolve_class(model, request.image, request.class_index);
  const std::string tap = resolve_tap_layer(model, request.tap_layer);
  const TapResult t = backward_to_layer(model, request.image, c, tap);

  const Tensor& a = t.tapped_activations;
  const Tensor& g = t.tapped_gradients;
  const int n = a.extent(0), u = a.extent(1), v = a.extent(2);

  // Closed form over first gradients, valid for piecewise-linear nets:
  //   alpha_kij = g^2 / (2 g^2 + sum_ab(A_kab) g^3 + eps)
  //   w_k = sum_ij alpha_kij ReLU(g_kij)
  std::vector<double> w(static_cast<std::size_t>(n), 0.0);
  for (int k = 0; k < n; ++k) {
    double a_sum = 0.0;
    for (int i = 0; i < u; ++i) {
      for (int j = 0; j < v; ++j) a_sum += a.at(k, i, j);
    }
    double wk = 0.0;
    for (int i = 0; i < u; ++i) {
      for (int j = 0; j < v; ++j) {
        const double gij = g.at(k, i, j);
        if (gij <= 0.0) continue;  // ReLU(g) factor
        const double g2 = gij * gij;
        const double denom = 2.0 * g2 + a_sum * g2 * gij + kGradCamPpEpsilon;
        if (denom == 0.0) continue;
        wk += (g2 / denom) * gij;
      }
    }
    w[static_cast<std::size_t>(k)] = wk;
  }
  Tensor map = weighted_combination(w, a);
  relu_inplace(map);
  return make_map(std::move(map), Resolution::feature, Method::grad_cam_pp, false,
                  c, tap);
}

SaliencyMap integrated_gradients(const ModelBundle& model,
                                 const AttributionRequest& request) {
  check_steps(request.path);
  const int c = resolve_class(model, request.image, request.class_index);
  const Tensor baseline = resolved_baseline(request.path, request.image);
  const int m = request.path.steps;

  // Average d y_c / d I over the path samples gamma(t/m), t = 1..m.
  std::vector<Tensor> grads(static_cast<std::size_t>(m));
  parallel_for(static_cast<std::size_t>(m), request.threads, [&](std::size_t s) {
    const double alpha = static_cast<double>(s + 1) / m;
    const Tensor point = path_point(request.path, request.image, alpha);
    grads[s] = input_gradient(model, point, c);
  });

  Tensor avg = Tensor::zeros_like(request.image);
  for (int s = 0; s < m; ++s) {
    const Tensor& g = grads[static_cast<std::size_t>(s)];
    for (std::size_t i = 0; i < avg.size(); ++i) avg[i] += g[i];
  }
  const double inv_m = 1.0 / m;
  for (std::size_t i = 0; i < avg.size(); ++i) {
    avg[i] = (request.image[i] - baseline[i]) * avg[i] * inv_m;
  }

  // Collapse channels by summation; keeps the completeness identity
  // sum(map) = y_c(I) - y_c(I').
  const int ch = avg.extent(0), h = avg.extent(1), wd = avg.extent(2);
  Tensor map({h, wd});
  for (int k = 0; k < ch; ++k) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < wd; ++x) map.at(y, x) += avg.at(k, y, x);
    }
  }
  return make_map(std::move(map), Resolution::image, Method::integrated_gradients,
                  true, c, "");
}

SaliencyMap integrated_grad_cam(const ModelBundle& model,
                                const AttributionRequest& request) {
  check_steps(request.path);
  const int c = resolve_class(model, request.image, request.class_index);
  const std::string tap = resolve_tap_layer(model, request.tap_layer);
  const Tensor baseline = resolved_baseline(request.path, request.image);
  const int m = request.path.steps;

  // Baseline activations computed once and reused by every step's delta.
  const Tensor base_acts = forward(model, baseline).activation(tap);

  // Per-step maps: ReLU(sum_k w_k(t) delta_k(t)) with per-step placement, or
  // the raw combination when the ReLU moves after the sum.
  std::vector<Tensor> step_maps(static_cast<std::size_t>(m));
  parallel_for(static_cast<std::size_t>(m), request.threads, [&](std::size_t s) {
    const double alpha = static_cast<double>(s + 1) / m;
    const Tensor point = path_point(request.path, request.image, alpha);
    const TapResult t = backward_to_layer(model, point, c, tap);
    const std::vector<double> w =
        channel_weights(t.tapped_gradients, request.weight_mode);
    Tensor delta = t.tapped_activations;
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] -= base_acts[i];
    Tensor map = weighted_combination(w, delta);
    if (request.relu_placement == ReluPlacement::per_step) relu_inplace(map);
    step_maps[s] = std::move(map);
  });

  // Ascending-t reduction keeps results independent of the thread count;
  // the 1/m factor stays outside the ReLU (immaterial by positive homogeneity).
  Tensor accum = Tensor::zeros_like(step_maps[0]);
  for (int s = 0; s < m; ++s) {
    const Tensor& sm = step_maps[static_cast<std::size_t>(s)];
    for (std::size_t i = 0; i < accum.size(); ++i) accum[i] += sm[i];
  }
  const double inv_m = 1.0 / m;
  for (double& v : accum.values()) v *= inv_m;
  if (request.relu_placement == ReluPlacement::final_only) relu_inplace(accum);
  return make_map(std::move(accum), Resolution::feature,
                  Method::integrated_grad_cam, false, c, tap);
}

ActivationDelta delta_maps(const ModelBundle& model, const Tensor& image,
                           const PathSpec& path, const std::string& tap_layer) {
  check_steps(path);
  const std::string tap = resolve_tap_layer(model, tap_layer);
  const Tensor base_acts = forward(model, resolved_baseline(path, image)).activation(tap);

  ActivationDelta result;
  result.steps = path.steps;
  result.per_step.resize(static_cast<std::size_t>(path.steps));
  for (int t = 1; t <= path.steps; ++t) {
    const double alpha = static_cast<double>(t) / path.steps;
    const Tensor point = path_point(path, image, alpha);
    Tensor delta = forward(model, point).activation(tap);
    for (std::size_t i = 0; i < delta.size(); ++i) delta[i] -= base_acts[i];
    result.per_step[static_cast<std::size_t>(t - 1)] = std::move(delta);
  }
  return result;
}

SaliencyMap attribute(const ModelBundle& model, const AttributionRequest& request) {
  switch (request.method) {
    case Method::grad_cam: return grad_cam(model, request);
    case Method::grad_cam_pp: return grad_cam_pp(model, request);
    case Method::integrated_gradients: return integrated_gradients(model, request);
    case Method::integrated_grad_cam: return integrated_grad_cam(model, request);
  }
  throw ValidationError("unhandled attribution method");
}

}  // namespace igcam
