#include "igcam/model.hpp"

#include <set>

#include "igcam/error.hpp"

namespace igcam {

const char* layer_kind_name(LayerKind kind) {
  switch (kind) {
    case LayerKind::conv2d: return "conv2d";
    case LayerKind::relu: return "relu";
    case LayerKind::maxpool2d: return "maxpool2d";
    case LayerKind::globalavgpool: return "globalavgpool";
    case LayerKind::flatten: return "flatten";
    case LayerKind::linear: return "linear";
  }
  return "unknown";
}

LayerKind layer_kind_from_name(const std::string& name) {
  if (name == "conv2d") return LayerKind::conv2d;
  if (name == "relu") return LayerKind::relu;
  if (name == "maxpool2d") return LayerKind::maxpool2d;
  if (name == "globalavgpool") return LayerKind::globalavgpool;
  if (name == "flatten") return LayerKind::flatten;
  if (name == "linear") return LayerKind::linear;
  throw InputError("unknown layer kind '" + name + "'");
}

LayerSpec LayerSpec::conv2d(std::string name, int out_ch, int in_ch, int kh,
                            int kw, int stride, int padding, bool bias) {
  LayerSpec s;
  s.name = std::move(name);
  s.kind = LayerKind::conv2d;
  s.out_channels = out_ch;
  s.in_channels = in_ch;
  s.kernel_h = kh;
  s.kernel_w = kw;
  s.stride = stride;
  s.padding = padding;
  s.has_bias = bias;
  return s;
}

LayerSpec LayerSpec::relu(std::string name) {
  LayerSpec s;
  s.name = std::move(name);
  s.kind = LayerKind::relu;
  return s;
}

LayerSpec LayerSpec::maxpool2d(std::string name, int kernel, int stride) {
  LayerSpec s;
  s.name = std::move(name);
  s.kind = LayerKind::maxpool2d;
  s.pool_kernel = kernel;
  s.pool_stride = stride;
  return s;
}

LayerSpec LayerSpec::globalavgpool(std::string name) {
  LayerSpec s;
  s.name = std::move(name);
  s.kind = LayerKind::globalavgpool;
  return s;
}

LayerSpec LayerSpec::flatten(std::string name) {
  LayerSpec s;
  s.name = std::move(name);
  s.kind = LayerKind::flatten;
  return s;
}

LayerSpec LayerSpec::linear(std::string name, int out_features, int in_features,
                            bool bias) {
  LayerSpec s;
  s.name = std::move(name);
  s.kind = LayerKind::linear;
  s.out_features = out_features;
  s.in_features = in_features;
  s.has_bias = bias;
  return s;
}

std::vector<int> LayerSpec::output_shape(const std::vector<int>& in_shape) const {
  auto fail = [&](const std::string& why) -> std::vector<int> {
    throw ValidationError("layer '" + name + "' (" + layer_kind_name(kind) +
                          "): " + why + " for input " + shape_to_string(in_shape));
  };
  switch (kind) {
    case LayerKind::conv2d: {
      if (in_shape.size() != 3) fail("expects a (C,H,W) input");
      if (in_shape[0] != in_channels)
        fail("declared in_channels " + std::to_string(in_channels) +
             " does not match input channels " + std::to_string(in_shape[0]));
      if (kernel_h < 1 || kernel_w < 1 || stride < 1 || padding < 0)
        fail("invalid kernel/stride/padding");
      const int oh = (in_shape[1] + 2 * padding - kernel_h) / stride + 1;
      const int ow = (in_shape[2] + 2 * padding - kernel_w) / stride + 1;
      if (in_shape[1] + 2 * padding < kernel_h ||
          in_shape[2] + 2 * padding < kernel_w || oh < 1 || ow < 1)
        fail("kernel does not fit");
      return {out_channels, oh, ow};
    }
    case LayerKind::relu:
      return in_shape;
    case LayerKind::maxpool2d: {
      if (in_shape.size() != 3) fail("expects a (C,H,W) input");
      if (pool_kernel < 1 || pool_stride < 1) fail("invalid kernel/stride");
      if (in_shape[1] < pool_kernel || in_shape[2] < pool_kernel)
        fail("pool window does not fit");
      const int oh = (in_shape[1] - pool_kernel) / pool_stride + 1;
      const int ow = (in_shape[2] - pool_kernel) / pool_stride + 1;
      return {in_shape[0], oh, ow};
    }
    case LayerKind::globalavgpool:
      if (in_shape.size() != 3) fail("expects a (C,H,W) input");
      return {in_shape[0]};
    case LayerKind::flatten:
      return {static_cast<int>(shape_product(in_shape))};
    case LayerKind::linear: {
      if (static_cast<int>(shape_product(in_shape)) != in_features)
        fail("declared in_features " + std::to_string(in_features) +
             " does not match input size " +
             std::to_string(shape_product(in_shape)));
      return {out_features};
    }
  }
  fail("unhandled layer kind");
  return {};
}

void ModelBundle::validate() const {
  if (layers.empty()) throw ValidationError("model has no layers");
  if (class_count < 1) throw ValidationError("class_count must be positive");
  for (int e : input_shape) {
    if (e < 1) throw ValidationError("input_shape extents must be positive");
  }

  std::set<std::string> names;
  for (const LayerSpec& l : layers) {
    if (!names.insert(l.name).second)
      throw ValidationError("duplicate layer name '" + l.name + "'");
  }

  for (const LayerSpec& l : layers) {
    const bool needs_params =
        l.kind == LayerKind::conv2d || l.kind == LayerKind::linear;
    auto it = weights.find(l.name);
    if (!needs_params) {
      if (it != weights.end())
        throw ValidationError("layer '" + l.name + "' takes no parameters");
      continue;
    }
    if (it == weights.end())
      throw ValidationError("missing weights for layer '" + l.name + "'");
    const LayerParams& p = it->second;
    std::vector<int> want_w, want_b;
    if (l.kind == LayerKind::conv2d) {
      want_w = {l.out_channels, l.in_channels, l.kernel_h, l.kernel_w};
      want_b = {l.out_channels};
    } else {
      want_w = {l.out_features, l.in_features};
      want_b = {l.out_features};
    }
    if (p.weight.shape() != want_w)
      throw ValidationError("layer '" + l.name + "': weight shape " +
                            p.weight.shape_string() + " does not match declared " +
                            shape_to_string(want_w));
    if (l.has_bias != p.bias.has_value())
      throw ValidationError("layer '" + l.name + "': bias presence does not match spec");
    if (p.bias && p.bias->shape() != want_b)
      throw ValidationError("layer '" + l.name + "': bias shape " +
                            p.bias->shape_string() + " does not match declared " +
                            shape_to_string(want_b));
    if (!p.weight.all_finite() || (p.bias && !p.bias->all_finite()))
      throw ValidationError("layer '" + l.name + "': non-finite parameter values");
  }

  const auto shapes = layer_output_shapes();
  const std::vector<int>& out = shapes.back();
  if (out.size() != 1 || out[0] != class_count)
    throw ValidationError("network output shape " + shape_to_string(out) +
                          " is not a flat vector of length " +
                          std::to_string(class_count));
}

int ModelBundle::layer_index(const std::string& name) const {
  for (std::size_t i = 0; i < layers.size(); ++i) {
    if (layers[i].name == name) return static_cast<int>(i);
  }
  return -1;
}

const LayerSpec& ModelBundle::layer(const std::string& name) const {
  const int i = layer_index(name);
  if (i < 0) throw ValidationError("unknown layer '" + name + "'");
  return layers[static_cast<std::size_t>(i)];
}

std::string ModelBundle::last_conv_layer() const {
  for (auto it = layers.rbegin(); it != layers.rend(); ++it) {
    if (it->kind == LayerKind::conv2d) return it->name;
  }
  throw ValidationError("model has no conv2d layer to tap");
}

std::vector<std::vector<int>> ModelBundle::layer_output_shapes() const {
  std::vector<std::vector<int>> shapes;
  shapes.reserve(layers.size());
  std::vector<int> cur = input_shape_vec();
  for (const LayerSpec& l : layers) {
    cur = l.output_shape(cur);
    shapes.push_back(cur);
  }
  return shapes;
}

}  // namespace igcam
