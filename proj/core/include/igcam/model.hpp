#pragma once

#include <array>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "igcam/tensor.hpp"

namespace igcam {

enum class LayerKind { conv2d, relu, maxpool2d, globalavgpool, flatten, linear };

const char* layer_kind_name(LayerKind kind);
LayerKind layer_kind_from_name(const std::string& name);

// One layer of a strictly sequential network. Fields are meaningful only for
// the kinds that declare them.
struct LayerSpec {
  std::string name;
  LayerKind kind = LayerKind::relu;

  // conv2d: zero padding, integer stride, cross-correlation (no kernel flip)
  int out_channels = 0;
  int in_channels = 0;
  int kernel_h = 0;
  int kernel_w = 0;
  int stride = 1;
  int padding = 0;

  // maxpool2d
  int pool_kernel = 0;
  int pool_stride = 0;

  // linear
  int out_features = 0;
  int in_features = 0;

  bool has_bias = false;

  static LayerSpec conv2d(std::string name, int out_ch, int in_ch, int kh, int kw,
                          int stride = 1, int padding = 0, bool bias = false);
  static LayerSpec relu(std::string name);
  static LayerSpec maxpool2d(std::string name, int kernel, int stride);
  static LayerSpec globalavgpool(std::string name);
  static LayerSpec flatten(std::string name);
  static LayerSpec linear(std::string name, int out_features, int in_features,
                          bool bias = false);

  // Output shape given this layer's input shape; throws ValidationError with
  // the layer's name on mismatch.
  std::vector<int> output_shape(const std::vector<int>& in_shape) const;
};

struct LayerParams {
  Tensor weight;                 // conv: (out,in,kh,kw); linear: (out,in)
  std::optional<Tensor> bias;    // conv: (out); linear: (out)
};

// Architecture plus weights. Immutable once validated; forward/backward are
// pure functions of (model, input).
struct ModelBundle {
  std::vector<LayerSpec> layers;
  std::map<std::string, LayerParams> weights;  // keyed by layer name
  std::array<int, 3> input_shape{0, 0, 0};     // (C,H,W)
  int class_count = 0;

  // Checks layer-name uniqueness, parameter presence and shapes, finiteness,
  // and that composing all layers on input_shape yields class_count logits.
  void validate() const;

  int layer_index(const std::string& name) const;  // -1 if absent
  const LayerSpec& layer(const std::string& name) const;

  // Name of the last conv2d layer; throws ValidationError if there is none.
  std::string last_conv_layer() const;

  // Per-layer output shapes for the declared input shape.
  std::vector<std::vector<int>> layer_output_shapes() const;

  std::vector<int> input_shape_vec() const {
    return {input_shape[0], input_shape[1], input_shape[2]};
  }
};

}  // namespace igcam
