#pragma once

#include <string>
#include <unordered_map>
#include <vector>

#include "igcam/model.hpp"
#include "igcam/tensor.hpp"

namespace igcam {

// Class scores plus the feature maps and logit gradients captured at a layer.
// tapped_activations / tapped_gradients have identical (N,u,v) shape; the
// gradients are exact derivatives of the pre-softmax logit y_c, not numeric
// estimates.
struct TapResult {
  Tensor logits;
  Tensor probabilities;
  Tensor tapped_activations;
  Tensor tapped_gradients;
  std::string tap_layer;
  int class_index = 0;
};

// Forward pass with every layer's output recorded, in layer order.
struct ForwardResult {
  Tensor logits;
  std::vector<Tensor> layer_outputs;
  std::unordered_map<std::string, std::size_t> index_by_name;

  const Tensor& activation(const std::string& layer_name) const;
};

// Full forward pass recording all activations. Deterministic: identical
// inputs produce bit-identical outputs (fixed row-major accumulation order).
ForwardResult forward(const ModelBundle& model, const Tensor& input);

// Forward pass computing logits only.
Tensor forward_logits(const ModelBundle& model, const Tensor& input);

// Runs only the layers after `layer_index`, starting from an injected
// activation with that layer's output shape. Used by the finite-difference
// gradient oracle and by threshold masking experiments.
Tensor resume_forward(const ModelBundle& model, int layer_index,
                      const Tensor& activation);

// Partial backprop of the pre-softmax logit y_c down to the named layer's
// output. The tap layer must produce (C,H,W) feature maps and precede the
// classifier head.
TapResult backward_to_layer(const ModelBundle& model, const Tensor& input,
                            int class_index, const std::string& tap_layer);

// d y_c / d input, backpropagated through every layer.
Tensor input_gradient(const ModelBundle& model, const Tensor& input,
                      int class_index);

enum class ScoreMode { probability, logit };

// Psi(I): the model's confidence in `class_index`. Softmax probability by
// default; the raw logit behind the ScoreMode switch.
double score(const ModelBundle& model, const Tensor& input, int class_index,
             ScoreMode mode = ScoreMode::probability);

// Numerically stable softmax of a flat logit vector.
Tensor softmax(const Tensor& logits);

// Index of the highest logit (lowest index wins ties).
int argmax_class(const ModelBundle& model, const Tensor& input);

}  // namespace igcam
