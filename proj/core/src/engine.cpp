#include "igcam/engine.hpp"

#include <cmath>
#include <limits>

#include "igcam/error.hpp"

namespace igcam {

namespace {

void check_input(const ModelBundle& model, const Tensor& input) {
  if (input.shape() != model.input_shape_vec()) {
    throw ValidationError("input shape " + input.shape_string() +
                          " does not match model input " +
                          shape_to_string(model.input_shape_vec()));
  }
  if (!input.all_finite()) {
    throw ValidationError("input contains non-finite values");
  }
}

void check_class(const ModelBundle& model, int class_index) {
  if (class_index < 0 || class_index >= model.class_count) {
    throw ValidationError("class index " + std::to_string(class_index) +
                          " out of range [0," +
                          std::to_string(model.class_count) + ")");
  }
}

const LayerParams& params_of(const ModelBundle& model, const LayerSpec& l) {
  return model.weights.at(l.name);
}

Tensor conv2d_forward(const LayerSpec& l, const LayerParams& p, const Tensor& in) {
  const int ih = in.extent(1), iw = in.extent(2);
  const int oh = (ih + 2 * l.padding - l.kernel_h) / l.stride + 1;
  const int ow = (iw + 2 * l.padding - l.kernel_w) / l.stride + 1;
  Tensor out({l.out_channels, oh, ow});
  const Tensor& w = p.weight;
  for (int co = 0; co < l.out_channels; ++co) {
    const double b = p.bias ? (*p.bias)[static_cast<std::size_t>(co)] : 0.0;
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double acc = b;
        for (int ci = 0; ci < l.in_channels; ++ci) {
          for (int ky = 0; ky < l.kernel_h; ++ky) {
            const int iy = oy * l.stride - l.padding + ky;
            if (iy < 0 || iy >= ih) continue;
            for (int kx = 0; kx < l.kernel_w; ++kx) {
              const int ix = ox * l.stride - l.padding + kx;
              if (ix < 0 || ix >= iw) continue;
              const std::size_t wi =
                  ((static_cast<std::size_t>(co) * l.in_channels + ci) *
                       l.kernel_h + ky) * l.kernel_w + kx;
              acc += w[wi] * in.at(ci, iy, ix);
            }
          }
        }
        out.at(co, oy, ox) = acc;
      }
    }
  }
  return out;
}

Tensor conv2d_backward(const LayerSpec& l, const LayerParams& p,
                       const Tensor& in, const Tensor& d_out) {
  const int ih = in.extent(1), iw = in.extent(2);
  const int oh = d_out.extent(1), ow = d_out.extent(2);
  Tensor d_in = Tensor::zeros_like(in);
  const Tensor& w = p.weight;
  for (int co = 0; co < l.out_channels; ++co) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        const double g = d_out.at(co, oy, ox);
        for (int ci = 0; ci < l.in_channels; ++ci) {
          for (int ky = 0; ky < l.kernel_h; ++ky) {
            const int iy = oy * l.stride - l.padding + ky;
            if (iy < 0 || iy >= ih) continue;
            for (int kx = 0; kx < l.kernel_w; ++kx) {
              const int ix = ox * l.stride - l.padding + kx;
              if (ix < 0 || ix >= iw) continue;
              const std::size_t wi =
                  ((static_cast<std::size_t>(co) * l.in_channels + ci) *
                       l.kernel_h + ky) * l.kernel_w + kx;
              d_in.at(ci, iy, ix) += g * w[wi];
            }
          }
        }
      }
    }
  }
  return d_in;
}

Tensor relu_forward(const Tensor& in) {
  Tensor out = in;
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  return out;
}

Tensor relu_backward(const Tensor& in, const Tensor& d_out) {
  Tensor d_in = d_out;
  for (std::size_t i = 0; i < d_in.size(); ++i) {
    if (!(in[i] > 0.0)) d_in[i] = 0.0;
  }
  return d_in;
}

Tensor maxpool_forward(const LayerSpec& l, const Tensor& in) {
  const int c = in.extent(0), ih = in.extent(1), iw = in.extent(2);
  const int oh = (ih - l.pool_kernel) / l.pool_stride + 1;
  const int ow = (iw - l.pool_kernel) / l.pool_stride + 1;
  Tensor out({c, oh, ow});
  for (int ch = 0; ch < c; ++ch) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double best = -std::numeric_limits<double>::infinity();
        for (int ky = 0; ky < l.pool_kernel; ++ky) {
          for (int kx = 0; kx < l.pool_kernel; ++kx) {
            const double v = in.at(ch, oy * l.pool_stride + ky,
                                   ox * l.pool_stride + kx);
            if (v > best) best = v;
          }
        }
        out.at(ch, oy, ox) = best;
      }
    }
  }
  return out;
}

// Routes each window's gradient to the first (row-major) maximal element.
Tensor maxpool_backward(const LayerSpec& l, const Tensor& in, const Tensor& d_out) {
  const int c = in.extent(0);
  const int oh = d_out.extent(1), ow = d_out.extent(2);
  Tensor d_in = Tensor::zeros_like(in);
  for (int ch = 0; ch < c; ++ch) {
    for (int oy = 0; oy < oh; ++oy) {
      for (int ox = 0; ox < ow; ++ox) {
        double best = -std::numeric_limits<double>::infinity();
        int best_y = 0, best_x = 0;
        for (int ky = 0; ky < l.pool_kernel; ++ky) {
          for (int kx = 0; kx < l.pool_kernel; ++kx) {
            const int iy = oy * l.pool_stride + ky;
            const int ix = ox * l.pool_stride + kx;
            const double v = in.at(ch, iy, ix);
            if (v > best) {
              best = v;
              best_y = iy;
              best_x = ix;
            }
          }
        }
        d_in.at(ch, best_y, best_x) += d_out.at(ch, oy, ox);
      }
    }
  }
  return d_in;
}

Tensor gap_forward(const Tensor& in) {
  const int c = in.extent(0), h = in.extent(1), w = in.extent(2);
  const double inv = 1.0 / (static_cast<double>(h) * w);
  Tensor out({c});
  for (int ch = 0; ch < c; ++ch) {
    double acc = 0.0;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) acc += in.at(ch, y, x);
    }
    out[static_cast<std::size_t>(ch)] = acc * inv;
  }
  return out;
}

Tensor gap_backward(const Tensor& in, const Tensor& d_out) {
  const int c = in.extent(0), h = in.extent(1), w = in.extent(2);
  const double inv = 1.0 / (static_cast<double>(h) * w);
  Tensor d_in = Tensor::zeros_like(in);
  for (int ch = 0; ch < c; ++ch) {
    const double g = d_out[static_cast<std::size_t>(ch)] * inv;
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) d_in.at(ch, y, x) = g;
    }
  }
  return d_in;
}

Tensor linear_forward(const LayerSpec& l, const LayerParams& p, const Tensor& in) {
  Tensor out({l.out_features});
  const Tensor& w = p.weight;
  for (int o = 0; o < l.out_features; ++o) {
    double acc = p.bias ? (*p.bias)[static_cast<std::size_t>(o)] : 0.0;
    const std::size_t row = static_cast<std::size_t>(o) * l.in_features;
    for (int i = 0; i < l.in_features; ++i) {
      acc += w[row + i] * in[static_cast<std::size_t>(i)];
    }
    out[static_cast<std::size_t>(o)] = acc;
  }
  return out;
}

Tensor linear_backward(const LayerSpec& l, const LayerParams& p,
                       const Tensor& in, const Tensor& d_out) {
  Tensor d_in = Tensor::zeros_like(in);
  const Tensor& w = p.weight;
  for (int o = 0; o < l.out_features; ++o) {
    const double g = d_out[static_cast<std::size_t>(o)];
    const std::size_t row = static_cast<std::size_t>(o) * l.in_features;
    for (int i = 0; i < l.in_features; ++i) {
      d_in[static_cast<std::size_t>(i)] += g * w[row + i];
    }
  }
  return d_in;
}

Tensor layer_forward(const ModelBundle& model, const LayerSpec& l, const Tensor& in) {
  switch (l.kind) {
    case LayerKind::conv2d: return conv2d_forward(l, params_of(model, l), in);
    case LayerKind::relu: return relu_forward(in);
    case LayerKind::maxpool2d: return maxpool_forward(l, in);
    case LayerKind::globalavgpool: return gap_forward(in);
    case LayerKind::flatten: return in.reshaped({static_cast<int>(in.size())});
    case LayerKind::linear: return linear_forward(l, params_of(model, l), in);
  }
  throw ValidationError("unhandled layer kind");
}

// Gradient w.r.t. the layer's input, given its recorded input and the
// gradient w.r.t. its output. Exact for this piecewise-linear layer set.
Tensor layer_backward(const ModelBundle& model, const LayerSpec& l,
                      const Tensor& in, const Tensor& d_out) {
  switch (l.kind) {
    case LayerKind::conv2d: return conv2d_backward(l, params_of(model, l), in, d_out);
    case LayerKind::relu: return relu_backward(in, d_out);
    case LayerKind::maxpool2d: return maxpool_backward(l, in, d_out);
    case LayerKind::globalavgpool: return gap_backward(in, d_out);
    case LayerKind::flatten: return d_out.reshaped(in.shape());
    case LayerKind::linear: return linear_backward(l, params_of(model, l), in, d_out);
  }
  throw ValidationError("unhandled layer kind");
}

void check_finite_output(const LayerSpec& l, const Tensor& out) {
  if (!out.all_finite()) {
    throw ValidationError("layer '" + l.name + "' produced non-finite values");
  }
}

// Backprop of logits[class_index] down to (and excluding) layer `stop_index`;
// stop_index == -1 propagates all the way to the network input.
Tensor backprop_from_logits(const ModelBundle& model,
                            const std::vector<Tensor>& layer_outputs,
                            const Tensor& input, int class_index,
                            int stop_index) {
  const int n = static_cast<int>(model.layers.size());
  Tensor grad({model.class_count});
  grad[static_cast<std::size_t>(class_index)] = 1.0;
  for (int i = n - 1; i > stop_index; --i) {
    const Tensor& layer_in =
        i == 0 ? input : layer_outputs[static_cast<std::size_t>(i - 1)];
    grad = layer_backward(model, model.layers[static_cast<std::size_t>(i)],
                          layer_in, grad);
  }
  return grad;
}

}  // namespace

const Tensor& ForwardResult::activation(const std::string& layer_name) const {
  auto it = index_by_name.find(layer_name);
  if (it == index_by_name.end()) {
    throw ValidationError("unknown layer '" + layer_name + "'");
  }
  return layer_outputs[it->second];
}

ForwardResult forward(const ModelBundle& model, const Tensor& input) {
  check_input(model, input);
  ForwardResult result;
  result.layer_outputs.reserve(model.layers.size());
  Tensor cur = input;
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const LayerSpec& l = model.layers[i];
    cur = layer_forward(model, l, cur);
    check_finite_output(l, cur);
    result.index_by_name.emplace(l.name, i);
    result.layer_outputs.push_back(cur);
  }
  result.logits = result.layer_outputs.back();
  return result;
}

Tensor forward_logits(const ModelBundle& model, const Tensor& input) {
  check_input(model, input);
  Tensor cur = input;
  for (const LayerSpec& l : model.layers) {
    cur = layer_forward(model, l, cur);
    check_finite_output(l, cur);
  }
  return cur;
}

Tensor resume_forward(const ModelBundle& model, int layer_index,
                      const Tensor& activation) {
  const int n = static_cast<int>(model.layers.size());
  if (layer_index < 0 || layer_index >= n) {
    throw ValidationError("resume layer index out of range");
  }
  const auto shapes = model.layer_output_shapes();
  if (activation.shape() != shapes[static_cast<std::size_t>(layer_index)]) {
    throw ValidationError(
        "injected activation " + activation.shape_string() +
        " does not match the output of layer '" +
        model.layers[static_cast<std::size_t>(layer_index)].name + "' " +
        shape_to_string(shapes[static_cast<std::size_t>(layer_index)]));
  }
  Tensor cur = activation;
  for (int i = layer_index + 1; i < n; ++i) {
    cur = layer_forward(model, model.layers[static_cast<std::size_t>(i)], cur);
  }
  return cur;
}

TapResult backward_to_layer(const ModelBundle& model, const Tensor& input,
                            int class_index, const std::string& tap_layer) {
  check_class(model, class_index);
  const int tap = model.layer_index(tap_layer);
  if (tap < 0) throw ValidationError("unknown layer '" + tap_layer + "'");
  if (tap == static_cast<int>(model.layers.size()) - 1) {
    throw ValidationError("tap layer '" + tap_layer +
                          "' must precede the classifier head");
  }

  ForwardResult fwd = forward(model, input);
  const Tensor& tapped = fwd.layer_outputs[static_cast<std::size_t>(tap)];
  if (tapped.rank() != 3) {
    throw ValidationError("tap layer '" + tap_layer +
                          "' does not produce (C,H,W) feature maps");
  }

  TapResult result;
  result.logits = fwd.logits;
  result.probabilities = softmax(fwd.logits);
  result.tapped_activations = tapped;
  result.tapped_gradients =
      backprop_from_logits(model, fwd.layer_outputs, input, class_index, tap);
  result.tap_layer = tap_layer;
  result.class_index = class_index;
  return result;
}

Tensor input_gradient(const ModelBundle& model, const Tensor& input,
                      int class_index) {
  check_class(model, class_index);
  ForwardResult fwd = forward(model, input);
  return backprop_from_logits(model, fwd.layer_outputs, input, class_index, -1);
}

Tensor softmax(const Tensor& logits) {
  Tensor p = logits;
  double mx = p[0];
  for (double v : p.values()) mx = v > mx ? v : mx;
  double total = 0.0;
  for (double& v : p.values()) {
    v = std::exp(v - mx);
    total += v;
  }
  for (double& v : p.values()) v /= total;
  return p;
}

double score(const ModelBundle& model, const Tensor& input, int class_index,
             ScoreMode mode) {
  check_class(model, class_index);
  const Tensor logits = forward_logits(model, input);
  if (mode == ScoreMode::logit) {
    return logits[static_cast<std::size_t>(class_index)];
  }
  return softmax(logits)[static_cast<std::size_t>(class_index)];
}

int argmax_class(const ModelBundle& model, const Tensor& input) {
  const Tensor logits = forward_logits(model, input);
  int best = 0;
  for (std::size_t i = 1; i < logits.size(); ++i) {
    if (logits[i] > logits[static_cast<std::size_t>(best)]) {
      best = static_cast<int>(i);
    }
  }
  return best;
}

}  // namespace igcam
