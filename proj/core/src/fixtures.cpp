#include "igcam/fixtures.hpp"

#include <cmath>
#include <limits>
#include <random>

#include "igcam/attribution.hpp"
#include "igcam/dataset.hpp"
#include "igcam/engine.hpp"
#include "igcam/error.hpp"
#include "igcam/image_io.hpp"
#include "igcam/model_io.hpp"

namespace igcam {

namespace {

// mt19937_64 output mapped to doubles by hand; the engine sequence is fixed
// by the standard, so fixtures are identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() {  // [0,1)
    return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
  }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  int uniform_int(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(uniform() * (hi - lo + 1));
  }

 private:
  std::mt19937_64 gen_;
};

double quantized(int byte_value) { return byte_value / 255.0; }

std::string image_id(int i) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "img_%03d", i);
  return buf;
}

// Quadrant q of an s x s image: 0 top-left, 1 top-right, 2 bottom-left,
// 3 bottom-right.
bool in_quadrant(int y, int x, int size, int q) {
  const int half = size / 2;
  const bool top = y < half;
  const bool left = x < half;
  switch (q) {
    case 0: return top && left;
    case 1: return top && !left;
    case 2: return !top && left;
    default: return !top && !left;
  }
}

GroundTruth quadrant_mask(int size, int q) {
  std::vector<std::uint8_t> mask(static_cast<std::size_t>(size) * size, 0);
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      if (in_quadrant(y, x, size, q)) {
        mask[static_cast<std::size_t>(y) * size + x] = 1;
      }
    }
  }
  return GroundTruth::from_mask(size, size, std::move(mask));
}

// Bright blob filling quadrant q, optional faint background noise.
Tensor quadrant_image(Rng& rng, int size, int q, bool background_noise) {
  Tensor img({1, size, size});
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      if (in_quadrant(y, x, size, q)) {
        img.at(0, y, x) = quantized(rng.uniform_int(128, 255));
      } else if (background_noise) {
        img.at(0, y, x) = quantized(rng.uniform_int(0, 8));
      }
    }
  }
  return img;
}

}  // namespace

Fixture make_quadrant_fixture(std::uint64_t seed, int image_count) {
  constexpr int kSize = 16;
  constexpr int kBlocks = kSize / 2;  // conv stride 2 -> 8x8 feature maps

  Fixture fixture;
  fixture.family = "quadrant";

  ModelBundle& model = fixture.model;
  model.input_shape = {1, kSize, kSize};
  model.class_count = 4;
  model.layers = {
      LayerSpec::conv2d("conv1", 2, 1, 2, 2, /*stride=*/2, /*padding=*/0),
      LayerSpec::relu("relu1"),
      LayerSpec::flatten("flat"),
      LayerSpec::linear("head", 4, 2 * kBlocks * kBlocks),
  };

  // Channel 0 sums each 2x2 block; channel 1 is a diagonal-detail probe the
  // head ignores.
  LayerParams conv;
  conv.weight = Tensor({2, 1, 2, 2}, {1.0, 1.0, 1.0, 1.0, 1.0, -1.0, -1.0, 1.0});
  model.weights.emplace("conv1", std::move(conv));

  // Head weight: class c reads the channel-0 block sums of quadrant c, so the
  // class-c logit equals the pixel sum of image quadrant c exactly.
  LayerParams head;
  head.weight = Tensor({4, 2 * kBlocks * kBlocks});
  for (int c = 0; c < 4; ++c) {
    for (int by = 0; by < kBlocks; ++by) {
      for (int bx = 0; bx < kBlocks; ++bx) {
        if (in_quadrant(by, bx, kBlocks, c)) {
          const std::size_t flat_index =
              static_cast<std::size_t>(by) * kBlocks + bx;  // channel 0 plane
          head.weight[static_cast<std::size_t>(c) * (2 * kBlocks * kBlocks) +
                      flat_index] = 1.0;
        }
      }
    }
  }
  model.weights.emplace("head", std::move(head));
  model.validate();

  Rng rng(seed);
  for (int i = 0; i < image_count; ++i) {
    FixtureImage sample;
    sample.id = image_id(i);
    sample.label = i % 4;
    sample.image = quadrant_image(rng, kSize, sample.label, i % 2 == 1);
    sample.mask = quadrant_mask(kSize, sample.label);
    fixture.images.push_back(std::move(sample));
  }
  return fixture;
}

Fixture make_dead_relu_fixture(std::uint64_t seed, int image_count) {
  constexpr int kSize = 16;
  constexpr int kFeatChannels = 2;
  constexpr int kGateUnits = 2;
  const int flat = kFeatChannels * kSize * kSize;

  Fixture fixture;
  fixture.family = "dead-relu";

  ModelBundle& model = fixture.model;
  model.input_shape = {1, kSize, kSize};
  model.class_count = 2;
  model.layers = {
      LayerSpec::conv2d("feat", kFeatChannels, 1, 3, 3, /*stride=*/1,
                        /*padding=*/1),
      LayerSpec::relu("relu1"),
      LayerSpec::flatten("flat"),
      LayerSpec::linear("gate", kGateUnits, flat, /*bias=*/true),
      LayerSpec::relu("relu2"),
      LayerSpec::linear("head", 2, kGateUnits),
  };

  Rng rng(seed);

  LayerParams feat;
  feat.weight = Tensor({kFeatChannels, 1, 3, 3});
  for (double& v : feat.weight.values()) v = rng.uniform(0.05, 0.35);
  model.weights.emplace("feat", std::move(feat));

  // Gate: h_u = b_u - sum_i g_ui f_i with g > 0, so h falls as the input
  // scales up from black. The head flips the sign back, making the class-0
  // gradient positive wherever the gate is still open.
  LayerParams gate;
  gate.weight = Tensor({kGateUnits, flat});
  for (double& v : gate.weight.values()) v = -rng.uniform(0.005, 0.02);
  gate.bias = Tensor({kGateUnits});  // calibrated below
  model.weights.emplace("gate", std::move(gate));

  LayerParams head;
  head.weight = Tensor({2, kGateUnits}, {-1.0, -1.0, 1.0, 1.0});
  model.weights.emplace("head", std::move(head));

  for (int i = 0; i < image_count; ++i) {
    FixtureImage sample;
    sample.id = image_id(i);
    sample.label = 0;
    const int quadrant = i % 4;
    sample.image = quadrant_image(rng, kSize, quadrant, false);
    sample.mask = quadrant_mask(kSize, quadrant);
    fixture.images.push_back(std::move(sample));
  }

  // Calibrate the gate bias to half the smallest per-image drive: dead at
  // alpha = 1 for every image, open for roughly alpha < 0.5.
  model.validate();
  std::vector<double> min_drive(kGateUnits,
                                std::numeric_limits<double>::infinity());
  for (const FixtureImage& sample : fixture.images) {
    const Tensor gate_out = forward(model, sample.image).activation("gate");
    for (int u = 0; u < kGateUnits; ++u) {
      const double drive = -gate_out[static_cast<std::size_t>(u)];  // bias is 0 here
      if (drive < min_drive[static_cast<std::size_t>(u)]) {
        min_drive[static_cast<std::size_t>(u)] = drive;
      }
    }
  }
  Tensor bias({kGateUnits});
  for (int u = 0; u < kGateUnits; ++u) {
    const double drive = min_drive[static_cast<std::size_t>(u)];
    if (!(drive > 0.0)) {
      throw ValidationError("dead-relu fixture: gate unit sees no drive");
    }
    bias[static_cast<std::size_t>(u)] = 0.5 * drive;
  }
  model.weights.at("gate").bias = bias;

  // Generation-time check: grad-cam gradients must vanish at I while the
  // integrated map keeps signal.
  for (const FixtureImage& sample : fixture.images) {
    const TapResult tap = backward_to_layer(model, sample.image, 0, "feat");
    for (double g : tap.tapped_gradients.values()) {
      if (g != 0.0) {
        throw ValidationError("dead-relu fixture: tapped gradient not dead at I");
      }
    }
    AttributionRequest request;
    request.image = sample.image;
    request.class_index = 0;
    request.method = Method::integrated_grad_cam;
    request.path.steps = 50;
    const SaliencyMap map = integrated_grad_cam(model, request);
    double mx = 0.0;
    for (double v : map.values.values()) mx = v > mx ? v : mx;
    if (!(mx > 0.0)) {
      throw ValidationError("dead-relu fixture: integrated map is all-zero");
    }
  }
  return fixture;
}

namespace {

// Smallest |pre-activation| at the ReLU layers and smallest max-pool winner
// margin; fixture inputs must keep this above the finite-difference radius.
double kink_margin(const ModelBundle& model, const Tensor& input) {
  const ForwardResult fwd = forward(model, input);
  double margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < model.layers.size(); ++i) {
    const LayerSpec& l = model.layers[i];
    if (l.kind == LayerKind::relu) {
      const Tensor& pre = i == 0 ? input : fwd.layer_outputs[i - 1];
      for (double v : pre.values()) {
        const double m = std::abs(v);
        if (m < margin) margin = m;
      }
    } else if (l.kind == LayerKind::maxpool2d) {
      const Tensor& in = i == 0 ? input : fwd.layer_outputs[i - 1];
      const int c = in.extent(0);
      const int oh = fwd.layer_outputs[i].extent(1);
      const int ow = fwd.layer_outputs[i].extent(2);
      for (int ch = 0; ch < c; ++ch) {
        for (int oy = 0; oy < oh; ++oy) {
          for (int ox = 0; ox < ow; ++ox) {
            double best = -std::numeric_limits<double>::infinity();
            double second = best;
            for (int ky = 0; ky < l.pool_kernel; ++ky) {
              for (int kx = 0; kx < l.pool_kernel; ++kx) {
                const double v = in.at(ch, oy * l.pool_stride + ky,
                                       ox * l.pool_stride + kx);
                if (v > best) {
                  second = best;
                  best = v;
                } else if (v > second) {
                  second = v;
                }
              }
            }
            // Windows whose max is a ReLU-clamped zero are flat near the
            // input, not a kink; only a positive winner can change routing.
            if (best <= 0.0) continue;
            const double gap = best - second;
            if (gap < margin) margin = gap;
          }
        }
      }
    }
  }
  return margin;
}

}  // namespace

Fixture make_gradcheck_fixture(std::uint64_t seed, int image_count,
                               bool with_bias) {
  constexpr int kSize = 12;
  constexpr double kMargin = 1e-3;

  for (int attempt = 0; attempt < 16; ++attempt) {
    Rng rng(seed + 0x9e3779b97f4a7c15ull * static_cast<std::uint64_t>(attempt));

    Fixture fixture;
    fixture.family = "gradcheck";

    ModelBundle& model = fixture.model;
    model.input_shape = {1, kSize, kSize};
    model.class_count = 3;
    model.layers = {
        LayerSpec::conv2d("conv1", 3, 1, 3, 3, 1, 1, with_bias),
        LayerSpec::relu("relu1"),
        LayerSpec::maxpool2d("pool1", 2, 2),
        LayerSpec::conv2d("conv2", 4, 3, 3, 3, 1, 1, with_bias),
        LayerSpec::relu("relu2"),
        LayerSpec::globalavgpool("gap"),
        LayerSpec::linear("head", 3, 4, with_bias),
    };

    auto random_params = [&](const std::vector<int>& wshape, int bias_len) {
      LayerParams p;
      p.weight = Tensor(wshape);
      for (double& v : p.weight.values()) v = rng.uniform(-0.5, 0.5);
      if (with_bias) {
        p.bias = Tensor({bias_len});
        for (double& v : p.bias->values()) v = rng.uniform(-0.1, 0.1);
      }
      return p;
    };
    model.weights.emplace("conv1", random_params({3, 1, 3, 3}, 3));
    model.weights.emplace("conv2", random_params({4, 3, 3, 3}, 4));
    model.weights.emplace("head", random_params({3, 4}, 3));
    model.validate();

    bool ok = true;
    for (int i = 0; i < image_count && ok; ++i) {
      // Redraw each image until its kinks clear the margin; a net whose
      // pre-activations crowd zero gets abandoned for the next attempt.
      FixtureImage sample;
      ok = false;
      for (int draw = 0; draw < 64; ++draw) {
        sample.image = Tensor({1, kSize, kSize});
        for (double& v : sample.image.values()) {
          v = quantized(rng.uniform_int(13, 242));
        }
        if (kink_margin(model, sample.image) >= kMargin) {
          ok = true;
          break;
        }
      }
      if (!ok) break;
      sample.id = image_id(i);
      sample.label = argmax_class(model, sample.image);
      // Plumbing mask: a centered window, enough for format exercises.
      std::vector<std::uint8_t> mask(kSize * kSize, 0);
      for (int y = 3; y < 9; ++y) {
        for (int x = 3; x < 9; ++x) {
          mask[static_cast<std::size_t>(y) * kSize + x] = 1;
        }
      }
      sample.mask = GroundTruth::from_mask(kSize, kSize, std::move(mask));
      fixture.images.push_back(std::move(sample));
    }
    if (ok) return fixture;
  }
  throw ValidationError("gradcheck fixture: no kink-free draw after 16 attempts");
}

Fixture make_fixture(const std::string& family, std::uint64_t seed) {
  if (family == "quadrant") return make_quadrant_fixture(seed);
  if (family == "dead-relu") return make_dead_relu_fixture(seed);
  if (family == "gradcheck") return make_gradcheck_fixture(seed);
  throw UsageError("unknown fixture family '" + family +
                   "' (expected quadrant, dead-relu or gradcheck)");
}

void write_fixture(const Fixture& fixture, const std::filesystem::path& dir) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "masks");

  save_bundle(fixture.model, dir / "manifest.json", dir / "weights.blob");

  Dataset dataset;
  dataset.root = dir;
  for (const FixtureImage& sample : fixture.images) {
    const Tensor& img = sample.image;
    if (img.extent(0) != 1) {
      throw ValidationError("fixture writer expects single-channel images");
    }
    const int h = img.extent(1), w = img.extent(2);
    std::vector<std::uint8_t> pixels(static_cast<std::size_t>(h) * w);
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        pixels[static_cast<std::size_t>(y) * w + x] =
            static_cast<std::uint8_t>(std::lround(img.at(0, y, x) * 255.0));
      }
    }
    std::vector<std::uint8_t> mask_pixels(sample.mask.mask.size());
    for (std::size_t i = 0; i < mask_pixels.size(); ++i) {
      mask_pixels[i] = sample.mask.mask[i] ? 255 : 0;
    }
    const std::string file = sample.id + ".png";
    save_png_gray(dir / "images" / file, w, h, pixels);
    save_png_gray(dir / "masks" / file, sample.mask.width, sample.mask.height,
                  mask_pixels);
    dataset.records.push_back(
        {"images/" + file, "masks/" + file, sample.label});
  }
  save_dataset_index(dataset, dir / "index.txt");
}

}  // namespace igcam
