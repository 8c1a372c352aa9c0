#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "igcam/metrics.hpp"
#include "igcam/model.hpp"

namespace igcam {

struct FixtureImage {
  std::string id;
  Tensor image;  // (C,H,W), values quantized to k/255 so PNG round-trips exactly
  GroundTruth mask;
  int label = 0;
};

struct Fixture {
  std::string family;
  ModelBundle model;
  std::vector<FixtureImage> images;
};

// Handcrafted model whose class-c logit equals the pixel sum of image
// quadrant c exactly (block-sum conv channel, quadrant-indicator head).
// Bias-free, so the black baseline produces all-zero activations.
Fixture make_quadrant_fixture(std::uint64_t seed, int image_count = 10);

// Net with a gating ReLU that is inactive at every dataset image but active
// on the early part of the black-baseline path. All gradient routes to the
// tapped conv layer pass through the dead gate, so grad_cam is identically
// zero at I while path-integrated maps are not. Verified during generation.
Fixture make_dead_relu_fixture(std::uint64_t seed, int image_count = 6);

// Random-seeded conv/pool/conv/gap/linear net for gradient checking. Inputs
// and weights are regenerated until every ReLU pre-activation and max-pool
// margin clears 1e-3, keeping finite differences away from kinks.
Fixture make_gradcheck_fixture(std::uint64_t seed, int image_count = 3,
                               bool with_bias = true);

// Dispatch by family name: "quadrant", "dead-relu", "gradcheck".
Fixture make_fixture(const std::string& family, std::uint64_t seed);

// Writes manifest.json, weights.blob, images/, masks/ and index.txt under
// `dir`. Deterministic: the same fixture produces byte-identical trees.
void write_fixture(const Fixture& fixture, const std::filesystem::path& dir);

}  // namespace igcam
