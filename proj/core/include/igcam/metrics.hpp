#pragma once

#include <cstdint>
#include <vector>

#include "igcam/attribution.hpp"
#include "igcam/tensor.hpp"

namespace igcam {

// Binary foreground mask at image resolution.
struct GroundTruth {
  int height = 0;
  int width = 0;
  std::vector<std::uint8_t> mask;  // nonzero = foreground, row-major
  int positive_count = 0;

  static GroundTruth from_mask(int height, int width, std::vector<std::uint8_t> mask);
};

// In-mask attribution mass over total mass, ||S.G||_1 / ||S||_1.
// Signed maps are measured by magnitude. Throws UndefinedMetricError when the
// map carries no mass at all.
double ebpg(const SaliencyMap& s, const GroundTruth& g);

// Fraction of the top-N pixels of S (N = positive foreground count) lying
// inside the mask. Ties at the cutoff break by value descending, then
// row-major index ascending.
double bbox_score(const SaliencyMap& s, const GroundTruth& g);

// Indices of the `keep` highest-magnitude pixels under the shared tie rule.
std::vector<std::size_t> top_k_indices(const SaliencyMap& s, std::size_t keep);

// Keeps the pixels whose saliency is among the top ceil(fraction*H*W);
// every channel of a discarded pixel is zeroed.
Tensor threshold_top(const Tensor& image, const SaliencyMap& s, double fraction);

}  // namespace igcam
