#include "igcam/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "igcam/error.hpp"

namespace igcam {

namespace {

void check_shapes(const SaliencyMap& s, const GroundTruth& g) {
  if (s.height() != g.height || s.width() != g.width) {
    throw ValidationError("saliency map " + s.values.shape_string() +
                          " does not match mask (" + std::to_string(g.height) +
                          "," + std::to_string(g.width) + ")");
  }
  if (g.positive_count < 1) {
    throw ValidationError("ground-truth mask has no foreground pixels");
  }
}

double magnitude(const SaliencyMap& s, std::size_t i) {
  const double v = s.values[i];
  return s.signed_values ? std::abs(v) : v;
}

}  // namespace

GroundTruth GroundTruth::from_mask(int height, int width,
                                   std::vector<std::uint8_t> mask) {
  if (mask.size() != static_cast<std::size_t>(height) * width) {
    throw ValidationError("mask data length does not match dimensions");
  }
  GroundTruth g;
  g.height = height;
  g.width = width;
  g.mask = std::move(mask);
  g.positive_count = 0;
  for (std::uint8_t v : g.mask) {
    if (v) ++g.positive_count;
  }
  return g;
}

double ebpg(const SaliencyMap& s, const GroundTruth& g) {
  check_shapes(s, g);
  double inside = 0.0, total = 0.0;
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    const double v = magnitude(s, i);
    if (!s.signed_values && s.values[i] < 0.0) {
      throw ValidationError("ebpg requires a non-negative map");
    }
    total += v;
    if (g.mask[i]) inside += v;
  }
  if (total == 0.0) {
    throw UndefinedMetricError("ebpg undefined for an all-zero map");
  }
  return inside / total;
}

std::vector<std::size_t> top_k_indices(const SaliencyMap& s, std::size_t keep) {
  const std::size_t total = s.values.size();
  if (keep > total) keep = total;
  std::vector<std::size_t> order(total);
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Value descending, row-major index ascending on ties.
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return magnitude(s, a) > magnitude(s, b);
  });
  order.resize(keep);
  return order;
}

double bbox_score(const SaliencyMap& s, const GroundTruth& g) {
  check_shapes(s, g);
  bool any_mass = false;
  for (std::size_t i = 0; i < s.values.size(); ++i) {
    if (!s.signed_values && s.values[i] < 0.0) {
      throw ValidationError("bbox_score requires a non-negative map");
    }
    if (magnitude(s, i) != 0.0) any_mass = true;
  }
  if (!any_mass) {
    throw UndefinedMetricError("bbox_score undefined for an all-zero map");
  }
  const std::size_t n = static_cast<std::size_t>(g.positive_count);
  const std::vector<std::size_t> top = top_k_indices(s, n);
  std::size_t inside = 0;
  for (std::size_t i : top) {
    if (g.mask[i]) ++inside;
  }
  return static_cast<double>(inside) / static_cast<double>(top.size());
}

Tensor threshold_top(const Tensor& image, const SaliencyMap& s, double fraction) {
  if (!(fraction > 0.0 && fraction <= 1.0)) {
    throw ValidationError("keep fraction must lie in (0,1]");
  }
  if (image.rank() != 3 || image.extent(1) != s.height() ||
      image.extent(2) != s.width()) {
    throw ValidationError("image " + image.shape_string() +
                          " does not match saliency map " +
                          s.values.shape_string());
  }
  const std::size_t pixels = static_cast<std::size_t>(s.height()) * s.width();
  const std::size_t keep =
      static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(pixels)));

  std::vector<std::uint8_t> keep_mask(pixels, 0);
  for (std::size_t i : top_k_indices(s, keep)) keep_mask[i] = 1;

  Tensor out = image;
  const int c = image.extent(0), h = image.extent(1), w = image.extent(2);
  for (int ch = 0; ch < c; ++ch) {
    for (int y = 0; y < h; ++y) {
      for (int x = 0; x < w; ++x) {
        if (!keep_mask[static_cast<std::size_t>(y) * w + x]) {
          out.at(ch, y, x) = 0.0;
        }
      }
    }
  }
  return out;
}

}  // namespace igcam
