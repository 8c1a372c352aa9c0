#pragma once

#include <cstdint>
#include <vector>

#include "igcam/attribution.hpp"
#include "igcam/tensor.hpp"

namespace igcam {

// 8-bit RGBA raster, row-major, alpha = 255 everywhere.
struct RenderedHeatmap {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgba;
  int colormap_id = 0;  // 0 = the built-in jet table
  double blend = 1.0;
};

// Resizes one plane with half-pixel-center bilinear sampling: output pixel x
// maps to input coordinate ((x+0.5)*src_w/dst_w) - 0.5, clamped to the valid
// range (same along y). Convex combination of neighbours, so values never
// overshoot the input min/max and constants are preserved exactly.
std::vector<double> resize_plane_bilinear(const double* src, int src_h, int src_w,
                                          int dst_h, int dst_w);

// Raw (feature-resolution) map -> image-resolution map.
SaliencyMap upsample_bilinear(const SaliencyMap& map, int target_h, int target_w);

// Divides by the max value; an all-zero map is returned unchanged.
// Input must be non-negative; output lies in [0,1].
SaliencyMap normalize_max(const SaliencyMap& map);

// Elementwise magnitude; turns a signed map into a plain non-negative one.
SaliencyMap absolute(const SaliencyMap& map);

// Colormap lookup over a map normalized to [0,1], optionally alpha-blended
// over a base image (C,H,W in [0,1], 1 or 3 channels):
//   out = blend * colormap(v) + (1 - blend) * image
RenderedHeatmap render(const SaliencyMap& map, const Tensor* base_image,
                       double blend);

}  // namespace igcam
