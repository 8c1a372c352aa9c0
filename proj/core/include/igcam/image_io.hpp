#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "igcam/metrics.hpp"
#include "igcam/postprocess.hpp"
#include "igcam/tensor.hpp"

namespace igcam {

// 8-bit interleaved pixels as decoded from disk; channels is 1 (gray) or 3 (RGB).
struct DecodedImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  std::vector<std::uint8_t> pixels;
};

DecodedImage decode_png(const std::filesystem::path& path);

// 8-bit image -> (C,H,W) tensor in [0,1] (values are v/255), resized to the
// requested extents with the shared half-pixel bilinear convention. Grayscale
// files replicate to the requested channel count; an RGB file cannot feed a
// single-channel model.
Tensor load_image(const std::filesystem::path& path, int channels, int height,
                  int width);

// Grayscale PNG, nonzero = foreground. No resizing: masks must already match
// the evaluated map's dimensions.
GroundTruth load_mask(const std::filesystem::path& path);

void save_heatmap(const RenderedHeatmap& heatmap, const std::filesystem::path& path);

// 8-bit grayscale PNG writer used by the fixture generator.
void save_png_gray(const std::filesystem::path& path, int width, int height,
                   const std::vector<std::uint8_t>& pixels);

}  // namespace igcam
