#pragma once

#include <filesystem>

#include "igcam/attribution.hpp"

namespace igcam {

// Binary saliency dump: 8-byte magic "IGCAMSAL", then little-endian header
// (version, resolution tag, method, signed flag, class index, height, width,
// tap-layer name length + bytes), then height*width float64 values row-major.
// Round-trips losslessly.
void save_saliency(const SaliencyMap& map, const std::filesystem::path& path);
SaliencyMap load_saliency(const std::filesystem::path& path);

}  // namespace igcam
