#pragma once

#include <filesystem>

#include "igcam/model.hpp"

namespace igcam {

// Model bundles are stored as a JSON manifest (architecture plus per-tensor
// offsets/shapes) next to a blob of raw little-endian 64-bit floats. Offsets
// are byte positions into the blob; the declared tensors partition it exactly.
//
// Manifest layout (format_version 1):
//   { "format_version": 1,
//     "input_shape": [C,H,W],
//     "class_count": n,
//     "layers": [
//       { "name": "conv1", "kind": "conv2d", "out_channels": .., "in_channels": ..,
//         "kernel_h": .., "kernel_w": .., "stride": .., "padding": ..,
//         "weight": {"offset": 0, "shape": [o,i,kh,kw]},
//         "bias":   {"offset": 288, "shape": [o]} },       // optional
//       { "name": "relu1", "kind": "relu" },
//       { "name": "pool1", "kind": "maxpool2d", "kernel": 2, "stride": 2 },
//       { "name": "gap", "kind": "globalavgpool" },
//       { "name": "flat", "kind": "flatten" },
//       { "name": "head", "kind": "linear", "out_features": .., "in_features": ..,
//         "weight": {...}, "bias": {...} } ] }

ModelBundle load_bundle(const std::filesystem::path& manifest_path,
                        const std::filesystem::path& blob_path);

// Writes the canonical manifest (offsets assigned in layer order, weight
// before bias) and the matching blob. load_bundle(save_bundle(m)) reproduces
// every tensor bit-exactly.
void save_bundle(const ModelBundle& model,
                 const std::filesystem::path& manifest_path,
                 const std::filesystem::path& blob_path);

}  // namespace igcam
