#pragma once

#include <array>
#include <cstdint>

namespace igcam {

// 256-entry jet lookup table. Entry i encodes value v = i/255 through the
// piecewise-linear ramps
//   r = clamp(1.5 - |4v - 3|), g = clamp(1.5 - |4v - 2|), b = clamp(1.5 - |4v - 1|)
// quantized as round(255 * channel).
const std::array<std::array<std::uint8_t, 3>, 256>& jet_colormap();

}  // namespace igcam
