#include "igcam/colormap.hpp"

#include <cmath>

namespace igcam {

namespace {

std::uint8_t ramp(double v, double center) {
  const double c = 1.5 - std::abs(4.0 * v - center);
  const double clamped = c < 0.0 ? 0.0 : (c > 1.0 ? 1.0 : c);
  return static_cast<std::uint8_t>(std::lround(255.0 * clamped));
}

std::array<std::array<std::uint8_t, 3>, 256> build_jet() {
  std::array<std::array<std::uint8_t, 3>, 256> table{};
  for (int i = 0; i < 256; ++i) {
    const double v = static_cast<double>(i) / 255.0;
    table[static_cast<std::size_t>(i)] = {ramp(v, 3.0), ramp(v, 2.0), ramp(v, 1.0)};
  }
  return table;
}

}  // namespace

const std::array<std::array<std::uint8_t, 3>, 256>& jet_colormap() {
  static const auto table = build_jet();
  return table;
}

}  // namespace igcam
