#include "igcam/postprocess.hpp"

#include <cmath>

#include "igcam/colormap.hpp"
#include "igcam/error.hpp"

namespace igcam {

namespace {

struct AxisSample {
  int lo;
  int hi;
  double frac;  // weight of hi
};

AxisSample axis_sample(int dst, int src_extent, int dst_extent) {
  double coord = (static_cast<double>(dst) + 0.5) * src_extent / dst_extent - 0.5;
  if (coord < 0.0) coord = 0.0;
  const double max_coord = static_cast<double>(src_extent - 1);
  if (coord > max_coord) coord = max_coord;
  AxisSample s;
  s.lo = static_cast<int>(coord);
  s.hi = s.lo + 1 < src_extent ? s.lo + 1 : s.lo;
  s.frac = coord - s.lo;
  return s;
}

}  // namespace

std::vector<double> resize_plane_bilinear(const double* src, int src_h, int src_w,
                                          int dst_h, int dst_w) {
  if (src_h < 1 || src_w < 1 || dst_h < 1 || dst_w < 1) {
    throw ValidationError("bilinear resize requires positive dimensions");
  }
  std::vector<double> out(static_cast<std::size_t>(dst_h) * dst_w);
  for (int y = 0; y < dst_h; ++y) {
    const AxisSample sy = axis_sample(y, src_h, dst_h);
    for (int x = 0; x < dst_w; ++x) {
      const AxisSample sx = axis_sample(x, src_w, dst_w);
      const double v00 = src[static_cast<std::size_t>(sy.lo) * src_w + sx.lo];
      const double v01 = src[static_cast<std::size_t>(sy.lo) * src_w + sx.hi];
      const double v10 = src[static_cast<std::size_t>(sy.hi) * src_w + sx.lo];
      const double v11 = src[static_cast<std::size_t>(sy.hi) * src_w + sx.hi];
      const double top = v00 + (v01 - v00) * sx.frac;
      const double bottom = v10 + (v11 - v10) * sx.frac;
      out[static_cast<std::size_t>(y) * dst_w + x] = top + (bottom - top) * sy.frac;
    }
  }
  return out;
}

SaliencyMap upsample_bilinear(const SaliencyMap& map, int target_h, int target_w) {
  if (target_h < 1 || target_w < 1) {
    throw ValidationError("upsample target must be at least 1x1");
  }
  SaliencyMap out = map;
  out.values = Tensor({target_h, target_w},
                      resize_plane_bilinear(map.values.data(), map.height(),
                                            map.width(), target_h, target_w));
  out.resolution = Resolution::image;
  return out;
}

SaliencyMap normalize_max(const SaliencyMap& map) {
  double mx = 0.0;
  for (double v : map.values.values()) {
    if (v < 0.0) {
      throw ValidationError("normalize_max requires a non-negative map");
    }
    if (v > mx) mx = v;
  }
  SaliencyMap out = map;
  if (mx == 0.0) return out;  // all-zero maps pass through unchanged
  for (double& v : out.values.values()) v /= mx;
  return out;
}

SaliencyMap absolute(const SaliencyMap& map) {
  SaliencyMap out = map;
  for (double& v : out.values.values()) v = std::abs(v);
  out.signed_values = false;
  return out;
}

RenderedHeatmap render(const SaliencyMap& map, const Tensor* base_image,
                       double blend) {
  if (!(blend >= 0.0 && blend <= 1.0)) {
    throw ValidationError("blend must lie in [0,1]");
  }
  const int h = map.height();
  const int w = map.width();
  if (base_image) {
    if (base_image->rank() != 3 ||
        (base_image->extent(0) != 1 && base_image->extent(0) != 3)) {
      throw ValidationError("base image must be (1,H,W) or (3,H,W)");
    }
    if (base_image->extent(1) != h || base_image->extent(2) != w) {
      throw ValidationError("base image " + base_image->shape_string() +
                            " does not match map " + map.values.shape_string());
    }
  }

  const auto& table = jet_colormap();
  RenderedHeatmap out;
  out.width = w;
  out.height = h;
  out.blend = base_image ? blend : 1.0;
  out.rgba.resize(static_cast<std::size_t>(h) * w * 4);

  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      double v = map.values.at(y, x);
      if (v < 0.0) v = 0.0;
      if (v > 1.0) v = 1.0;
      const auto& rgb = table[static_cast<std::size_t>(std::lround(v * 255.0))];
      const std::size_t o = (static_cast<std::size_t>(y) * w + x) * 4;
      for (int ch = 0; ch < 3; ++ch) {
        double value = rgb[static_cast<std::size_t>(ch)] / 255.0;
        if (base_image) {
          const int src_ch = base_image->extent(0) == 3 ? ch : 0;
          value = out.blend * value + (1.0 - out.blend) * base_image->at(src_ch, y, x);
        }
        out.rgba[o + static_cast<std::size_t>(ch)] =
            static_cast<std::uint8_t>(std::lround(255.0 * value));
      }
      out.rgba[o + 3] = 255;
    }
  }
  return out;
}

}  // namespace igcam
