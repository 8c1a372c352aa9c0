#include "igcam/image_io.hpp"

#include <cstdio>
#include <memory>

#include <png.h>

#include "igcam/error.hpp"

namespace igcam {

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

[[noreturn]] void decode_fail(const std::filesystem::path& path,
                              const std::string& why) {
  throw InputError("cannot decode '" + path.string() + "': " + why);
}

}  // namespace

DecodedImage decode_png(const std::filesystem::path& path) {
  FilePtr file(std::fopen(path.string().c_str(), "rb"));
  if (!file) throw InputError("cannot open '" + path.string() + "'");

  png_byte header[8];
  if (std::fread(header, 1, 8, file.get()) != 8 || png_sig_cmp(header, 0, 8)) {
    decode_fail(path, "not a PNG file");
  }

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) decode_fail(path, "libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    decode_fail(path, "libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    decode_fail(path, "corrupt PNG stream");
  }

  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const png_byte bit_depth = png_get_bit_depth(png, info);
  const png_byte color_type = png_get_color_type(png, info);
  if (bit_depth == 16) {
    png_destroy_read_struct(&png, &info, nullptr);
    decode_fail(path, "unsupported bit depth 16 (8-bit only)");
  }
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8)
    png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  DecodedImage img;
  img.width = static_cast<int>(png_get_image_width(png, info));
  img.height = static_cast<int>(png_get_image_height(png, info));
  img.channels = static_cast<int>(png_get_channels(png, info));
  if (img.channels != 1 && img.channels != 3) {
    png_destroy_read_struct(&png, &info, nullptr);
    decode_fail(path, "unsupported channel layout (" +
                          std::to_string(img.channels) + " channels after expansion)");
  }

  const std::size_t row_bytes =
      static_cast<std::size_t>(img.width) * static_cast<std::size_t>(img.channels);
  img.pixels.resize(row_bytes * static_cast<std::size_t>(img.height));
  std::vector<png_bytep> rows(static_cast<std::size_t>(img.height));
  for (int y = 0; y < img.height; ++y) {
    rows[static_cast<std::size_t>(y)] =
        img.pixels.data() + static_cast<std::size_t>(y) * row_bytes;
  }
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return img;
}

Tensor load_image(const std::filesystem::path& path, int channels, int height,
                  int width) {
  if (channels < 1 || height < 1 || width < 1) {
    throw ValidationError("target image shape must be positive");
  }
  const DecodedImage img = decode_png(path);
  if (img.channels == 3 && channels != 3) {
    throw InputError("'" + path.string() + "' is RGB but the model expects " +
                     std::to_string(channels) + " channel(s)");
  }

  // 8-bit -> [0,1] planes.
  std::vector<std::vector<double>> planes(static_cast<std::size_t>(img.channels));
  for (int c = 0; c < img.channels; ++c) {
    auto& plane = planes[static_cast<std::size_t>(c)];
    plane.resize(static_cast<std::size_t>(img.width) * img.height);
    for (std::size_t p = 0; p < plane.size(); ++p) {
      plane[p] = img.pixels[p * static_cast<std::size_t>(img.channels) +
                            static_cast<std::size_t>(c)] /
                 255.0;
    }
  }

  if (img.height != height || img.width != width) {
    for (auto& plane : planes) {
      plane = resize_plane_bilinear(plane.data(), img.height, img.width, height, width);
    }
  }

  Tensor out({channels, height, width});
  for (int c = 0; c < channels; ++c) {
    const auto& plane =
        planes[static_cast<std::size_t>(img.channels == 1 ? 0 : c)];
    for (int y = 0; y < height; ++y) {
      for (int x = 0; x < width; ++x) {
        out.at(c, y, x) = plane[static_cast<std::size_t>(y) * width + x];
      }
    }
  }
  return out;
}

GroundTruth load_mask(const std::filesystem::path& path) {
  const DecodedImage img = decode_png(path);
  if (img.channels != 1) {
    throw InputError("mask '" + path.string() + "' must be a grayscale PNG");
  }
  std::vector<std::uint8_t> mask(img.pixels.size());
  for (std::size_t i = 0; i < mask.size(); ++i) {
    mask[i] = img.pixels[i] ? 1 : 0;
  }
  return GroundTruth::from_mask(img.height, img.width, std::move(mask));
}

namespace {

void write_png(const std::filesystem::path& path, int width, int height,
               int color_type, int channels, const std::uint8_t* pixels) {
  FilePtr file(std::fopen(path.string().c_str(), "wb"));
  if (!file) throw InputError("cannot write '" + path.string() + "'");

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw InputError("libpng init failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw InputError("libpng init failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw InputError("PNG write failed for '" + path.string() + "'");
  }

  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(width),
               static_cast<png_uint_32>(height), 8, color_type,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);

  const std::size_t row_bytes =
      static_cast<std::size_t>(width) * static_cast<std::size_t>(channels);
  std::vector<png_bytep> rows(static_cast<std::size_t>(height));
  for (int y = 0; y < height; ++y) {
    rows[static_cast<std::size_t>(y)] =
        const_cast<png_bytep>(pixels + static_cast<std::size_t>(y) * row_bytes);
  }
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

}  // namespace

void save_heatmap(const RenderedHeatmap& heatmap, const std::filesystem::path& path) {
  if (heatmap.width < 1 || heatmap.height < 1 ||
      heatmap.rgba.size() !=
          static_cast<std::size_t>(heatmap.width) * heatmap.height * 4) {
    throw ValidationError("rendered heatmap has inconsistent dimensions");
  }
  write_png(path, heatmap.width, heatmap.height, PNG_COLOR_TYPE_RGBA, 4,
            heatmap.rgba.data());
}

void save_png_gray(const std::filesystem::path& path, int width, int height,
                   const std::vector<std::uint8_t>& pixels) {
  if (pixels.size() != static_cast<std::size_t>(width) * height) {
    throw ValidationError("pixel buffer does not match dimensions");
  }
  write_png(path, width, height, PNG_COLOR_TYPE_GRAY, 1, pixels.data());
}

}  // namespace igcam
