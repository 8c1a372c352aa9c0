#include <doctest.h>

#include <fstream>

#include "igcam/dataset.hpp"
#include "igcam/error.hpp"
#include "igcam/fixtures.hpp"
#include "igcam/image_io.hpp"
#include "igcam/model_io.hpp"
#include "igcam/saliency_io.hpp"
#include "test_support.hpp"

using namespace igcam;
namespace ts = test_support;

namespace {

void write_bytes(const std::filesystem::path& path,
                 const std::vector<unsigned char>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
}

// 2x2 16-bit grayscale PNG, for the unsupported-bit-depth path.
const std::vector<unsigned char> kGray16Png = {
    0x89, 0x50, 0x4e, 0x47, 0x0d, 0x0a, 0x1a, 0x0a, 0x00, 0x00, 0x00, 0x0d,
    0x49, 0x48, 0x44, 0x52, 0x00, 0x00, 0x00, 0x02, 0x00, 0x00, 0x00, 0x02,
    0x10, 0x00, 0x00, 0x00, 0x00, 0x07, 0x4d, 0x8e, 0xbb, 0x00, 0x00, 0x00,
    0x12, 0x49, 0x44, 0x41, 0x54, 0x78, 0x9c, 0x63, 0x60, 0x60, 0xf8, 0xff,
    0x9f, 0xa1, 0x81, 0x81, 0xe5, 0x12, 0x00, 0x0f, 0xd7, 0x03, 0x55, 0x9e,
    0x7e, 0xca, 0xd7, 0x00, 0x00, 0x00, 0x00, 0x49, 0x45, 0x4e, 0x44, 0xae,
    0x42, 0x60, 0x82};

bool tensors_identical(const Tensor& a, const Tensor& b) {
  return a.shape() == b.shape() && a.values() == b.values();
}

}  // namespace

TEST_CASE("bundle save/load round-trips every tensor bit-exactly") {
  const auto dir = ts::scratch_dir("io_roundtrip");
  const Fixture fixture = make_gradcheck_fixture(67, 1);  // has biases
  save_bundle(fixture.model, dir / "m.json", dir / "w.blob");
  const ModelBundle loaded = load_bundle(dir / "m.json", dir / "w.blob");

  REQUIRE(loaded.layers.size() == fixture.model.layers.size());
  CHECK(loaded.input_shape == fixture.model.input_shape);
  CHECK(loaded.class_count == fixture.model.class_count);
  for (std::size_t i = 0; i < loaded.layers.size(); ++i) {
    CHECK(loaded.layers[i].name == fixture.model.layers[i].name);
    CHECK(loaded.layers[i].kind == fixture.model.layers[i].kind);
  }
  for (const auto& [name, params] : fixture.model.weights) {
    const LayerParams& got = loaded.weights.at(name);
    CHECK(tensors_identical(got.weight, params.weight));
    REQUIRE(got.bias.has_value() == params.bias.has_value());
    if (params.bias) CHECK(tensors_identical(*got.bias, *params.bias));
  }

  // Saving the loaded bundle again reproduces both files byte-for-byte.
  save_bundle(loaded, dir / "m2.json", dir / "w2.blob");
  CHECK(ts::read_bytes(dir / "m.json") == ts::read_bytes(dir / "m2.json"));
  CHECK(ts::read_bytes(dir / "w.blob") == ts::read_bytes(dir / "w2.blob"));
}

TEST_CASE("truncated blobs are reported with expected and actual byte counts") {
  const auto dir = ts::scratch_dir("io_truncated");
  const Fixture fixture = make_quadrant_fixture(5, 1);
  save_bundle(fixture.model, dir / "m.json", dir / "w.blob");

  auto blob = ts::read_bytes(dir / "w.blob");
  const std::size_t full = blob.size();
  blob.resize(full - 16);
  write_bytes(dir / "w.blob", blob);

  try {
    load_bundle(dir / "m.json", dir / "w.blob");
    FAIL("expected an input error");
  } catch (const InputError& e) {
    const std::string what = e.what();
    CHECK(what.find(std::to_string(full - 16)) != std::string::npos);
  }
}

TEST_CASE("manifest version and span overlaps are rejected") {
  const auto dir = ts::scratch_dir("io_manifest");
  const Fixture fixture = make_quadrant_fixture(5, 1);
  save_bundle(fixture.model, dir / "m.json", dir / "w.blob");

  std::string manifest = ts::read_text(dir / "m.json");
  std::string wrong_version = manifest;
  const auto pos = wrong_version.find("\"format_version\": 1");
  REQUIRE(pos != std::string::npos);
  wrong_version.replace(pos, 19, "\"format_version\": 9");
  {
    std::ofstream out(dir / "bad_version.json");
    out << wrong_version;
  }
  CHECK_THROWS_AS(load_bundle(dir / "bad_version.json", dir / "w.blob"),
                  InputError);

  // Point the head weight at the conv weight's offset: spans overlap.
  std::string overlapped = manifest;
  const auto head_off = overlapped.rfind("\"offset\": 64");
  REQUIRE(head_off != std::string::npos);
  overlapped.replace(head_off, 12, "\"offset\": 0");
  {
    std::ofstream out(dir / "overlap.json");
    out << overlapped;
  }
  CHECK_THROWS_AS(load_bundle(dir / "overlap.json", dir / "w.blob"), InputError);
}

TEST_CASE("generated quadrant bundle loads with the documented layer list") {
  const auto dir = ts::scratch_dir("io_quadrant");
  write_fixture(make_quadrant_fixture(1), dir);
  const ModelBundle model = load_bundle(dir / "manifest.json", dir / "weights.blob");
  REQUIRE(model.layers.size() == 4);
  CHECK(model.layers[0].name == "conv1");
  CHECK(model.layers[0].kind == LayerKind::conv2d);
  CHECK(model.layers[1].kind == LayerKind::relu);
  CHECK(model.layers[2].kind == LayerKind::flatten);
  CHECK(model.layers[3].kind == LayerKind::linear);
  CHECK(model.class_count == 4);
  CHECK(model.last_conv_layer() == "conv1");
}

TEST_CASE("black and white PNGs decode to all-zero and all-one tensors") {
  const auto dir = ts::scratch_dir("io_png");
  save_png_gray(dir / "black.png", 2, 2, std::vector<std::uint8_t>(4, 0));
  save_png_gray(dir / "white.png", 2, 2, std::vector<std::uint8_t>(4, 255));

  const Tensor black = load_image(dir / "black.png", 1, 2, 2);
  for (double v : black.values()) CHECK(v == 0.0);
  const Tensor white = load_image(dir / "white.png", 1, 2, 2);
  for (double v : white.values()) CHECK(v == 1.0);
}

TEST_CASE("image loading resizes with the pinned bilinear convention") {
  const auto dir = ts::scratch_dir("io_resize");
  // 4x4 horizontal ramp 0,60,120,180 in every row.
  std::vector<std::uint8_t> ramp(16);
  for (int y = 0; y < 4; ++y) {
    for (int x = 0; x < 4; ++x) {
      ramp[static_cast<std::size_t>(y) * 4 + x] = static_cast<std::uint8_t>(60 * x);
    }
  }
  save_png_gray(dir / "ramp.png", 4, 4, ramp);
  const Tensor small = load_image(dir / "ramp.png", 1, 2, 2);

  // Hand evaluation: output x maps to source coordinate (x+0.5)*2 - 0.5,
  // i.e. 0.5 and 2.5, so columns average pairwise: (0+60)/2, (120+180)/2.
  CHECK(small.at(0, 0, 0) == doctest::Approx(30.0 / 255.0).epsilon(1e-15));
  CHECK(small.at(0, 0, 1) == doctest::Approx(150.0 / 255.0).epsilon(1e-15));
  CHECK(small.at(0, 1, 0) == small.at(0, 0, 0));
}

TEST_CASE("grayscale files replicate across requested channels") {
  const auto dir = ts::scratch_dir("io_channels");
  std::vector<std::uint8_t> pixels = {10, 20, 30, 40};
  save_png_gray(dir / "gray.png", 2, 2, pixels);
  const Tensor rgb = load_image(dir / "gray.png", 3, 2, 2);
  REQUIRE(rgb.shape() == std::vector<int>{3, 2, 2});
  for (int c = 0; c < 3; ++c) {
    for (int i = 0; i < 4; ++i) {
      CHECK(rgb.at(c, i / 2, i % 2) == pixels[static_cast<std::size_t>(i)] / 255.0);
    }
  }
}

TEST_CASE("RGB files load into 3-channel tensors and reject 1-channel targets") {
  const auto dir = ts::scratch_dir("io_rgb");
  // A saved heatmap is RGBA on disk; the decoder strips alpha to RGB.
  RenderedHeatmap hm;
  hm.width = 2;
  hm.height = 2;
  hm.rgba = {10, 20, 30, 255, 40, 50, 60, 255,
             70, 80, 90, 255, 100, 110, 120, 255};
  save_heatmap(hm, dir / "rgb.png");

  const Tensor rgb = load_image(dir / "rgb.png", 3, 2, 2);
  REQUIRE(rgb.shape() == std::vector<int>{3, 2, 2});
  for (int y = 0; y < 2; ++y) {
    for (int x = 0; x < 2; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double expected =
            hm.rgba[(static_cast<std::size_t>(y) * 2 + x) * 4 +
                    static_cast<std::size_t>(c)] /
            255.0;
        CHECK(rgb.at(c, y, x) == expected);
      }
    }
  }
  CHECK_THROWS_AS(load_image(dir / "rgb.png", 1, 2, 2), InputError);
}

TEST_CASE("16-bit PNGs are rejected as unsupported") {
  const auto dir = ts::scratch_dir("io_deep");
  write_bytes(dir / "deep.png", kGray16Png);
  try {
    load_image(dir / "deep.png", 1, 2, 2);
    FAIL("expected an input error");
  } catch (const InputError& e) {
    CHECK(std::string(e.what()).find("bit depth") != std::string::npos);
  }
}

TEST_CASE("corrupt files and missing paths fail with input errors") {
  const auto dir = ts::scratch_dir("io_corrupt");
  write_bytes(dir / "junk.png", {0x00, 0x01, 0x02, 0x03});
  CHECK_THROWS_AS(load_image(dir / "junk.png", 1, 2, 2), InputError);
  CHECK_THROWS_AS(load_image(dir / "absent.png", 1, 2, 2), InputError);
  CHECK_THROWS_AS(load_bundle(dir / "absent.json", dir / "absent.blob"), InputError);
}

TEST_CASE("masks binarize at nonzero and count foreground pixels") {
  const auto dir = ts::scratch_dir("io_mask");
  save_png_gray(dir / "full.png", 2, 3, std::vector<std::uint8_t>(6, 255));
  const GroundTruth full = load_mask(dir / "full.png");
  CHECK(full.positive_count == 6);
  CHECK(full.height == 3);
  CHECK(full.width == 2);

  std::vector<std::uint8_t> sparse(16, 0);
  sparse[1] = 7;
  sparse[9] = 255;
  sparse[14] = 1;
  save_png_gray(dir / "sparse.png", 4, 4, sparse);
  CHECK(load_mask(dir / "sparse.png").positive_count == 3);
}

TEST_CASE("saliency dumps round-trip bit-exactly") {
  const auto dir = ts::scratch_dir("io_saliency");
  SaliencyMap map;
  map.values = Tensor({3, 5});
  for (std::size_t i = 0; i < map.values.size(); ++i) {
    map.values[i] = -1.5 + 0.731 * static_cast<double>(i);
  }
  map.resolution = Resolution::image;
  map.method = Method::integrated_gradients;
  map.signed_values = true;
  map.class_index = 2;
  map.tap_layer = "conv2";

  save_saliency(map, dir / "map.sal");
  const SaliencyMap loaded = load_saliency(dir / "map.sal");
  CHECK(loaded.values.values() == map.values.values());
  CHECK(loaded.values.shape() == map.values.shape());
  CHECK(loaded.resolution == map.resolution);
  CHECK(loaded.method == map.method);
  CHECK(loaded.signed_values == map.signed_values);
  CHECK(loaded.class_index == map.class_index);
  CHECK(loaded.tap_layer == map.tap_layer);

  auto bytes = ts::read_bytes(dir / "map.sal");
  bytes.resize(bytes.size() - 8);
  write_bytes(dir / "short.sal", bytes);
  CHECK_THROWS_AS(load_saliency(dir / "short.sal"), InputError);
}

TEST_CASE("dataset index loading lists every missing file") {
  const auto dir = ts::scratch_dir("io_dataset");
  write_fixture(make_quadrant_fixture(1, 4), dir);
  const Dataset ok = load_dataset_index(dir / "index.txt");
  CHECK(ok.records.size() == 4);
  CHECK(ok.records[0].image == "images/img_000.png");

  {
    std::ofstream out(dir / "broken.txt");
    out << "images/img_000.png\tmasks/img_000.png\t0\n";
    out << "images/gone_a.png\tmasks/img_001.png\t1\n";
    out << "images/img_002.png\tmasks/gone_b.png\t2\n";
  }
  try {
    load_dataset_index(dir / "broken.txt");
    FAIL("expected an input error");
  } catch (const InputError& e) {
    const std::string what = e.what();
    CHECK(what.find("gone_a.png") != std::string::npos);
    CHECK(what.find("gone_b.png") != std::string::npos);
  }

  {
    std::ofstream out(dir / "badlabel.txt");
    out << "images/img_000.png\tmasks/img_000.png\tzebra\n";
  }
  CHECK_THROWS_AS(load_dataset_index(dir / "badlabel.txt"), InputError);
}
