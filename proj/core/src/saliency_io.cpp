#include "igcam/saliency_io.hpp"

#include <cstring>
#include <fstream>

#include "igcam/error.hpp"
#include "wire.hpp"

namespace igcam {

namespace {

constexpr char kMagic[8] = {'I', 'G', 'C', 'A', 'M', 'S', 'A', 'L'};
constexpr std::uint32_t kVersion = 1;

}  // namespace

void save_saliency(const SaliencyMap& map, const std::filesystem::path& path) {
  if (map.values.rank() != 2) {
    throw ValidationError("saliency map must be rank-2");
  }
  std::vector<std::uint8_t> bytes;
  bytes.insert(bytes.end(), kMagic, kMagic + 8);
  wire::put_u32(bytes, kVersion);
  wire::put_u32(bytes, map.resolution == Resolution::image ? 1u : 0u);
  wire::put_u32(bytes, static_cast<std::uint32_t>(map.method));
  wire::put_u32(bytes, map.signed_values ? 1u : 0u);
  wire::put_i32(bytes, map.class_index);
  wire::put_u32(bytes, static_cast<std::uint32_t>(map.height()));
  wire::put_u32(bytes, static_cast<std::uint32_t>(map.width()));
  wire::put_u32(bytes, static_cast<std::uint32_t>(map.tap_layer.size()));
  bytes.insert(bytes.end(), map.tap_layer.begin(), map.tap_layer.end());
  for (double v : map.values.values()) wire::put_f64(bytes, v);

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("short write to '" + path.string() + "'");
}

SaliencyMap load_saliency(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());

  auto need = [&](std::size_t offset, std::size_t count) {
    if (offset + count > bytes.size()) {
      throw InputError("saliency file '" + path.string() + "' truncated: need " +
                       std::to_string(offset + count) + " bytes, have " +
                       std::to_string(bytes.size()));
    }
  };

  need(0, 8);
  if (std::memcmp(bytes.data(), kMagic, 8) != 0) {
    throw InputError("'" + path.string() + "' is not a saliency dump");
  }
  need(8, 4 * 8);
  const std::uint32_t version = wire::get_u32(bytes.data() + 8);
  if (version != kVersion) {
    throw InputError("saliency format version " + std::to_string(version) +
                     " unsupported (expected " + std::to_string(kVersion) + ")");
  }
  SaliencyMap map;
  map.resolution = wire::get_u32(bytes.data() + 12) ? Resolution::image
                                                    : Resolution::feature;
  map.method = static_cast<Method>(wire::get_u32(bytes.data() + 16));
  map.signed_values = wire::get_u32(bytes.data() + 20) != 0;
  map.class_index = wire::get_i32(bytes.data() + 24);
  const std::uint32_t h = wire::get_u32(bytes.data() + 28);
  const std::uint32_t w = wire::get_u32(bytes.data() + 32);
  const std::uint32_t name_len = wire::get_u32(bytes.data() + 36);
  need(40, name_len);
  map.tap_layer.assign(bytes.begin() + 40, bytes.begin() + 40 + name_len);

  const std::size_t data_offset = 40 + name_len;
  const std::size_t count = static_cast<std::size_t>(h) * w;
  need(data_offset, count * 8);
  if (bytes.size() != data_offset + count * 8) {
    throw InputError("saliency file '" + path.string() + "' has trailing bytes");
  }
  std::vector<double> values(count);
  for (std::size_t i = 0; i < count; ++i) {
    values[i] = wire::get_f64(bytes.data() + data_offset + i * 8);
  }
  map.values = Tensor({static_cast<int>(h), static_cast<int>(w)}, std::move(values));
  return map;
}

}  // namespace igcam
