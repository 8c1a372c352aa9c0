#include "igcam/model_io.hpp"

#include <algorithm>
#include <fstream>
#include <utility>
#include <vector>

#include <json.hpp>

#include "igcam/error.hpp"
#include "wire.hpp"

namespace igcam {

namespace {

using nlohmann::json;

constexpr int kFormatVersion = 1;

std::vector<std::uint8_t> read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                  std::istreambuf_iterator<char>());
  return bytes;
}

void write_file(const std::filesystem::path& path,
                const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw InputError("cannot write '" + path.string() + "'");
  out.write(reinterpret_cast<const char*>(bytes.data()),
            static_cast<std::streamsize>(bytes.size()));
  if (!out) throw InputError("short write to '" + path.string() + "'");
}

struct TensorRef {
  std::size_t offset = 0;     // bytes into the blob
  std::vector<int> shape;
};

TensorRef parse_tensor_ref(const json& j, const std::string& context) {
  if (!j.is_object() || !j.contains("offset") || !j.contains("shape")) {
    throw InputError(context + ": tensor entry needs offset and shape");
  }
  TensorRef ref;
  ref.offset = j.at("offset").get<std::size_t>();
  for (const auto& e : j.at("shape")) {
    const int extent = e.get<int>();
    if (extent < 1) throw InputError(context + ": non-positive tensor extent");
    ref.shape.push_back(extent);
  }
  if (ref.shape.empty()) throw InputError(context + ": empty tensor shape");
  return ref;
}

Tensor read_blob_tensor(const std::vector<std::uint8_t>& blob, const TensorRef& ref,
                        const std::string& context) {
  const std::size_t count = shape_product(ref.shape);
  const std::size_t bytes = count * 8;
  if (ref.offset % 8 != 0) {
    throw InputError(context + ": offset " + std::to_string(ref.offset) +
                     " is not 8-byte aligned");
  }
  if (ref.offset + bytes > blob.size()) {
    throw InputError(context + ": tensor spans bytes [" +
                     std::to_string(ref.offset) + "," +
                     std::to_string(ref.offset + bytes) + ") but blob has " +
                     std::to_string(blob.size()) + " bytes");
  }
  std::vector<double> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    data[i] = wire::get_f64(blob.data() + ref.offset + i * 8);
  }
  Tensor t(ref.shape, std::move(data));
  if (!t.all_finite()) {
    throw InputError(context + ": non-finite weight values");
  }
  return t;
}

int require_int(const json& j, const char* key, const std::string& context) {
  if (!j.contains(key)) throw InputError(context + ": missing '" + key + "'");
  return j.at(key).get<int>();
}

json tensor_ref_json(std::size_t offset, const std::vector<int>& shape) {
  return json{{"offset", offset}, {"shape", shape}};
}

void append_tensor(std::vector<std::uint8_t>& blob, const Tensor& t) {
  for (double v : t.values()) wire::put_f64(blob, v);
}

}  // namespace

ModelBundle load_bundle(const std::filesystem::path& manifest_path,
                        const std::filesystem::path& blob_path) {
  json manifest;
  {
    std::ifstream in(manifest_path);
    if (!in) throw InputError("cannot open '" + manifest_path.string() + "'");
    try {
      in >> manifest;
    } catch (const json::exception& e) {
      throw InputError("manifest '" + manifest_path.string() +
                       "' is not valid JSON: " + e.what());
    }
  }
  const std::vector<std::uint8_t> blob = read_file(blob_path);
  if (blob.size() % 8 != 0) {
    throw InputError("blob '" + blob_path.string() + "' length " +
                     std::to_string(blob.size()) + " is not a multiple of 8");
  }

  if (!manifest.contains("format_version") ||
      manifest.at("format_version").get<int>() != kFormatVersion) {
    throw InputError("manifest format_version mismatch, expected " +
                     std::to_string(kFormatVersion));
  }

  ModelBundle model;
  const auto in_shape = manifest.at("input_shape");
  if (!in_shape.is_array() || in_shape.size() != 3) {
    throw InputError("input_shape must be [C,H,W]");
  }
  for (std::size_t i = 0; i < 3; ++i) {
    model.input_shape[i] = in_shape[i].get<int>();
  }
  model.class_count = manifest.at("class_count").get<int>();

  std::size_t declared_bytes = 0;
  std::vector<std::pair<std::size_t, std::size_t>> spans;  // offset, byte size
  for (const json& jl : manifest.at("layers")) {
    const std::string name = jl.at("name").get<std::string>();
    const std::string context = "layer '" + name + "'";
    const LayerKind kind = layer_kind_from_name(jl.at("kind").get<std::string>());
    LayerSpec spec;
    switch (kind) {
      case LayerKind::conv2d:
        spec = LayerSpec::conv2d(name, require_int(jl, "out_channels", context),
                                 require_int(jl, "in_channels", context),
                                 require_int(jl, "kernel_h", context),
                                 require_int(jl, "kernel_w", context),
                                 require_int(jl, "stride", context),
                                 require_int(jl, "padding", context),
                                 jl.contains("bias"));
        break;
      case LayerKind::relu:
        spec = LayerSpec::relu(name);
        break;
      case LayerKind::maxpool2d:
        spec = LayerSpec::maxpool2d(name, require_int(jl, "kernel", context),
                                    require_int(jl, "stride", context));
        break;
      case LayerKind::globalavgpool:
        spec = LayerSpec::globalavgpool(name);
        break;
      case LayerKind::flatten:
        spec = LayerSpec::flatten(name);
        break;
      case LayerKind::linear:
        spec = LayerSpec::linear(name, require_int(jl, "out_features", context),
                                 require_int(jl, "in_features", context),
                                 jl.contains("bias"));
        break;
    }
    model.layers.push_back(spec);

    if (kind == LayerKind::conv2d || kind == LayerKind::linear) {
      LayerParams params;
      const TensorRef wref = parse_tensor_ref(jl.at("weight"), context + " weight");
      params.weight = read_blob_tensor(blob, wref, context + " weight");
      spans.emplace_back(wref.offset, params.weight.size() * 8);
      declared_bytes += params.weight.size() * 8;
      if (jl.contains("bias")) {
        const TensorRef bref = parse_tensor_ref(jl.at("bias"), context + " bias");
        params.bias = read_blob_tensor(blob, bref, context + " bias");
        spans.emplace_back(bref.offset, params.bias->size() * 8);
        declared_bytes += params.bias->size() * 8;
      }
      model.weights.emplace(name, std::move(params));
    }
  }

  if (declared_bytes != blob.size()) {
    throw InputError("blob '" + blob_path.string() + "' has " +
                     std::to_string(blob.size()) + " bytes but the manifest declares " +
                     std::to_string(declared_bytes));
  }
  std::sort(spans.begin(), spans.end());
  for (std::size_t i = 1; i < spans.size(); ++i) {
    if (spans[i - 1].first + spans[i - 1].second > spans[i].first) {
      throw InputError("overlapping tensor spans in manifest");
    }
  }

  model.validate();
  return model;
}

void save_bundle(const ModelBundle& model,
                 const std::filesystem::path& manifest_path,
                 const std::filesystem::path& blob_path) {
  model.validate();

  json manifest;
  manifest["format_version"] = kFormatVersion;
  manifest["input_shape"] = model.input_shape_vec();
  manifest["class_count"] = model.class_count;

  std::vector<std::uint8_t> blob;
  json layers = json::array();
  for (const LayerSpec& l : model.layers) {
    json jl;
    jl["name"] = l.name;
    jl["kind"] = layer_kind_name(l.kind);
    switch (l.kind) {
      case LayerKind::conv2d:
        jl["out_channels"] = l.out_channels;
        jl["in_channels"] = l.in_channels;
        jl["kernel_h"] = l.kernel_h;
        jl["kernel_w"] = l.kernel_w;
        jl["stride"] = l.stride;
        jl["padding"] = l.padding;
        break;
      case LayerKind::maxpool2d:
        jl["kernel"] = l.pool_kernel;
        jl["stride"] = l.pool_stride;
        break;
      case LayerKind::linear:
        jl["out_features"] = l.out_features;
        jl["in_features"] = l.in_features;
        break;
      default:
        break;
    }
    if (l.kind == LayerKind::conv2d || l.kind == LayerKind::linear) {
      const LayerParams& p = model.weights.at(l.name);
      jl["weight"] = tensor_ref_json(blob.size(), p.weight.shape());
      append_tensor(blob, p.weight);
      if (p.bias) {
        jl["bias"] = tensor_ref_json(blob.size(), p.bias->shape());
        append_tensor(blob, *p.bias);
      }
    }
    layers.push_back(std::move(jl));
  }
  manifest["layers"] = std::move(layers);

  const std::string text = manifest.dump(2) + "\n";
  write_file(manifest_path,
             std::vector<std::uint8_t>(text.begin(), text.end()));
  write_file(blob_path, blob);
}

}  // namespace igcam
