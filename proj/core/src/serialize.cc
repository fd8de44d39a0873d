// SPDX-License-Identifier: Apache-2.0

#include "lrptext/serialize.h"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include <nlohmann/json.hpp>
#include <zlib.h>

#include "lrptext/errors.h"

namespace lrptext {

namespace {

using json = nlohmann::json;

constexpr char kMagic[8] = {'L', 'R', 'P', 'M', 'O', 'D', 'E', 'L'};
constexpr std::size_t kPrefixBytes = sizeof(kMagic) + 4;

std::uint32_t Crc32(const std::string &bytes) {
  uLong crc = crc32(0L, Z_NULL, 0);
  crc = crc32(crc, reinterpret_cast<const Bytef *>(bytes.data()),
              static_cast<uInt>(bytes.size()));
  return static_cast<std::uint32_t>(crc);
}

template <typename UInt>
void PutLittleEndian(std::string &out, UInt value) {
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    out.push_back(static_cast<char>((value >> (8 * i)) & 0xFF));
  }
}

template <typename UInt>
UInt GetLittleEndian(const char *data) {
  UInt value = 0;
  for (std::size_t i = 0; i < sizeof(UInt); ++i) {
    value |= static_cast<UInt>(static_cast<unsigned char>(data[i])) << (8 * i);
  }
  return value;
}

std::size_t RealBytes(BlobType dtype) { return dtype == BlobType::kFloat32 ? 4 : 8; }

json HyperToJson(const ModelHyper &h) {
  return json{{"lstm_units_1", h.lstm_units_1}, {"lstm_units_2", h.lstm_units_2},
              {"dense_units", h.dense_units},   {"conv_filters", h.conv_filters},
              {"kernel_size", h.kernel_size}};
}

ModelHyper HyperFromJson(const json &j) {
  ModelHyper h;
  h.lstm_units_1 = j.at("lstm_units_1").get<int>();
  h.lstm_units_2 = j.at("lstm_units_2").get<int>();
  h.dense_units = j.at("dense_units").get<int>();
  h.conv_filters = j.at("conv_filters").get<int>();
  h.kernel_size = j.at("kernel_size").get<int>();
  return h;
}

Layer LayerFromJson(const json &j) {
  Layer layer;
  layer.kind = ParseLayerKind(j.at("kind").get<std::string>());
  layer.activation = ParseActivation(j.at("activation").get<std::string>());
  layer.input_dim = j.at("input_dim").get<int>();
  layer.units = j.at("units").get<int>();
  layer.kernel_size = j.at("kernel_size").get<int>();
  layer.return_sequences = j.at("return_sequences").get<bool>();
  for (const auto &p : j.at("params")) {
    auto shape = p.at("shape").get<std::vector<int>>();
    for (int s : shape) {
      if (s <= 0) throw FormatError("non-positive tensor dimension in header");
    }
    layer.params.emplace_back(p.at("name").get<std::string>(), std::move(shape));
  }
  return layer;
}

}  // namespace

std::string EncodeModel(const Model &model, const SaveOptions &options) {
  model.Validate();
  std::string blob;
  blob.reserve(model.NumParameters() * RealBytes(options.dtype));
  json layers = json::array();
  for (const auto &layer : model.layers) {
    json params = json::array();
    for (const auto &p : layer.params) {
      params.push_back({{"name", p.name}, {"shape", p.shape}});
      for (Real v : p.values) {
        if (options.dtype == BlobType::kFloat32) {
          PutLittleEndian(blob, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
        } else {
          PutLittleEndian(blob, std::bit_cast<std::uint64_t>(static_cast<double>(v)));
        }
      }
    }
    layers.push_back({{"kind", LayerKindName(layer.kind)},
                      {"activation", ActivationName(layer.activation)},
                      {"input_dim", layer.input_dim},
                      {"units", layer.units},
                      {"kernel_size", layer.kernel_size},
                      {"return_sequences", layer.return_sequences},
                      {"params", std::move(params)}});
  }

  json header{{"format_version", kModelFormatVersion},
              {"architecture", ArchitectureName(model.arch)},
              {"input_dim", model.input_dim},
              {"num_classes", model.num_classes},
              {"seed", model.seed},
              {"hyper", HyperToJson(model.hyper)},
              {"class_names", model.class_names},
              {"metadata", model.metadata},
              {"dtype", options.dtype == BlobType::kFloat32 ? "f32" : "f64"},
              {"byte_order", "little"},
              {"param_count", model.NumParameters()},
              {"blob_bytes", blob.size()},
              {"checksum_crc32", Crc32(blob)},
              {"layers", std::move(layers)}};
  const std::string header_text = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  PutLittleEndian(out, static_cast<std::uint32_t>(header_text.size()));
  out += header_text;
  out += blob;
  return out;
}

Model DecodeModel(const std::string &bytes) {
  if (bytes.size() < kPrefixBytes || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("not a model file (bad magic)");
  }
  const auto header_len = GetLittleEndian<std::uint32_t>(bytes.data() + sizeof(kMagic));
  if (bytes.size() < kPrefixBytes + header_len) {
    throw ChecksumError("model file truncated inside header");
  }
  json header;
  try {
    header = json::parse(bytes.begin() + kPrefixBytes,
                         bytes.begin() + kPrefixBytes + header_len);
  } catch (const json::exception &e) {
    throw FormatError(std::string("invalid model header: ") + e.what());
  }

  try {
    const int version = header.at("format_version").get<int>();
    if (version != kModelFormatVersion) {
      throw VersionError("unsupported model format version " + std::to_string(version) +
                         " (expected " + std::to_string(kModelFormatVersion) + ")");
    }
    const std::string dtype_name = header.at("dtype").get<std::string>();
    if (dtype_name != "f32" && dtype_name != "f64") {
      throw FormatError("unknown dtype '" + dtype_name + "'");
    }
    if (header.at("byte_order").get<std::string>() != "little") {
      throw FormatError("unsupported byte order");
    }
    const BlobType dtype = dtype_name == "f32" ? BlobType::kFloat32 : BlobType::kFloat64;
    const auto blob_bytes = header.at("blob_bytes").get<std::size_t>();
    const std::size_t blob_offset = kPrefixBytes + header_len;
    const std::size_t available = bytes.size() - blob_offset;
    if (available < blob_bytes) {
      throw ChecksumError("model file truncated: parameter blob has " +
                          std::to_string(available) + " of " +
                          std::to_string(blob_bytes) + " bytes");
    }
    if (available > blob_bytes) throw FormatError("trailing bytes after parameter blob");
    const std::string blob = bytes.substr(blob_offset, blob_bytes);
    if (Crc32(blob) != header.at("checksum_crc32").get<std::uint32_t>()) {
      throw ChecksumError("parameter blob checksum mismatch");
    }

    Model model;
    model.arch = ParseArchitecture(header.at("architecture").get<std::string>());
    model.input_dim = header.at("input_dim").get<int>();
    model.num_classes = header.at("num_classes").get<int>();
    model.seed = header.at("seed").get<std::uint64_t>();
    model.hyper = HyperFromJson(header.at("hyper"));
    model.class_names = header.at("class_names").get<std::vector<std::string>>();
    model.metadata = header.at("metadata").get<std::map<std::string, std::string>>();
    for (const auto &lj : header.at("layers")) model.layers.push_back(LayerFromJson(lj));

    const std::size_t width = RealBytes(dtype);
    if (model.NumParameters() * width != blob_bytes ||
        model.NumParameters() != header.at("param_count").get<std::size_t>()) {
      throw FormatError("parameter count does not match declared shapes");
    }
    const char *cursor = blob.data();
    for (auto &layer : model.layers) {
      for (auto &p : layer.params) {
        for (auto &v : p.values) {
          if (dtype == BlobType::kFloat32) {
            v = std::bit_cast<float>(GetLittleEndian<std::uint32_t>(cursor));
          } else {
            v = std::bit_cast<double>(GetLittleEndian<std::uint64_t>(cursor));
          }
          cursor += width;
        }
      }
    }
    model.Validate();
    return model;
  } catch (const json::exception &e) {
    throw FormatError(std::string("invalid model header: ") + e.what());
  } catch (const ShapeError &e) {
    throw FormatError(std::string("inconsistent model: ") + e.what());
  } catch (const ConfigError &e) {
    throw FormatError(std::string("invalid model header: ") + e.what());
  }
}

void SaveModel(const Model &model, const std::filesystem::path &path,
               const SaveOptions &options) {
  const std::string bytes = EncodeModel(model, options);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot write model file " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw Error("failed writing model file " + path.string());
}

Model LoadModel(const std::filesystem::path &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model file " + path.string());
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return DecodeModel(bytes);
}

}  // namespace lrptext
