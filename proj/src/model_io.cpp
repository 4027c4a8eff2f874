/*
 * Copyright 2026 The repurpose Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "repurpose/model_io.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <json.hpp>
#include <sstream>

#include "repurpose/error.hpp"

namespace repurpose {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::uint32_t to_little_endian(std::uint32_t v) {
  if constexpr (std::endian::native == std::endian::big) {
    return ((v & 0xFFu) << 24) | ((v & 0xFF00u) << 8) | ((v >> 8) & 0xFF00u) | (v >> 24);
  }
  return v;
}

std::vector<std::size_t> shape_from_json(const json& j, const std::string& where) {
  if (!j.is_array()) throw FormatError(where + ": 'shape' must be an array");
  std::vector<std::size_t> shape;
  for (const auto& d : j) {
    if (!d.is_number_integer() || d.get<long long>() <= 0) {
      throw FormatError(where + ": shape dimensions must be positive integers");
    }
    shape.push_back(d.get<std::size_t>());
  }
  return shape;
}

template <typename T>
T required(const json& obj, const char* key, const std::string& where) {
  if (!obj.contains(key)) throw FormatError(where + ": missing '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(where + ": bad '" + key + "': " + e.what());
  }
}

}  // namespace

std::vector<double> read_f32_file(const fs::path& file, std::size_t expected_count) {
  std::ifstream in(file, std::ios::binary);
  if (!in) throw FormatError("missing tensor file " + file.string());
  in.seekg(0, std::ios::end);
  const auto length = static_cast<std::size_t>(in.tellg());
  in.seekg(0, std::ios::beg);
  if (length != expected_count * 4) {
    std::ostringstream msg;
    msg << "tensor file " << file.string() << " has " << length << " bytes, expected "
        << expected_count * 4;
    throw FormatError(msg.str());
  }
  std::vector<double> values(expected_count);
  std::vector<std::uint32_t> raw(expected_count);
  in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(length));
  if (!in) throw FormatError("failed reading tensor file " + file.string());
  for (std::size_t i = 0; i < expected_count; ++i) {
    values[i] = static_cast<double>(std::bit_cast<float>(to_little_endian(raw[i])));
  }
  return values;
}

void write_f32_file(const fs::path& file, std::span<const double> values) {
  std::vector<std::uint32_t> raw(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) {
    raw[i] = to_little_endian(std::bit_cast<std::uint32_t>(static_cast<float>(values[i])));
  }
  std::ofstream out(file, std::ios::binary | std::ios::trunc);
  if (!out) throw FormatError("cannot write tensor file " + file.string());
  out.write(reinterpret_cast<const char*>(raw.data()),
            static_cast<std::streamsize>(raw.size() * sizeof(std::uint32_t)));
  if (!out) throw FormatError("failed writing tensor file " + file.string());
}

SequentialModel load_model(const fs::path& dir) {
  const fs::path manifest_path = dir / "manifest.json";
  std::ifstream in(manifest_path);
  if (!in) throw FormatError("missing manifest " + manifest_path.string());
  json manifest;
  try {
    in >> manifest;
  } catch (const json::exception& e) {
    throw FormatError("malformed manifest " + manifest_path.string() + ": " + e.what());
  }
  const int version = required<int>(manifest, "format_version", "manifest");
  if (version != kModelFormatVersion) {
    throw FormatError("unsupported format_version " + std::to_string(version) + " (expected " +
                      std::to_string(kModelFormatVersion) + ")");
  }
  if (!manifest.contains("layers") || !manifest["layers"].is_array()) {
    throw FormatError("manifest: 'layers' must be an array");
  }

  SequentialModel model;
  std::size_t index = 0;
  for (const auto& entry : manifest["layers"]) {
    const std::string where = "manifest layer " + std::to_string(index);
    const auto kind = required<std::string>(entry, "kind", where);
    const auto in_width = required<std::size_t>(entry, "in", where);
    const auto out_width = required<std::size_t>(entry, "out", where);
    const auto dtype = required<std::string>(entry, "dtype", where);
    const auto layout = required<std::string>(entry, "layout", where);
    if (dtype != "f32") throw FormatError(where + ": unsupported dtype '" + dtype + "'");
    if (layout != "row-major") throw FormatError(where + ": unsupported layout '" + layout + "'");
    Activation activation{parse_activation(required<std::string>(entry, "activation", where))};
    if (!entry.contains("shape")) throw FormatError(where + ": missing 'shape'");
    auto shape = shape_from_json(entry["shape"], where);
    const auto weight_file = dir / required<std::string>(entry, "weight", where);
    const auto bias_file = dir / required<std::string>(entry, "bias", where);

    if (kind == "dense") {
      if (shape.size() != 2 || shape[0] != in_width || shape[1] != out_width) {
        throw FormatError(where + ": dense shape must be [in, out]");
      }
    } else if (kind == "conv") {
      if (shape.size() < 3 || shape[shape.size() - 2] != in_width ||
          shape[shape.size() - 1] != out_width) {
        throw FormatError(where + ": conv shape must end with [c_in, c_out]");
      }
    } else {
      throw FormatError(where + ": unknown layer kind '" + kind + "'");
    }

    auto weights = read_f32_file(weight_file, shape_product(shape));
    Tensor bias({out_width}, read_f32_file(bias_file, out_width));
    Tensor weight(std::move(shape), std::move(weights));
    if (kind == "dense") {
      model.layers.emplace_back(DenseLayer{std::move(weight), std::move(bias), activation});
    } else {
      model.layers.emplace_back(ConvLayer{std::move(weight), std::move(bias), activation});
    }
    ++index;
  }
  validate(model);
  return model;
}

void save_model(const SequentialModel& model, const fs::path& dir) {
  validate(model);
  fs::create_directories(dir);
  json layers = json::array();
  for (std::size_t l = 0; l < model.layers.size(); ++l) {
    const std::string stem = "layer" + std::to_string(l);
    json entry;
    const Tensor* weight = nullptr;
    const Tensor* bias = nullptr;
    if (const auto* dense = std::get_if<DenseLayer>(&model.layers[l])) {
      entry["kind"] = "dense";
      entry["in"] = dense->in();
      entry["out"] = dense->out();
      entry["activation"] = std::string(to_string(dense->activation.kind));
      weight = &dense->weight;
      bias = &dense->bias;
    } else {
      const auto& conv = std::get<ConvLayer>(model.layers[l]);
      entry["kind"] = "conv";
      entry["in"] = conv.in_channels();
      entry["out"] = conv.out_channels();
      entry["activation"] = std::string(to_string(conv.activation.kind));
      weight = &conv.kernel;
      bias = &conv.bias;
    }
    entry["weight"] = stem + ".weight.bin";
    entry["bias"] = stem + ".bias.bin";
    entry["dtype"] = "f32";
    entry["layout"] = "row-major";
    entry["shape"] = weight->shape();
    write_f32_file(dir / (stem + ".weight.bin"), weight->data());
    write_f32_file(dir / (stem + ".bias.bin"), bias->data());
    layers.push_back(std::move(entry));
  }
  json manifest = {{"format_version", kModelFormatVersion}, {"layers", std::move(layers)}};
  std::ofstream out(dir / "manifest.json", std::ios::trunc);
  if (!out) throw FormatError("cannot write manifest in " + dir.string());
  out << manifest.dump(2) << '\n';
}

}  // namespace repurpose
