#pragma once

#include <bit>
#include <cstdint>
#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "corefqa/tensor.hpp"

#include "json.hpp"

namespace corefqa {

struct NamedTensor {
  std::string name;
  Tensor value;
};

/// Checkpoint contents: flat config, the vocabulary, and parameters in
/// registration order.
struct CheckpointData {
  std::map<std::string, std::string> config;
  std::vector<std::string> vocab;
  std::vector<NamedTensor> params;
};

namespace detail {

inline void write_f64_le(std::ofstream& os, double v) {
  const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
  char buf[8];
  for (int i = 0; i < 8; ++i) buf[i] = static_cast<char>((bits >> (8 * i)) & 0xff);
  os.write(buf, 8);
}

inline double read_f64_le(std::istream& is) {
  char buf[8];
  is.read(buf, 8);
  std::uint64_t bits = 0;
  for (int i = 0; i < 8; ++i)
    bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[i])) << (8 * i);
  return std::bit_cast<double>(bits);
}

}  // namespace detail

/// File layout: one JSON manifest line, '\n', then the concatenated
/// row-major little-endian float64 payloads. Manifest key order is fixed so
/// identical inputs produce identical bytes.
inline void save_checkpoint(const std::string& path, const CheckpointData& ckpt) {
  nlohmann::ordered_json manifest;
  manifest["format"] = "corefqa-ckpt-v1";
  manifest["config"] = nlohmann::ordered_json::object();
  for (const auto& [k, v] : ckpt.config) manifest["config"][k] = v;
  manifest["vocab"] = ckpt.vocab;
  nlohmann::ordered_json params = nlohmann::ordered_json::array();
  std::size_t offset = 0;
  for (const NamedTensor& p : ckpt.params) {
    nlohmann::ordered_json e;
    e["name"] = p.name;
    e["shape"] = p.value.shape();
    e["offset"] = offset;
    e["count"] = p.value.size();
    params.push_back(std::move(e));
    offset += p.value.size() * 8;
  }
  manifest["params"] = std::move(params);

  std::ofstream os(path, std::ios::binary);
  if (!os) throw ValidationError("save_checkpoint: cannot open " + path);
  os << manifest.dump() << '\n';
  for (const NamedTensor& p : ckpt.params)
    for (double v : p.value.data()) detail::write_f64_le(os, v);
  if (!os) throw ValidationError("save_checkpoint: write failed for " + path);
}

inline CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw ValidationError("load_checkpoint: cannot open " + path);
  std::string header;
  if (!std::getline(is, header)) throw ValidationError("load_checkpoint: missing manifest line");
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(header);
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("load_checkpoint: bad manifest: ") + e.what());
  }
  if (manifest.value("format", "") != "corefqa-ckpt-v1")
    throw ValidationError("load_checkpoint: unknown format in " + path);

  CheckpointData ckpt;
  for (const auto& [k, v] : manifest.at("config").items())
    ckpt.config[k] = v.get<std::string>();
  ckpt.vocab = manifest.at("vocab").get<std::vector<std::string>>();
  const std::streampos payload_start = is.tellg();
  for (const auto& e : manifest.at("params")) {
    const std::string name = e.at("name").get<std::string>();
    const Shape shape = e.at("shape").get<Shape>();
    const std::size_t count = e.at("count").get<std::size_t>();
    if (shape_numel(shape) != count)
      throw ValidationError("load_checkpoint: shape/count mismatch for " + name);
    is.seekg(payload_start + static_cast<std::streamoff>(e.at("offset").get<std::size_t>()));
    std::vector<double> data(count);
    for (std::size_t i = 0; i < count; ++i) data[i] = detail::read_f64_le(is);
    if (!is) throw ValidationError("load_checkpoint: truncated payload at " + name);
    ckpt.params.push_back({name, Tensor::from(shape, std::move(data))});
  }
  return ckpt;
}

}  // namespace corefqa
