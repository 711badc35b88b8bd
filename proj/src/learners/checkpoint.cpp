// SPDX-License-Identifier: Apache-2.0
#include "learners/checkpoint.hpp"

#include <array>
#include <bit>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <json.hpp>

#include "common/error.hpp"

namespace gremetl::learners {

namespace {

std::filesystem::path with_ext(const std::filesystem::path &stem, const char *ext) {
  std::filesystem::path p = stem;
  p += ext;
  return p;
}

} // namespace

void save_checkpoint(const num::ParamStore &store,
                     const std::filesystem::path &stem) {
  nlohmann::json manifest;
  manifest["format_version"] = 1;
  manifest["dtype"] = "float64-le";
  manifest["tensors"] = nlohmann::json::array();

  std::ofstream bin(with_ext(stem, ".bin"), std::ios::binary);
  if (!bin)
    throw IoError("cannot write " + with_ext(stem, ".bin").string());
  std::size_t offset = 0;
  for (num::ParamId id = 0; id < store.size(); ++id) {
    const num::Tensor &t = store.value(id);
    manifest["tensors"].push_back({{"name", store.name(id)},
                                   {"group", store.group(store.group_of(id)).name},
                                   {"shape", t.shape()},
                                   {"offset", offset}});
    for (double v : t.values()) {
      const std::uint64_t bits = std::bit_cast<std::uint64_t>(v);
      std::array<char, 8> bytes;
      for (int b = 0; b < 8; ++b)
        bytes[b] = static_cast<char>((bits >> (8 * b)) & 0xffu);
      bin.write(bytes.data(), 8);
    }
    offset += t.size();
  }
  if (!bin)
    throw IoError("short write to " + with_ext(stem, ".bin").string());

  std::ofstream js(with_ext(stem, ".json"));
  if (!js)
    throw IoError("cannot write " + with_ext(stem, ".json").string());
  js << manifest.dump(2) << "\n";
}

void load_checkpoint(num::ParamStore &store, const std::filesystem::path &stem) {
  std::ifstream js(with_ext(stem, ".json"));
  if (!js)
    throw IoError("cannot read " + with_ext(stem, ".json").string());
  nlohmann::json manifest;
  try {
    manifest = nlohmann::json::parse(js);
  } catch (const nlohmann::json::exception &e) {
    throw IoError("corrupt checkpoint manifest: " + std::string(e.what()));
  }
  const auto &tensors = manifest.at("tensors");
  if (tensors.size() != store.size())
    throw ShapeError("checkpoint has " + std::to_string(tensors.size()) +
                     " tensors, model has " + std::to_string(store.size()));

  std::ifstream bin(with_ext(stem, ".bin"), std::ios::binary);
  if (!bin)
    throw IoError("cannot read " + with_ext(stem, ".bin").string());
  std::vector<char> raw((std::istreambuf_iterator<char>(bin)),
                        std::istreambuf_iterator<char>());
  if (raw.size() != store.scalar_count() * 8)
    throw ShapeError("checkpoint payload has " + std::to_string(raw.size()) +
                     " bytes, expected " + std::to_string(store.scalar_count() * 8));

  for (num::ParamId id = 0; id < store.size(); ++id) {
    const auto &entry = tensors[id];
    num::Tensor &t = store.value(id);
    if (entry.at("name").get<std::string>() != store.name(id) ||
        entry.at("shape").get<num::Shape>() != t.shape())
      throw ShapeError("checkpoint tensor " + std::to_string(id) +
                       " does not match " + store.name(id));
    const std::size_t offset = entry.at("offset").get<std::size_t>();
    for (std::size_t i = 0; i < t.size(); ++i) {
      std::uint64_t bits = 0;
      for (int b = 0; b < 8; ++b)
        bits |= static_cast<std::uint64_t>(
                  static_cast<unsigned char>(raw[(offset + i) * 8 + b]))
                << (8 * b);
      t[i] = std::bit_cast<double>(bits);
    }
  }
}

} // namespace gremetl::learners
