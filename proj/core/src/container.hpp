// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0
//
// Internal helpers for the manifest+blob checkpoint container shared by
// discriminator stacks and restoration models.

#pragma once

#include <json.hpp>

#include <filesystem>
#include <fstream>

#include "mdf/common.hpp"
#include "mdf/tensor.hpp"

namespace mdf::container {

inline constexpr int kFormatVersion = 1;

inline void write_blob(const std::string& dir, const std::string& name,
                       const Tensor<float>& t, nlohmann::json& tensors) {
  std::string file = name + ".bin";
  std::filesystem::path path = std::filesystem::path(dir) / file;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot write tensor blob: " + path.string());
  // Raw little-endian float32; fine on every platform this builds for.
  out.write(reinterpret_cast<const char*>(t.v.data()),
            static_cast<std::streamsize>(t.v.size() * sizeof(float)));
  nlohmann::json entry;
  entry["name"] = name;
  entry["file"] = file;
  entry["dtype"] = "f32";
  entry["shape"] = {t.n, t.c, t.h, t.w};
  entry["crc32"] = crc32_bytes(t.v.data(), t.v.size() * sizeof(float));
  tensors.push_back(entry);
}

inline Tensor<float> read_blob(const std::string& dir, const nlohmann::json& entry) {
  std::string name = entry.at("name").get<std::string>();
  if (entry.at("dtype").get<std::string>() != "f32")
    throw RuntimeError("checkpoint tensor " + name + ": unsupported dtype");
  auto shape = entry.at("shape").get<std::vector<int>>();
  if (shape.size() != 4) throw RuntimeError("checkpoint tensor " + name + ": bad shape entry");
  Tensor<float> t(shape[0], shape[1], shape[2], shape[3]);
  std::filesystem::path path = std::filesystem::path(dir) / entry.at("file").get<std::string>();
  std::ifstream in(path, std::ios::binary);
  if (!in) throw RuntimeError("missing tensor blob: " + path.string());
  in.read(reinterpret_cast<char*>(t.v.data()),
          static_cast<std::streamsize>(t.v.size() * sizeof(float)));
  if (static_cast<size_t>(in.gcount()) != t.v.size() * sizeof(float))
    throw RuntimeError("checkpoint tensor " + name + ": blob size mismatch");
  uint32_t crc = crc32_bytes(t.v.data(), t.v.size() * sizeof(float));
  if (crc != entry.at("crc32").get<uint32_t>())
    throw RuntimeError("checkpoint tensor " + name + ": checksum mismatch (corrupt blob)");
  return t;
}

inline void write_manifest(const std::string& dir, const nlohmann::json& manifest) {
  std::filesystem::create_directories(dir);
  std::ofstream out(std::filesystem::path(dir) / "manifest.json");
  if (!out) throw RuntimeError("cannot write manifest in " + dir);
  out << manifest.dump(2) << "\n";
}

inline nlohmann::json read_manifest(const std::string& dir, const std::string& expected_kind) {
  std::ifstream in(std::filesystem::path(dir) / "manifest.json");
  if (!in) throw RuntimeError("no manifest.json in " + dir);
  nlohmann::json manifest;
  try {
    in >> manifest;
  } catch (const std::exception& e) {
    throw RuntimeError("corrupt manifest in " + dir + ": " + e.what());
  }
  if (manifest.value("format_version", -1) != kFormatVersion)
    throw RuntimeError("checkpoint format version mismatch in " + dir);
  if (manifest.value("kind", "") != expected_kind)
    throw RuntimeError("checkpoint in " + dir + " is not a " + expected_kind);
  return manifest;
}

}  // namespace mdf::container
