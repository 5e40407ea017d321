// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#include "mdf/stack.hpp"

#include "container.hpp"

namespace mdf {

using nlohmann::json;

namespace {

json task_to_json(const TaskSpec& t) {
  json j;
  j["name"] = task_name(t.task);
  j["noise_sigma"] = {t.noise_sigma_lo, t.noise_sigma_hi};
  j["jpeg_quality"] = {t.jpeg_quality_lo, t.jpeg_quality_hi};
  j["sr_factor"] = t.sr_factor;
  return j;
}

TaskSpec task_from_json(const json& j) {
  TaskSpec t;
  t.task = task_from_name(j.at("name").get<std::string>());
  t.noise_sigma_lo = j.at("noise_sigma")[0].get<double>();
  t.noise_sigma_hi = j.at("noise_sigma")[1].get<double>();
  t.jpeg_quality_lo = j.at("jpeg_quality")[0].get<int>();
  t.jpeg_quality_hi = j.at("jpeg_quality")[1].get<int>();
  t.sr_factor = j.at("sr_factor").get<int>();
  return t;
}

}  // namespace

void save_stack(const DiscriminatorStack& stack, const std::string& dir) {
  require(!stack.scales.empty(), "save_stack: empty stack");
  json manifest;
  manifest["format_version"] = container::kFormatVersion;
  manifest["kind"] = "discriminator_stack";
  const StackMeta& m = stack.meta;
  manifest["task"] = task_to_json(m.task);
  manifest["scales"] = m.scales;
  manifest["rho"] = m.rho;
  manifest["rounding"] = m.rounding;
  manifest["iterations_per_scale"] = m.iterations_per_scale;
  manifest["alpha"] = m.alpha;
  manifest["lr"] = m.lr;
  manifest["d_steps"] = m.d_steps;
  manifest["g_steps"] = m.g_steps;
  manifest["lambda_gp"] = m.lambda_gp;
  manifest["widths"] = m.widths;
  manifest["depth"] = m.depth;
  manifest["kernel"] = m.kernel;
  manifest["channels"] = m.channels;
  manifest["receptive_field"] = stack.scales.front().receptive_field();
  manifest["seed_hashes"] = m.seed_hashes;
  manifest["codec"] = m.codec;
  manifest["engine"] = m.engine;
  manifest["created"] = m.created;
  manifest["rng_seed"] = m.rng_seed;
  manifest["deterministic"] = m.deterministic;
  manifest["normalization"] = m.normalization;

  std::filesystem::create_directories(dir);
  json tensors = json::array();
  for (size_t k = 0; k < stack.scales.size(); ++k) {
    const auto& d = stack.scales[k];
    for (size_t i = 0; i < d.convs.size(); ++i) {
      std::string base = "d" + std::to_string(k + 1) + "_conv" + std::to_string(i + 1);
      container::write_blob(dir, base + "_w", d.convs[i].w, tensors);
      container::write_blob(dir, base + "_b", d.convs[i].b, tensors);
    }
  }
  manifest["tensors"] = tensors;
  container::write_manifest(dir, manifest);
}

DiscriminatorStack load_stack(const std::string& dir) {
  json manifest = container::read_manifest(dir, "discriminator_stack");

  DiscriminatorStack stack;
  StackMeta& m = stack.meta;
  m.task = task_from_json(manifest.at("task"));
  m.scales = manifest.at("scales").get<int>();
  m.rho = manifest.at("rho").get<double>();
  m.rounding = manifest.value("rounding", "half-up-from-original");
  m.iterations_per_scale = manifest.at("iterations_per_scale").get<int>();
  m.alpha = manifest.at("alpha").get<double>();
  m.lr = manifest.at("lr").get<double>();
  m.d_steps = manifest.at("d_steps").get<int>();
  m.g_steps = manifest.at("g_steps").get<int>();
  m.lambda_gp = manifest.at("lambda_gp").get<double>();
  m.widths = manifest.at("widths").get<std::vector<int>>();
  m.depth = manifest.at("depth").get<int>();
  m.kernel = manifest.at("kernel").get<int>();
  m.channels = manifest.at("channels").get<int>();
  m.seed_hashes = manifest.at("seed_hashes").get<std::vector<std::string>>();
  m.codec = manifest.value("codec", "");
  m.engine = manifest.value("engine", "");
  m.created = manifest.value("created", "");
  m.rng_seed = manifest.value("rng_seed", 0ULL);
  m.deterministic = manifest.value("deterministic", true);
  m.normalization = manifest.value("normalization", "none");

  if (static_cast<int>(m.widths.size()) != m.scales)
    throw RuntimeError("stack manifest: widths length does not match scales");

  std::map<std::string, json> by_name;
  for (const auto& entry : manifest.at("tensors")) by_name[entry.at("name")] = entry;

  auto fetch = [&](const std::string& name) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw RuntimeError("stack manifest: missing tensor " + name);
    return container::read_blob(dir, it->second);
  };

  for (int k = 1; k <= m.scales; ++k) {
    PatchDiscriminator<float> d(m.channels, m.widths[k - 1], m.depth, m.kernel);
    for (int i = 0; i < m.depth; ++i) {
      std::string base = "d" + std::to_string(k) + "_conv" + std::to_string(i + 1);
      Tensor<float> w = fetch(base + "_w");
      Tensor<float> b = fetch(base + "_b");
      if (!w.same_shape(d.convs[i].w) || !b.same_shape(d.convs[i].b))
        throw RuntimeError("stack tensor " + base + ": shape does not match architecture");
      d.convs[i].w = std::move(w);
      d.convs[i].b = std::move(b);
    }
    stack.scales.push_back(std::move(d));
  }
  return stack;
}

uint64_t checkpoint_size_bytes(const std::string& dir) {
  uint64_t total = 0;
  for (const auto& entry : std::filesystem::directory_iterator(dir))
    if (entry.is_regular_file()) total += entry.file_size();
  return total;
}

}  // namespace mdf
