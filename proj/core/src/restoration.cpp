// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#include "mdf/restoration.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>

#include "container.hpp"
#include "mdf/distort.hpp"
#include "mdf/image_io.hpp"
#include "mdf/resize.hpp"

namespace mdf {

ArchId arch_from_name(const std::string& name) {
  if (name == "dncnn") return ArchId::kDncnn;
  if (name == "edsr_like" || name == "edsr") return ArchId::kEdsrLike;
  if (name == "sr_resnet_like" || name == "sr_resnet") return ArchId::kSrResnetLike;
  throw ValidationError("unknown architecture: " + name);
}

std::string arch_name(ArchId a) {
  switch (a) {
    case ArchId::kDncnn: return "dncnn";
    case ArchId::kEdsrLike: return "edsr_like";
    default: return "sr_resnet_like";
  }
}

void ModelConfig::validate() const {
  require(channels == 1 || channels == 3, "ModelConfig: channels must be 1 or 3");
  require(width >= 1, "ModelConfig: width must be >= 1");
  if (arch == ArchId::kDncnn) {
    require(depth >= 2, "ModelConfig: dncnn depth must be >= 2");
    require(sr_factor == 1, "ModelConfig: dncnn maps at scale 1");
  } else {
    require(blocks >= 1, "ModelConfig: SR nets need >= 1 residual block");
    require(sr_factor == 2 || sr_factor == 4, "ModelConfig: sr factor must be 2 or 4");
  }
}

// ---------------------------------------------------------------------------
// DnCNN
// ---------------------------------------------------------------------------

DncnnNet::DncnnNet(int channels_, int width_, int depth_, Rng& rng)
    : channels(channels_), width(width_), depth(depth_) {
  convs.reserve(depth);
  for (int i = 0; i < depth; ++i) {
    int ic = i == 0 ? channels : width;
    int oc = i == depth - 1 ? channels : width;
    convs.emplace_back(ic, oc, 3, 1);
    if (i == depth - 1)
      convs.back().init_zero();  // identity at init
    else
      convs.back().init_he(rng);
  }
}

DncnnNet::Trace DncnnNet::run(const Tensor<float>& x) const {
  Trace tr;
  Tensor<float> cur = x;
  for (int i = 0; i < depth; ++i) {
    tr.inputs.push_back(cur);
    Tensor<float> z = convs[i].forward(cur);
    tr.pre.push_back(z);
    if (i + 1 < depth) cur = leaky_relu(z, 0.0f);
  }
  tr.out = x;
  add_inplace(tr.out, tr.pre.back());
  return tr;
}

void DncnnNet::backward(const Trace& tr, const Tensor<float>& dout) {
  Tensor<float> cur = dout;
  for (int i = depth - 1; i >= 0; --i) {
    convs[i].accumulate_grads(tr.inputs[i], cur);
    if (i == 0) break;
    cur = leaky_relu_backward(convs[i].input_grad(cur), tr.pre[i - 1], 0.0f);
  }
}

std::vector<ParamRef<float>> DncnnNet::params() {
  std::vector<ParamRef<float>> out;
  for (auto& c : convs) {
    out.push_back({&c.w, &c.gw});
    out.push_back({&c.b, &c.gb});
  }
  return out;
}

void DncnnNet::zero_grads() {
  for (auto& c : convs) c.zero_grads();
}

// ---------------------------------------------------------------------------
// SR nets
// ---------------------------------------------------------------------------

struct SrNet::Trace {
  Tensor<float> x;
  Tensor<float> head_out;
  struct Block {
    Tensor<float> in, z1, a1, z2;
  };
  std::vector<Block> blocks;
  Tensor<float> body_in, body_out;  // body_out includes the global skip
  struct Up {
    Tensor<float> in, z, shuffled;  // shuffled is pre-activation
  };
  std::vector<Up> ups;
  Tensor<float> tail_in, tail_out;
  Tensor<float> out;
};

SrNet::SrNet(int channels_, int width_, int blocks_, int factor_, bool bilinear_skip_, Rng& rng)
    : channels(channels_), width(width_), blocks(blocks_), factor(factor_),
      bilinear_skip(bilinear_skip_) {
  head = Conv2d<float>(channels, width, 3, 1);
  head.init_he(rng);
  for (int b = 0; b < blocks; ++b) {
    block_convs.emplace_back(width, width, 3, 1);
    block_convs.back().init_he(rng);
    block_convs.emplace_back(width, width, 3, 1);
    block_convs.back().init_he(rng);
  }
  body = Conv2d<float>(width, width, 3, 1);
  body.init_he(rng);
  int stages = factor == 4 ? 2 : 1;
  for (int s = 0; s < stages; ++s) {
    up_convs.emplace_back(width, 4 * width, 3, 1);
    up_convs.back().init_he(rng);
  }
  tail = Conv2d<float>(width, channels, 3, 1);
  tail.init_he(rng);
}

std::shared_ptr<SrNet::Trace> SrNet::run(const Tensor<float>& x) const {
  auto tr = std::make_shared<Trace>();
  tr->x = x;
  tr->head_out = head.forward(x);
  Tensor<float> cur = tr->head_out;
  for (int b = 0; b < blocks; ++b) {
    Trace::Block blk;
    blk.in = cur;
    blk.z1 = block_convs[2 * b].forward(cur);
    blk.a1 = leaky_relu(blk.z1, 0.0f);
    blk.z2 = block_convs[2 * b + 1].forward(blk.a1);
    cur = blk.in;
    add_inplace(cur, blk.z2);
    tr->blocks.push_back(std::move(blk));
  }
  tr->body_in = cur;
  tr->body_out = body.forward(cur);
  add_inplace(tr->body_out, tr->head_out);  // global skip
  cur = tr->body_out;
  for (auto& upc : up_convs) {
    Trace::Up up;
    up.in = cur;
    up.z = upc.forward(cur);
    up.shuffled = pixel_shuffle(up.z, 2);
    cur = bilinear_skip ? leaky_relu(up.shuffled, 0.0f) : up.shuffled;
    tr->ups.push_back(std::move(up));
  }
  tr->tail_in = cur;
  tr->tail_out = tail.forward(cur);
  tr->out = tr->tail_out;
  if (bilinear_skip) {
    Tensor<float> base = bilinear_resize(x, x.h * factor, x.w * factor);
    add_inplace(tr->out, base);
  }
  return tr;
}

Tensor<float> SrNet::forward(const Tensor<float>& x) const { return run(x)->out; }

const Tensor<float>& SrNet::output(const Trace& tr) const { return tr.out; }

void SrNet::backward(const Trace& tr, const Tensor<float>& dout) {
  // Bilinear skip depends only on the input: nothing to accumulate there.
  Tensor<float> cur = dout;
  tail.accumulate_grads(tr.tail_in, cur);
  cur = tail.input_grad(cur);
  for (int s = static_cast<int>(up_convs.size()) - 1; s >= 0; --s) {
    const auto& up = tr.ups[s];
    if (bilinear_skip) cur = leaky_relu_backward(cur, up.shuffled, 0.0f);
    Tensor<float> dz = pixel_shuffle_backward(cur, 2, up.z.c, up.z.h, up.z.w);
    up_convs[s].accumulate_grads(up.in, dz);
    cur = up_convs[s].input_grad(dz);
  }
  // cur = d(body_out); the global skip feeds it to the head as well.
  Tensor<float> dhead = cur;
  body.accumulate_grads(tr.body_in, cur);
  cur = body.input_grad(cur);
  for (int b = blocks - 1; b >= 0; --b) {
    const auto& blk = tr.blocks[b];
    Tensor<float> dz2 = cur;  // branch output gradient
    block_convs[2 * b + 1].accumulate_grads(blk.a1, dz2);
    Tensor<float> da1 = block_convs[2 * b + 1].input_grad(dz2);
    Tensor<float> dz1 = leaky_relu_backward(da1, blk.z1, 0.0f);
    block_convs[2 * b].accumulate_grads(blk.in, dz1);
    Tensor<float> din = block_convs[2 * b].input_grad(dz1);
    add_inplace(cur, din);  // skip connection: d(in) = d(out) + branch grad
  }
  add_inplace(dhead, cur);
  head.accumulate_grads(tr.x, dhead);
}

std::vector<ParamRef<float>> SrNet::params() {
  std::vector<ParamRef<float>> out;
  auto push = [&](Conv2d<float>& c) {
    out.push_back({&c.w, &c.gw});
    out.push_back({&c.b, &c.gb});
  };
  push(head);
  for (auto& c : block_convs) push(c);
  push(body);
  for (auto& c : up_convs) push(c);
  push(tail);
  return out;
}

void SrNet::zero_grads() {
  head.zero_grads();
  for (auto& c : block_convs) c.zero_grads();
  body.zero_grads();
  for (auto& c : up_convs) c.zero_grads();
  tail.zero_grads();
}

// ---------------------------------------------------------------------------
// RestorationModel
// ---------------------------------------------------------------------------

RestorationModel::RestorationModel(const ModelConfig& cfg, uint64_t seed) : cfg_(cfg) {
  cfg.validate();
  Rng rng(seed, 0xabcdULL);
  if (cfg.arch == ArchId::kDncnn) {
    net_ = DncnnNet(cfg.channels, cfg.width, cfg.depth, rng);
  } else {
    net_ = SrNet(cfg.channels, cfg.width, cfg.blocks, cfg.sr_factor,
                 cfg.arch == ArchId::kSrResnetLike, rng);
  }
}

Tensor<float> RestorationModel::forward(const Tensor<float>& x) const {
  require(x.c == cfg_.channels, "model: channel count mismatch");
  if (const auto* d = dncnn()) return d->forward(x);
  return sr()->forward(x);
}

std::vector<ParamRef<float>> RestorationModel::params() {
  if (auto* d = dncnn()) return d->params();
  return sr()->params();
}

void RestorationModel::zero_grads() {
  if (auto* d = dncnn())
    d->zero_grads();
  else
    sr()->zero_grads();
}

Image RestorationModel::infer(const Image& img, int tile, int overlap) const {
  require(img.c == cfg_.channels, "infer: channel count mismatch");
  int f = cfg_.sr_factor;
  if (img.h <= tile && img.w <= tile) {
    Tensor<float> out = forward(image_to_tensor<float>(img));
    return tensor_to_image(out);
  }
  require(tile > 2 * overlap, "infer: tile must exceed twice the overlap");
  Image acc(img.h * f, img.w * f, img.c, 0.0);
  Image wsum(img.h * f, img.w * f, 1, 0.0);

  int step = tile - overlap;
  // Linear cross-fade across the overlap strip. Interior tile edges carry a
  // dead margin of overlap/4 pixels, which keeps seams bit-exact as long as
  // the margin covers the network's receptive-field radius; edges that touch
  // the image border see the true border and keep full weight.
  auto ramp = [&](int j, int len, int ov, bool lo_border, bool hi_border) {
    int dead = std::max(1, ov / 4);
    double w = 1.0;
    if (!lo_border) w = std::min(w, (j - dead + 1) / static_cast<double>(ov - dead + 1));
    if (!hi_border) w = std::min(w, (len - 1 - j - dead + 1) / static_cast<double>(ov - dead + 1));
    return std::max(0.0, w);
  };

  for (int y0 = 0;; y0 += step) {
    if (y0 > 0 && y0 + tile > img.h) y0 = std::max(0, img.h - tile);
    int th = std::min(tile, img.h - y0);
    for (int x0 = 0;; x0 += step) {
      if (x0 > 0 && x0 + tile > img.w) x0 = std::max(0, img.w - tile);
      int tw = std::min(tile, img.w - x0);
      Image crop(th, tw, img.c);
      for (int y = 0; y < th; ++y)
        for (int x = 0; x < tw; ++x)
          for (int ch = 0; ch < img.c; ++ch) crop.at(y, x, ch) = img.at(y0 + y, x0 + x, ch);
      Tensor<float> out = forward(image_to_tensor<float>(crop));
      Image out_img = tensor_to_image(out);
      int ovf = overlap * f;
      bool top = y0 == 0, bottom = y0 + th == img.h;
      bool left = x0 == 0, right = x0 + tw == img.w;
      for (int y = 0; y < out_img.h; ++y) {
        double wy = ramp(y, out_img.h, ovf, top, bottom);
        if (wy == 0.0) continue;
        for (int x = 0; x < out_img.w; ++x) {
          double wv = wy * ramp(x, out_img.w, ovf, left, right);
          if (wv == 0.0) continue;
          for (int ch = 0; ch < img.c; ++ch)
            acc.at(y0 * f + y, x0 * f + x, ch) += wv * out_img.at(y, x, ch);
          wsum.at(y0 * f + y, x0 * f + x, 0) += wv;
        }
      }
      if (x0 + tile >= img.w) break;
    }
    if (y0 + tile >= img.h) break;
  }
  for (int y = 0; y < acc.h; ++y)
    for (int x = 0; x < acc.w; ++x) {
      double wv = wsum.at(y, x, 0);
      for (int ch = 0; ch < img.c; ++ch) acc.at(y, x, ch) /= wv;
    }
  return acc;
}

void RestorationModel::save(const std::string& dir) const {
  nlohmann::json manifest;
  manifest["format_version"] = container::kFormatVersion;
  manifest["kind"] = "restoration_model";
  manifest["arch"] = arch_name(cfg_.arch);
  manifest["channels"] = cfg_.channels;
  manifest["width"] = cfg_.width;
  manifest["depth"] = cfg_.depth;
  manifest["blocks"] = cfg_.blocks;
  manifest["sr_factor"] = cfg_.sr_factor;
  manifest["engine"] = "mdf-core/0.1";
  manifest["created"] = iso8601_now();

  std::filesystem::create_directories(dir);
  nlohmann::json tensors = nlohmann::json::array();
  if (const auto* d = dncnn()) {
    for (size_t i = 0; i < d->convs.size(); ++i) {
      container::write_blob(dir, "conv" + std::to_string(i + 1) + "_w", d->convs[i].w, tensors);
      container::write_blob(dir, "conv" + std::to_string(i + 1) + "_b", d->convs[i].b, tensors);
    }
  } else {
    const auto* s = sr();
    container::write_blob(dir, "head_w", s->head.w, tensors);
    container::write_blob(dir, "head_b", s->head.b, tensors);
    for (size_t i = 0; i < s->block_convs.size(); ++i) {
      std::string base = "block" + std::to_string(i / 2 + 1) + "_c" + std::to_string(i % 2 + 1);
      container::write_blob(dir, base + "_w", s->block_convs[i].w, tensors);
      container::write_blob(dir, base + "_b", s->block_convs[i].b, tensors);
    }
    container::write_blob(dir, "body_w", s->body.w, tensors);
    container::write_blob(dir, "body_b", s->body.b, tensors);
    for (size_t i = 0; i < s->up_convs.size(); ++i) {
      container::write_blob(dir, "up" + std::to_string(i + 1) + "_w", s->up_convs[i].w, tensors);
      container::write_blob(dir, "up" + std::to_string(i + 1) + "_b", s->up_convs[i].b, tensors);
    }
    container::write_blob(dir, "tail_w", s->tail.w, tensors);
    container::write_blob(dir, "tail_b", s->tail.b, tensors);
  }
  manifest["tensors"] = tensors;
  container::write_manifest(dir, manifest);
}

RestorationModel RestorationModel::load(const std::string& dir) {
  nlohmann::json manifest = container::read_manifest(dir, "restoration_model");
  ModelConfig cfg;
  cfg.arch = arch_from_name(manifest.at("arch").get<std::string>());
  cfg.channels = manifest.at("channels").get<int>();
  cfg.width = manifest.at("width").get<int>();
  cfg.depth = manifest.at("depth").get<int>();
  cfg.blocks = manifest.at("blocks").get<int>();
  cfg.sr_factor = manifest.at("sr_factor").get<int>();
  RestorationModel model(cfg, 0);

  std::map<std::string, nlohmann::json> by_name;
  for (const auto& entry : manifest.at("tensors")) by_name[entry.at("name")] = entry;
  auto fetch = [&](const std::string& name, Conv2d<float>& conv) {
    auto wit = by_name.find(name + "_w");
    auto bit = by_name.find(name + "_b");
    if (wit == by_name.end() || bit == by_name.end())
      throw RuntimeError("model manifest: missing tensor " + name);
    Tensor<float> w = container::read_blob(dir, wit->second);
    Tensor<float> b = container::read_blob(dir, bit->second);
    if (!w.same_shape(conv.w) || !b.same_shape(conv.b))
      throw RuntimeError("model tensor " + name + ": shape mismatch");
    conv.w = std::move(w);
    conv.b = std::move(b);
  };

  if (auto* d = model.dncnn()) {
    for (size_t i = 0; i < d->convs.size(); ++i)
      fetch("conv" + std::to_string(i + 1), d->convs[i]);
  } else {
    auto* s = model.sr();
    fetch("head", s->head);
    for (size_t i = 0; i < s->block_convs.size(); ++i)
      fetch("block" + std::to_string(i / 2 + 1) + "_c" + std::to_string(i % 2 + 1),
            s->block_convs[i]);
    fetch("body", s->body);
    for (size_t i = 0; i < s->up_convs.size(); ++i) fetch("up" + std::to_string(i + 1), s->up_convs[i]);
    fetch("tail", s->tail);
  }
  return model;
}

// ---------------------------------------------------------------------------
// Recipes and pair streams
// ---------------------------------------------------------------------------

void Recipe::validate() const {
  task.validate();
  require(patch >= 1, "Recipe: patch size must be >= 1");
  require(epochs >= 0, "Recipe: epochs must be >= 0");
  require(batch >= 1, "Recipe: batch must be >= 1");
  require(patches_per_epoch >= 1, "Recipe: patches_per_epoch must be >= 1");
  require(optimizer == "adam" || optimizer == "sgd_nesterov", "Recipe: unknown optimizer");
  require(schedule == "cosine" || schedule == "exp" || schedule == "const",
          "Recipe: unknown schedule");
  if (task.task == Task::kSisr)
    require(patch % task.sr_factor == 0, "Recipe: patch must be divisible by the SR factor");
}

double Recipe::lr_at(int epoch) const {
  if (epochs <= 1 || schedule == "const") return lr0;
  double t = static_cast<double>(epoch) / (epochs - 1);
  if (schedule == "cosine") return lr1 + (lr0 - lr1) * 0.5 * (1.0 + std::cos(M_PI * t));
  return lr0 * std::pow(lr1 / lr0, t);  // exp
}

Recipe Recipe::sisr_full() {
  Recipe r;
  r.task = TaskSpec::sisr(4);
  r.epochs = 500;
  r.optimizer = "adam";
  r.lr0 = 1e-3;
  r.lr1 = 1e-5;
  r.schedule = "cosine";
  return r;
}

Recipe Recipe::denoise_full() {
  Recipe r;
  r.task = TaskSpec::denoise(0.0, 55.0);
  r.epochs = 50;
  r.optimizer = "sgd_nesterov";
  r.lr0 = 0.1;
  r.lr1 = 1e-4;
  r.schedule = "exp";
  r.weight_decay = 1e-4;
  r.momentum = 0.9;
  return r;
}

Recipe Recipe::jpeg_full() {
  Recipe r;
  r.task = TaskSpec::jpeg(10, 10);
  r.epochs = 50;
  r.optimizer = "adam";
  r.lr0 = 1e-4;
  r.lr1 = 1e-4;
  r.schedule = "const";
  return r;
}

Recipe Recipe::toy(const TaskSpec& task, int epochs, int patch, int patches_per_epoch) {
  Recipe r;
  r.task = task;
  r.epochs = epochs;
  r.patch = patch;
  r.patches_per_epoch = patches_per_epoch;
  r.batch = 8;
  r.val_patches = 64;
  r.optimizer = "adam";
  r.lr0 = 1e-3;
  r.lr1 = 2e-4;
  r.schedule = "cosine";
  return r;
}

Image dihedral(const Image& img, int variant) {
  require(variant >= 0 && variant < 8, "dihedral: variant must be in [0,8)");
  bool flip = variant >= 4;
  int rot = variant % 4;
  Image cur = img;
  if (flip) {  // horizontal mirror
    Image m(cur.h, cur.w, cur.c);
    for (int y = 0; y < cur.h; ++y)
      for (int x = 0; x < cur.w; ++x)
        for (int ch = 0; ch < cur.c; ++ch) m.at(y, x, ch) = cur.at(y, cur.w - 1 - x, ch);
    cur = std::move(m);
  }
  for (int r = 0; r < rot; ++r) {  // 90 degrees clockwise
    Image m(cur.w, cur.h, cur.c);
    for (int y = 0; y < cur.h; ++y)
      for (int x = 0; x < cur.w; ++x)
        for (int ch = 0; ch < cur.c; ++ch) m.at(x, cur.h - 1 - y, ch) = cur.at(y, x, ch);
    cur = std::move(m);
  }
  return cur;
}

PairStream::PairStream(const std::string& dataset_dir, const TaskSpec& task, const Recipe& recipe)
    : task_(task), recipe_(recipe) {
  require(std::filesystem::is_directory(dataset_dir),
          "dataset directory does not exist: " + dataset_dir);
  std::vector<std::string> files;
  for (const auto& entry : std::filesystem::directory_iterator(dataset_dir))
    if (entry.is_regular_file()) files.push_back(entry.path().string());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) {
    try {
      Image img = load_image(f);
      if (img.h < recipe.patch || img.w < recipe.patch) {
        std::fprintf(stderr, "[pairs] skipping undersized image %s (%dx%d < patch %d)\n",
                     f.c_str(), img.h, img.w, recipe.patch);
        continue;
      }
      images_.push_back(std::move(img));
    } catch (const std::exception& e) {
      std::fprintf(stderr, "[pairs] skipping unreadable file %s: %s\n", f.c_str(), e.what());
    }
  }
  if (images_.empty())
    throw ValidationError("no usable images in dataset directory: " + dataset_dir);
}

Pair PairStream::make_pair(Rng& rng) const {
  const Image& src = images_[rng.uniform_int(0, static_cast<int>(images_.size()) - 1)];
  int p = recipe_.patch;
  int y0 = rng.uniform_int(0, src.h - p);
  int x0 = rng.uniform_int(0, src.w - p);
  Image target(p, p, src.c);
  for (int y = 0; y < p; ++y)
    for (int x = 0; x < p; ++x)
      for (int ch = 0; ch < src.c; ++ch) target.at(y, x, ch) = src.at(y0 + y, x0 + x, ch);
  if (recipe_.augment) target = dihedral(target, rng.uniform_int(0, 7));

  Image input;
  switch (task_.task) {
    case Task::kSisr:
      input = resize(target, p / task_.sr_factor, p / task_.sr_factor, Filter::kBicubic);
      break;
    case Task::kDenoise: {
      double sigma = rng.uniform(task_.noise_sigma_lo, task_.noise_sigma_hi);
      input = add_gaussian_noise(target, sigma, rng);
      break;
    }
    default:
      input = jpeg_roundtrip(target, rng.uniform_int(task_.jpeg_quality_lo, task_.jpeg_quality_hi));
  }
  return {image_to_tensor<float>(input), image_to_tensor<float>(target)};
}

std::vector<Pair> PairStream::epoch(int epoch_index, int count) const {
  std::vector<Pair> pairs(count);
  Rng base(recipe_.seed, 0x9a1c5ULL);
  for (int i = 0; i < count; ++i) {
    Rng rng = base.child(static_cast<uint64_t>(epoch_index) * 0x10000019ULL + i);
    pairs[i] = make_pair(rng);
  }
  return pairs;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

namespace {

Tensor<float> stack_batch(const std::vector<Pair>& pairs, size_t begin, size_t end, bool input) {
  const Tensor<float>& first = input ? pairs[begin].input : pairs[begin].target;
  Tensor<float> out(static_cast<int>(end - begin), first.c, first.h, first.w);
  for (size_t i = begin; i < end; ++i) {
    const Tensor<float>& t = input ? pairs[i].input : pairs[i].target;
    std::copy(t.v.begin(), t.v.end(), out.v.begin() + (i - begin) * t.v.size());
  }
  return out;
}

double batch_loss_and_grad(const LossFunction& loss, const Tensor<float>& out,
                           const std::vector<Pair>& pairs, size_t begin, size_t end,
                           Tensor<float>* dout) {
  double total = 0.0;
  if (dout) *dout = Tensor<float>(out.n, out.c, out.h, out.w);
  double inv = 1.0 / static_cast<double>(end - begin);
  for (size_t i = begin; i < end; ++i) {
    Image out_img = tensor_to_image(out, static_cast<int>(i - begin));
    Image target_img = tensor_to_image(pairs[i].target);
    if (dout) {
      Image g;
      total += loss.eval(target_img, out_img, &g) * inv;
      size_t plane = g.data.size();
      for (size_t j = 0; j < plane; ++j) {
        int y = static_cast<int>(j / g.c) / g.w;
        int x = static_cast<int>(j / g.c) % g.w;
        int ch = static_cast<int>(j % g.c);
        dout->at(static_cast<int>(i - begin), ch, y, x) = static_cast<float>(g.data[j] * inv);
      }
    } else {
      total += loss.eval(target_img, out_img, nullptr) * inv;
    }
  }
  return total;
}

double validation_loss(RestorationModel& model, const LossFunction& loss,
                       const std::vector<Pair>& val_pairs) {
  double total = 0.0;
  for (const auto& p : val_pairs) {
    Tensor<float> out = model.forward(p.input);
    Image out_img = tensor_to_image(out);
    Image target_img = tensor_to_image(p.target);
    total += loss.eval(target_img, out_img, nullptr);
  }
  return total / static_cast<double>(val_pairs.size());
}

}  // namespace

TrainHistory train_restoration(RestorationModel& model, const LossFunction& loss,
                               const Recipe& recipe, const std::string& train_dir,
                               const std::string& val_dir) {
  recipe.validate();
  TrainHistory history;
  if (recipe.epochs == 0) return history;

  PairStream train_stream(train_dir, recipe.task, recipe);
  PairStream val_stream(val_dir, recipe.task, recipe);
  // Validation pairs are pinned once, from a reserved epoch index.
  std::vector<Pair> val_pairs = val_stream.epoch(0x7fff0000, recipe.val_patches);
  require(!val_pairs.empty(), "train_restoration: empty validation set");

  Adam<float> adam(recipe.lr0, recipe.adam_beta1, recipe.adam_beta2);
  SgdNesterov<float> sgd;
  sgd.momentum = recipe.momentum;
  sgd.weight_decay = recipe.weight_decay;
  auto params = model.params();

  RestorationModel best = model;
  history.best_val_loss = std::numeric_limits<double>::infinity();

  for (int e = 0; e < recipe.epochs; ++e) {
    double lr = recipe.lr_at(e);
    std::vector<Pair> pairs = train_stream.epoch(e, recipe.patches_per_epoch);
    double train_loss = 0.0;
    int batches = 0;
    bool nan_hit = false;

    for (size_t b = 0; b < pairs.size(); b += recipe.batch) {
      size_t endb = std::min(pairs.size(), b + recipe.batch);
      Tensor<float> input = stack_batch(pairs, b, endb, true);
      Tensor<float> dout;
      double bl = 0.0;

      model.zero_grads();
      if (auto* d = model.dncnn()) {
        auto tr = d->run(input);
        bl = batch_loss_and_grad(loss, tr.out, pairs, b, endb, &dout);
        if (std::isfinite(bl)) d->backward(tr, dout);
      } else {
        auto tr = model.sr()->run(input);
        bl = batch_loss_and_grad(loss, tr->out, pairs, b, endb, &dout);
        if (std::isfinite(bl)) model.sr()->backward(*tr, dout);
      }
      if (!std::isfinite(bl)) {
        nan_hit = true;
        break;
      }
      if (recipe.optimizer == "adam") {
        adam.lr = lr;
        adam.step(params);
      } else {
        sgd.lr = lr;
        sgd.step(params);
      }
      train_loss += bl;
      ++batches;
    }

    if (nan_hit) {
      history.diverged = true;
      break;
    }
    train_loss /= std::max(1, batches);
    double val_loss = validation_loss(model, loss, val_pairs);
    history.rows.push_back({e, lr, train_loss, val_loss});
    if (std::isfinite(val_loss) && val_loss < history.best_val_loss) {
      history.best_val_loss = val_loss;
      history.best_epoch = e;
      best = model;
    }
  }

  if (history.best_epoch >= 0) model = best;
  return history;
}

void write_history_csv(const TrainHistory& history, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot write history: " + path);
  out << "epoch,lr,train_loss,val_loss\n";
  char buf[160];
  for (const auto& r : history.rows) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.9g,%.9g\n", r.epoch, r.lr, r.train_loss,
                  r.val_loss);
    out << buf;
  }
}

}  // namespace mdf
