// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <optional>
#include <variant>

#include "mdf/losses.hpp"
#include "mdf/task.hpp"

namespace mdf {

enum class ArchId { kDncnn, kEdsrLike, kSrResnetLike };

ArchId arch_from_name(const std::string& name);
std::string arch_name(ArchId a);

struct ModelConfig {
  ArchId arch = ArchId::kDncnn;
  int channels = 3;
  int width = 64;
  int depth = 17;      // dncnn conv layers
  int blocks = 16;     // SR residual blocks
  int sr_factor = 1;   // 1 for dncnn; 2 or 4 for SR nets

  void validate() const;

  // Toy presets keep desk-scale runs within CPU budgets; full presets mirror
  // the cited architectures.
  static ModelConfig dncnn_s(int channels = 3) { return {ArchId::kDncnn, channels, 32, 4, 0, 1}; }
  static ModelConfig dncnn_full(int channels = 3) { return {ArchId::kDncnn, channels, 64, 17, 0, 1}; }
  static ModelConfig edsr_s(int channels = 3, int factor = 4) {
    return {ArchId::kEdsrLike, channels, 32, 0, 4, factor};
  }
  static ModelConfig edsr_full(int channels = 3, int factor = 4) {
    return {ArchId::kEdsrLike, channels, 64, 0, 16, factor};
  }
  static ModelConfig sr_resnet_s(int channels = 3, int factor = 4) {
    return {ArchId::kSrResnetLike, channels, 32, 0, 4, factor};
  }
  static ModelConfig sr_resnet_full(int channels = 3, int factor = 4) {
    return {ArchId::kSrResnetLike, channels, 64, 0, 16, factor};
  }
};

/// DnCNN-style residual denoiser: same-padded conv/ReLU stack whose output is
/// added to the input. The last conv starts at zero, so a fresh model is the
/// identity map.
struct DncnnNet {
  int channels = 3, width = 32, depth = 4;
  std::vector<Conv2d<float>> convs;

  DncnnNet() = default;
  DncnnNet(int channels_, int width_, int depth_, Rng& rng);

  struct Trace {
    std::vector<Tensor<float>> inputs;
    std::vector<Tensor<float>> pre;
    Tensor<float> out;
  };
  Trace run(const Tensor<float>& x) const;
  Tensor<float> forward(const Tensor<float>& x) const { return run(x).out; }
  void backward(const Trace& tr, const Tensor<float>& dout);
  std::vector<ParamRef<float>> params();
  void zero_grads();
};

/// SR backbone: head conv, residual blocks, body conv with a global skip,
/// pixel-shuffle upsampling, tail conv. The SR-ResNet variant adds a bilinear
/// path from the upscaled input and activates the upsampler.
struct SrNet {
  int channels = 3, width = 32, blocks = 4, factor = 4;
  bool bilinear_skip = false;  // SR-ResNet-like
  Conv2d<float> head;
  std::vector<Conv2d<float>> block_convs;  // 2 per block
  Conv2d<float> body;
  std::vector<Conv2d<float>> up_convs;  // one per x2 stage
  Conv2d<float> tail;

  SrNet() = default;
  SrNet(int channels_, int width_, int blocks_, int factor_, bool bilinear_skip_, Rng& rng);

  struct Trace;
  std::shared_ptr<Trace> run(const Tensor<float>& x) const;
  Tensor<float> forward(const Tensor<float>& x) const;
  const Tensor<float>& output(const Trace& tr) const;
  void backward(const Trace& tr, const Tensor<float>& dout);
  std::vector<ParamRef<float>> params();
  void zero_grads();
};

class RestorationModel {
 public:
  RestorationModel() = default;
  RestorationModel(const ModelConfig& cfg, uint64_t seed);

  const ModelConfig& config() const { return cfg_; }
  int output_scale() const { return cfg_.sr_factor; }

  Tensor<float> forward(const Tensor<float>& x) const;
  std::vector<ParamRef<float>> params();
  void zero_grads();

  /// Full-image inference with overlap-tiled evaluation (tile 256, overlap
  /// 16, linear blending). SISR output dims = factor * input dims.
  Image infer(const Image& img, int tile = 256, int overlap = 16) const;

  void save(const std::string& dir) const;
  static RestorationModel load(const std::string& dir);

  // Internal nets; exposed for the training loop.
  DncnnNet* dncnn() { return std::get_if<DncnnNet>(&net_); }
  SrNet* sr() { return std::get_if<SrNet>(&net_); }
  const DncnnNet* dncnn() const { return std::get_if<DncnnNet>(&net_); }
  const SrNet* sr() const { return std::get_if<SrNet>(&net_); }

 private:
  ModelConfig cfg_;
  std::variant<DncnnNet, SrNet> net_;
};

struct Recipe {
  TaskSpec task;
  int patch = 96;
  bool augment = true;
  int epochs = 50;
  int batch = 16;
  int patches_per_epoch = 2000;
  int val_patches = 200;
  std::string optimizer = "adam";  // adam | sgd_nesterov
  double lr0 = 1e-3, lr1 = 1e-5;
  std::string schedule = "cosine";  // cosine | exp | const
  double weight_decay = 0.0;
  double momentum = 0.9;
  double adam_beta1 = 0.9, adam_beta2 = 0.999;
  uint64_t seed = 0;
  bool deterministic = true;

  void validate() const;
  double lr_at(int epoch) const;

  static Recipe sisr_full();     // 500 epochs, 1e-3 with gradual decay
  static Recipe denoise_full();  // SGD+Nesterov, wd 1e-4, 50 epochs, 0.1 -> 1e-4
  static Recipe jpeg_full();     // Adam at 1e-4
  static Recipe toy(const TaskSpec& task, int epochs = 5, int patch = 32,
                    int patches_per_epoch = 2000);
};

struct Pair {
  Tensor<float> input;   // 1xCxhxw
  Tensor<float> target;  // 1xCxHxW
};

/// Deterministic patch sampler over a directory of images. Unreadable or
/// undersized files are skipped with a warning; an empty usable set throws.
class PairStream {
 public:
  PairStream(const std::string& dataset_dir, const TaskSpec& task, const Recipe& recipe);

  /// Regenerates the epoch's augmented pairs; derivation from (seed, epoch,
  /// index) keeps results independent of evaluation order.
  std::vector<Pair> epoch(int epoch_index, int count) const;

  int image_count() const { return static_cast<int>(images_.size()); }

 private:
  Pair make_pair(Rng& rng) const;
  std::vector<Image> images_;
  TaskSpec task_;
  Recipe recipe_;
};

/// The 8 dihedral variants (rotations by 0/90/180/270 plus flips).
Image dihedral(const Image& img, int variant);

struct TrainHistory {
  struct Row {
    int epoch;
    double lr;
    double train_loss;
    double val_loss;
  };
  std::vector<Row> rows;
  int best_epoch = -1;
  double best_val_loss = 0.0;
  bool diverged = false;
};

/// Trains in place and returns the checkpoint minimizing validation loss.
/// NaN divergence stops training and restores the last good weights.
TrainHistory train_restoration(RestorationModel& model, const LossFunction& loss,
                               const Recipe& recipe, const std::string& train_dir,
                               const std::string& val_dir);

void write_history_csv(const TrainHistory& history, const std::string& path);

}  // namespace mdf
