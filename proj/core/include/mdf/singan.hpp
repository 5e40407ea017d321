// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include "mdf/stack.hpp"

namespace mdf {

struct TrainHyper {
  int iterations_per_scale = 3000;
  double alpha = 100.0;  // reconstruction weight
  double lr = 5e-4;
  double lr_d = 0.0;  // critic learning rate; 0 means same as lr
  double beta1 = 0.5, beta2 = 0.999;
  int d_steps = 3, g_steps = 3;
  double lambda_gp = 0.1;
  // Weight of the calibration term that pushes the squashed map toward 1 on
  // seed patches and 0 on generated ones. The WGAN term alone leaves the
  // critic's absolute level free, which makes [0,1] activations meaningless.
  double bce_weight = 1.0;
  // Discriminator-only steps against the frozen generator at the end of each
  // scale. The adversarial equilibrium leaves the critic undecided; the
  // frozen stack is used as a feature extractor afterwards, so it is refined
  // to be maximally sensitive to the final generator's residual errors.
  // Negative means iterations_per_scale / 5.
  int d_refine_steps = -1;

  int refine_steps() const {
    return d_refine_steps >= 0 ? d_refine_steps : iterations_per_scale / 2;
  }
  int base_width = 32;
  int width_double_every = 4;
  int max_width = 128;
  int depth = 5, kernel = 3;
  uint64_t seed = 0;
  bool deterministic = true;
  bool strict_receptive_field = true;

  void validate() const {
    require(iterations_per_scale >= 1, "TrainHyper: iterations must be >= 1");
    // alpha = 0 is the adversarial-only negative control; negatives are out.
    require(alpha >= 0.0, "TrainHyper: alpha must be >= 0");
    require(d_steps >= 1 && g_steps >= 1, "TrainHyper: step counts must be >= 1");
    require(depth >= 2 && kernel >= 1, "TrainHyper: bad architecture");
  }

  /// Channel width at 1-based scale k: doubled every `width_double_every`
  /// scales from the coarsest, capped.
  int width_at(int k) const {
    int doublings = (k - 1) / width_double_every;
    long w = base_width;
    for (int i = 0; i < doublings; ++i) w *= 2;
    return static_cast<int>(std::min<long>(w, max_width));
  }

  static TrainHyper desk(int iterations = 300, uint64_t seed = 1) {
    TrainHyper h;
    h.iterations_per_scale = iterations;
    h.d_steps = 1;
    h.g_steps = 1;
    h.d_refine_steps = 400;  // small scales need the longer calibration fit
    h.seed = seed;
    return h;
  }
};

/// One scale's generator/discriminator pair.
struct ScaleModels {
  ResidualGenerator<float> generator;
  PatchDiscriminator<float> discriminator;
  int scale_index = 0;  // 1-based
  bool trained = false;
};

/// Builds an untrained pair for scale k. Rejects architectures whose
/// receptive field is not 11x11 when strict mode is on.
ScaleModels make_scale_models(int k, int channels, const TrainHyper& hyper);

struct ScaleReport {
  int scale = 0;
  double final_margin = 0.0;          // mean(D(real)) - mean(D(fake)), sigmoid maps
  double recon_mse = 0.0;             // MSE(y~^k, y^k)
  double corrupted_input_mse = 0.0;   // MSE(G input, y^k)
  struct Row {
    int iteration;
    double d_adv;     // mean critic(fake) - mean critic(real)
    double g_adv;     // -mean critic(fake)
    double rec_mse;
  };
  std::vector<Row> curve;
};

struct TrainScaleResult {
  ScaleModels models;
  Image reconstruction;
  ScaleReport report;
  std::vector<Image> all_reconstructions;  // one per seed (multi-seed training)
};

/// Trains scale k against seed_pyramid[k-1]. For k > 1 the generator input is
/// the corrupted bilinear upscale of the lower scale's reconstruction; for
/// k = 1 it is the corrupted coarsest seed. Lower scales must already be
/// trained (lower_recon comes from their frozen output).
TrainScaleResult train_scale(int k, const std::vector<Image>& seed_pyramid,
                             const Image* lower_recon, const TaskSpec& task,
                             const TrainHyper& hyper);

struct Phase1Result {
  DiscriminatorStack stack;
  std::vector<ScaleReport> reports;
  std::vector<Image> reconstructions;  // finest-scale reconstruction per seed
};

Phase1Result train_mdf_stack(const Image& seed, const TaskSpec& task, const PyramidSpec& spec,
                             const TrainHyper& hyper);

/// Same protocol, but every step samples one seed uniformly. A single-element
/// seed list is identical to train_mdf_stack.
Phase1Result train_multi_seed_stack(const std::vector<Image>& seeds, const TaskSpec& task,
                                    const PyramidSpec& spec, const TrainHyper& hyper);

/// Writes per-scale training curves as CSV (iteration, d_adv, g_adv, rec_mse).
void write_training_log(const std::vector<ScaleReport>& reports, const std::string& path);

}  // namespace mdf
