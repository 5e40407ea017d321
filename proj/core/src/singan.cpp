// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0

#include "mdf/singan.hpp"

#include <cmath>
#include <fstream>

#include "mdf/image_io.hpp"

namespace mdf {

ScaleModels make_scale_models(int k, int channels, const TrainHyper& hyper) {
  hyper.validate();
  require(k >= 1, "make_scale_models: scale index must be >= 1");
  int width = hyper.width_at(k);
  ScaleModels sm;
  sm.scale_index = k;
  sm.discriminator = PatchDiscriminator<float>(channels, width, hyper.depth, hyper.kernel);
  sm.generator = ResidualGenerator<float>(channels, width, hyper.depth, hyper.kernel);
  if (hyper.strict_receptive_field && sm.discriminator.receptive_field() != kReceptiveField) {
    throw ValidationError("make_scale_models: depth " + std::to_string(hyper.depth) + " kernel " +
                          std::to_string(hyper.kernel) + " gives receptive field " +
                          std::to_string(sm.discriminator.receptive_field()) + ", expected " +
                          std::to_string(kReceptiveField));
  }
  Rng rng(hyper.seed, 0xd15c0000ULL + static_cast<uint64_t>(k));
  sm.discriminator.init(rng);
  sm.generator.init(rng);
  return sm;
}

namespace {

double tensor_mse(const Tensor<float>& a, const Tensor<float>& b) {
  double s = 0.0;
  for (size_t i = 0; i < a.v.size(); ++i) {
    double d = static_cast<double>(a.v[i]) - static_cast<double>(b.v[i]);
    s += d * d;
  }
  return s / static_cast<double>(a.v.size());
}

struct ScaleTrainer {
  const TaskSpec& task;
  const TrainHyper& hyper;
  int k;
  const std::vector<std::vector<Image>>& pyramids;    // per seed
  const std::vector<Image>* lower_recons;             // per seed, null at k == 1

  Image generator_base(int seed_idx) const {
    const Image& y = pyramids[seed_idx][k - 1];
    if (k == 1) return y;
    const Image& lower = (*lower_recons)[seed_idx];
    Tensor<float> t = image_to_tensor<float>(lower);
    return tensor_to_image(bilinear_resize(t, y.h, y.w));
  }

  TrainScaleResult run() const {
    int n_seeds = static_cast<int>(pyramids.size());
    int channels = pyramids[0][0].c;
    ScaleModels sm = make_scale_models(k, channels, hyper);
    auto& d = sm.discriminator;
    auto& g = sm.generator;

    Adam<float> adam_d(hyper.lr_d > 0 ? hyper.lr_d : hyper.lr, hyper.beta1, hyper.beta2);
    Adam<float> adam_g(hyper.lr, hyper.beta1, hyper.beta2);
    auto d_params = d.params();
    auto g_params = g.params();

    Rng rng(hyper.seed, 0x7a5e0000ULL + static_cast<uint64_t>(k));

    // Base inputs are recomputed once; corruption is re-sampled every step so
    // the discriminator sees the full severity range.
    std::vector<Image> bases(n_seeds);
    std::vector<Tensor<float>> reals(n_seeds);
    for (int s = 0; s < n_seeds; ++s) {
      bases[s] = generator_base(s);
      reals[s] = image_to_tensor<float>(pyramids[s][k - 1]);
    }

    ScaleReport report;
    report.scale = k;

    // Critic update against one generated sample. Sum-reduced over the
    // activation map to match the gradient penalty's sum-gradient convention
    // (a mean would vanish against it), plus the calibration term pushing the
    // squashed activations toward 1 on the seed and 0 on generated patches.
    auto critic_step = [&](int s, double* d_adv_out) {
      Image input_img = corrupt_for_task(bases[s], task, rng);
      Tensor<float> input = image_to_tensor<float>(input_img);
      Tensor<float> fake = g.forward(input);

      auto tr_fake = d.run(fake, true);
      auto tr_real = d.run(reals[s], true);
      const auto& zf = d.critic_map(tr_fake);
      const auto& zr = d.critic_map(tr_real);
      if (d_adv_out) *d_adv_out = tensor_mean(zf) - tensor_mean(zr);

      d.zero_grads();
      float w_bce = static_cast<float>(hyper.bce_weight);
      Tensor<float> dz_fake(zf.n, zf.c, zf.h, zf.w);
      Tensor<float> dz_real(zr.n, zr.c, zr.h, zr.w);
      for (size_t i = 0; i < dz_fake.v.size(); ++i)
        dz_fake.v[i] = 1.0f + w_bce * tr_fake.sig.v[i];
      for (size_t i = 0; i < dz_real.v.size(); ++i)
        dz_real.v[i] = -1.0f + w_bce * (tr_real.sig.v[i] - 1.0f);
      d.accumulate_param_grads(tr_fake, dz_fake);
      d.accumulate_param_grads(tr_real, dz_real);

      float eps = static_cast<float>(rng.uniform());
      Tensor<float> mix = reals[s];
      for (size_t i = 0; i < mix.v.size(); ++i)
        mix.v[i] = eps * mix.v[i] + (1.0f - eps) * fake.v[i];
      // Per-patch Lipschitz target: hold each of the N patch critics near
      // unit slope rather than their sum (which would cap the attainable
      // per-activation separation at ||real - fake|| / N).
      d.gradient_penalty_accumulate(mix, hyper.lambda_gp,
                                    std::sqrt(static_cast<double>(zf.size())));
      adam_d.step(d_params);
    };

    for (int it = 0; it < hyper.iterations_per_scale; ++it) {
      double d_adv = 0.0, g_adv = 0.0, rec = 0.0;

      for (int step = 0; step < hyper.d_steps; ++step) {
        int s = n_seeds == 1 ? 0 : rng.uniform_int(0, n_seeds - 1);
        critic_step(s, &d_adv);
      }

      for (int step = 0; step < hyper.g_steps; ++step) {
        int s = n_seeds == 1 ? 0 : rng.uniform_int(0, n_seeds - 1);
        Image input_img = corrupt_for_task(bases[s], task, rng);
        Tensor<float> input = image_to_tensor<float>(input_img);
        auto tr_g = g.run(input);
        auto tr_d = d.run(tr_g.out, false);
        const auto& z = d.critic_map(tr_d);
        g_adv = -tensor_mean(z);
        rec = tensor_mse(tr_g.out, reals[s]);

        // The generator keeps the mean-reduced adversarial term so the
        // alpha-weighted reconstruction stays in charge of the output.
        Tensor<float> dz(z.n, z.c, z.h, z.w, -1.0f / static_cast<float>(z.size()));
        Tensor<float> dout = d.input_gradient(tr_d, &dz, nullptr);
        float rec_coef = static_cast<float>(2.0 * hyper.alpha / static_cast<double>(tr_g.out.size()));
        for (size_t i = 0; i < dout.v.size(); ++i)
          dout.v[i] += rec_coef * (tr_g.out.v[i] - reals[s].v[i]);

        g.zero_grads();
        g.backward(tr_g, dout);
        adam_g.step(g_params);
      }

      if (!std::isfinite(d_adv) || !std::isfinite(g_adv) || !std::isfinite(rec)) {
        throw RuntimeError("train_scale: loss diverged (NaN) at scale " + std::to_string(k) +
                           " iteration " + std::to_string(it));
      }
      report.curve.push_back({it, d_adv, g_adv, rec});
    }

    // The generator is final; refine the critic against it so the frozen
    // discriminator ends decisive about the remaining generator errors. The
    // game is over, so this is a plain calibration fit of the [0,1] map
    // (seed patches toward 1, reconstructions toward 0) with the Lipschitz
    // penalty kept in place.
    Adam<float> adam_refine(2e-3, 0.9, hyper.beta2);
    for (int it = 0; it < hyper.refine_steps(); ++it) {
      int s = n_seeds == 1 ? 0 : rng.uniform_int(0, n_seeds - 1);
      Image input_img = corrupt_for_task(bases[s], task, rng);
      Tensor<float> fake = g.forward(image_to_tensor<float>(input_img));
      auto tr_fake = d.run(fake, true);
      auto tr_real = d.run(reals[s], true);
      const auto& zf = d.critic_map(tr_fake);
      const auto& zr = d.critic_map(tr_real);
      d.zero_grads();
      Tensor<float> dz_fake(zf.n, zf.c, zf.h, zf.w);
      Tensor<float> dz_real(zr.n, zr.c, zr.h, zr.w);
      for (size_t i = 0; i < dz_fake.v.size(); ++i) dz_fake.v[i] = tr_fake.sig.v[i];
      for (size_t i = 0; i < dz_real.v.size(); ++i) dz_real.v[i] = tr_real.sig.v[i] - 1.0f;
      d.accumulate_param_grads(tr_fake, dz_fake);
      d.accumulate_param_grads(tr_real, dz_real);
      // No gradient penalty here: the game is over, and its slope cap would
      // fight the calibration. Lipschitz regularization matters only while
      // the generator trains against the critic.
      adam_refine.step(d_params);
    }

    // Frozen per-seed reconstructions with a pinned corruption draw.
    TrainScaleResult result;
    Rng rng_recon(hyper.seed, 0x4ec00000ULL + static_cast<uint64_t>(k));
    std::vector<Image> recons(n_seeds);
    for (int s = 0; s < n_seeds; ++s) {
      Image input_img = corrupt_for_task(bases[s], task, rng_recon);
      Tensor<float> out = g.forward(image_to_tensor<float>(input_img));
      recons[s] = tensor_to_image(out);
      if (s == 0) {
        report.corrupted_input_mse = mse(input_img, pyramids[0][k - 1]);
        report.recon_mse = mse(recons[0], pyramids[0][k - 1]);
        auto tr_real = d.run(reals[0], true);
        auto tr_fake = d.run(image_to_tensor<float>(recons[0]), true);
        report.final_margin = tensor_mean(tr_real.sig) - tensor_mean(tr_fake.sig);
      }
    }

    sm.trained = true;
    result.models = std::move(sm);
    result.report = std::move(report);
    result.all_reconstructions = std::move(recons);
    result.reconstruction = result.all_reconstructions[0];
    return result;
  }
};

Phase1Result train_stack_impl(const std::vector<Image>& seeds, const TaskSpec& task,
                              const PyramidSpec& spec, const TrainHyper& hyper) {
  require(!seeds.empty(), "train_mdf_stack: seed list is empty");
  task.validate();
  spec.validate();
  hyper.validate();
  int channels = seeds[0].c;
  for (const Image& s : seeds) {
    require(s.c == channels, "train_mdf_stack: all seeds must share a channel count");
    require(s.finite(), "train_mdf_stack: seed image has non-finite values");
  }

  std::vector<std::vector<Image>> pyramids;
  pyramids.reserve(seeds.size());
  for (const Image& s : seeds) pyramids.push_back(build_pyramid(s, spec));

  Phase1Result result;
  std::vector<Image> recons;
  for (int k = 1; k <= spec.scales; ++k) {
    ScaleTrainer trainer{task, hyper, k, pyramids, k == 1 ? nullptr : &recons};
    TrainScaleResult scale = trainer.run();
    result.stack.scales.push_back(std::move(scale.models.discriminator));
    result.reports.push_back(std::move(scale.report));
    recons = std::move(scale.all_reconstructions);
  }
  result.reconstructions = std::move(recons);

  StackMeta& m = result.stack.meta;
  m.task = task;
  m.scales = spec.scales;
  m.rho = spec.rho;
  m.iterations_per_scale = hyper.iterations_per_scale;
  m.alpha = hyper.alpha;
  m.lr = hyper.lr;
  m.d_steps = hyper.d_steps;
  m.g_steps = hyper.g_steps;
  m.lambda_gp = hyper.lambda_gp;
  for (int k = 1; k <= spec.scales; ++k) m.widths.push_back(hyper.width_at(k));
  m.depth = hyper.depth;
  m.kernel = hyper.kernel;
  m.channels = channels;
  for (const Image& s : seeds) m.seed_hashes.push_back(to_hex(s.content_hash()));
  m.codec = jpeg_codec_id();
  m.created = iso8601_now();
  m.rng_seed = hyper.seed;
  m.deterministic = hyper.deterministic;
  return result;
}

}  // namespace

TrainScaleResult train_scale(int k, const std::vector<Image>& seed_pyramid,
                             const Image* lower_recon, const TaskSpec& task,
                             const TrainHyper& hyper) {
  require(k >= 1 && k <= static_cast<int>(seed_pyramid.size()),
          "train_scale: scale index out of range");
  if (k > 1)
    require(lower_recon != nullptr,
            "train_scale: scales below " + std::to_string(k) + " are untrained (no reconstruction)");
  std::vector<std::vector<Image>> pyramids{seed_pyramid};
  std::vector<Image> lowers;
  if (lower_recon) lowers.push_back(*lower_recon);
  ScaleTrainer trainer{task, hyper, k, pyramids, k == 1 ? nullptr : &lowers};
  return trainer.run();
}

Phase1Result train_mdf_stack(const Image& seed, const TaskSpec& task, const PyramidSpec& spec,
                             const TrainHyper& hyper) {
  return train_stack_impl({seed}, task, spec, hyper);
}

Phase1Result train_multi_seed_stack(const std::vector<Image>& seeds, const TaskSpec& task,
                                    const PyramidSpec& spec, const TrainHyper& hyper) {
  return train_stack_impl(seeds, task, spec, hyper);
}

void write_training_log(const std::vector<ScaleReport>& reports, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot write training log: " + path);
  out << "scale,iteration,d_adv,g_adv,rec_mse\n";
  char buf[160];
  for (const auto& r : reports)
    for (const auto& row : r.curve) {
      std::snprintf(buf, sizeof(buf), "%d,%d,%.9g,%.9g,%.9g\n", r.scale, row.iteration, row.d_adv,
                    row.g_adv, row.rec_mse);
      out << buf;
    }
}

}  // namespace mdf
