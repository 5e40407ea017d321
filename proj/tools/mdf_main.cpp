// Copyright (c) 2026 the mdf authors
// SPDX-License-Identifier: Apache-2.0
//
// mdf: train the multi-scale discriminative feature loss from a seed image,
// train restoration models against any registered loss, and run the
// evaluation harness (metrics, sensitivity study, manifold probe, JND
// scaling, scale-ablation sweeps).

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>

#include "mdf/image_io.hpp"
#include "mdf/jnd.hpp"
#include "mdf/metrics.hpp"
#include "mdf/probe.hpp"
#include "mdf/singan.hpp"
#include "mdf/study.hpp"
#include "mdf/synth.hpp"
#include "svg.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace mdf;

namespace {

// ---------------------------------------------------------------------------
// Config plumbing: defaults <- config file <- explicit CLI flags. Unknown
// keys in the config file are rejected before any work happens.
// ---------------------------------------------------------------------------

struct Options {
  json values;                      // starts at defaults
  std::string config_path;
  std::map<std::string, CLI::Option*> bound;

  void bind(CLI::App* app, const std::string& key, const std::string& desc, json default_value) {
    values[key] = std::move(default_value);
    // Everything is accepted as a string and coerced by JSON type of the
    // default; keeps override logic uniform.
    auto holder = std::make_shared<std::string>();
    CLI::Option* opt =
        app->add_option_function<std::string>(
               "--" + key, [holder](const std::string& v) { *holder = v; }, desc)
            ->type_name(values[key].is_number() ? "NUM" : "TEXT");
    bound[key] = opt;
    raw_[key] = holder;
  }

  json finalize(const std::set<std::string>& allowed) {
    if (!config_path.empty()) {
      std::ifstream in(config_path);
      if (!in) throw ValidationError("cannot open config file: " + config_path);
      json file;
      try {
        in >> file;
      } catch (const std::exception& e) {
        throw ValidationError("config file is not valid JSON: " + std::string(e.what()));
      }
      for (auto& [key, value] : file.items()) {
        if (!allowed.count(key)) throw ValidationError("unknown config key: '" + key + "'");
        coerce(key, value);
      }
    }
    for (auto& [key, opt] : bound)
      if (opt->count() > 0) coerce_string(key, *raw_[key]);
    return values;
  }

 private:
  void coerce(const std::string& key, const json& v) {
    const json& cur = values[key];
    if (cur.is_number_integer() && !v.is_number_integer())
      throw ValidationError("config key '" + key + "' must be an integer");
    if (cur.is_number_float() && !v.is_number())
      throw ValidationError("config key '" + key + "' must be a number");
    if (cur.is_string() && !v.is_string())
      throw ValidationError("config key '" + key + "' must be a string");
    if (cur.is_boolean() && !v.is_boolean())
      throw ValidationError("config key '" + key + "' must be a boolean");
    values[key] = v;
  }

  void coerce_string(const std::string& key, const std::string& s) {
    json& cur = values[key];
    try {
      if (cur.is_number_integer())
        cur = static_cast<long long>(std::stoll(s));
      else if (cur.is_number_float())
        cur = std::stod(s);
      else if (cur.is_boolean())
        cur = s == "1" || s == "true" || s == "yes";
      else
        cur = s;
    } catch (const std::exception&) {
      throw ValidationError("flag --" + key + ": cannot parse '" + s + "'");
    }
  }

  std::map<std::string, std::shared_ptr<std::string>> raw_;
};

std::set<std::string> keys_of(const json& j) {
  std::set<std::string> out;
  for (auto& [k, v] : j.items()) out.insert(k);
  return out;
}

fs::path make_run_dir(const json& cfg, const std::string& command) {
  std::string root = cfg.value("out", "runs");
  json hashed = cfg;
  hashed.erase("resume");  // resuming must land in the original run dir
  std::string hash = to_hex(fnv1a64(hashed.dump())).substr(4, 12);
  fs::path dir = fs::path(root) / (command + "-" + hash);
  fs::create_directories(dir);
  return dir;
}

TaskSpec task_from_config(const json& cfg) {
  TaskSpec t;
  t.task = task_from_name(cfg.at("task").get<std::string>());
  t.noise_sigma_lo = cfg.value("noise_lo", 0.0);
  t.noise_sigma_hi = cfg.value("noise_hi", 55.0);
  t.jpeg_quality_lo = cfg.value("quality_lo", 7);
  t.jpeg_quality_hi = cfg.value("quality_hi", 10);
  t.sr_factor = cfg.value("sr_factor", 4);
  t.validate();
  return t;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw RuntimeError("cannot write " + path.string());
  out << text;
}

// ---------------------------------------------------------------------------
// train-loss
// ---------------------------------------------------------------------------

int cmd_train_loss(const json& cfg) {
  std::vector<std::string> seed_paths = split_list(cfg.at("seeds").get<std::string>());
  require(!seed_paths.empty(), "train-loss: no seed images given (--seeds)");
  std::vector<Image> seeds;
  for (const auto& p : seed_paths) {
    if (!fs::exists(p)) throw ValidationError("seed image does not exist: " + p);
    seeds.push_back(load_image(p));
  }

  TaskSpec task = task_from_config(cfg);
  PyramidSpec spec{cfg.at("scales").get<int>(), cfg.at("rho").get<double>()};
  TrainHyper hyper;
  hyper.iterations_per_scale = cfg.at("iterations").get<int>();
  hyper.alpha = cfg.at("alpha").get<double>();
  hyper.lr = cfg.at("lr").get<double>();
  hyper.d_steps = cfg.at("d_steps").get<int>();
  hyper.g_steps = cfg.at("g_steps").get<int>();
  hyper.lambda_gp = cfg.at("lambda_gp").get<double>();
  hyper.base_width = cfg.at("width").get<int>();
  hyper.seed = cfg.at("seed").get<uint64_t>();
  hyper.deterministic = cfg.at("deterministic").get<bool>();
  hyper.validate();
  spec.validate();

  fs::path run = make_run_dir(cfg, "train-loss");
  std::fprintf(stderr, "[train-loss] run dir: %s\n", run.string().c_str());

  Phase1Result result = seeds.size() == 1
                            ? train_mdf_stack(seeds[0], task, spec, hyper)
                            : train_multi_seed_stack(seeds, task, spec, hyper);

  save_stack(result.stack, (run / "stack").string());
  write_training_log(result.reports, (run / "training_log.csv").string());

  json summary;
  summary["stack"] = (run / "stack").string();
  summary["task"] = task_name(task.task);
  summary["scales"] = result.stack.scale_count();
  json margins = json::array();
  for (const auto& r : result.reports) {
    json m;
    m["scale"] = r.scale;
    m["final_margin"] = r.final_margin;
    m["recon_mse"] = r.recon_mse;
    m["corrupted_input_mse"] = r.corrupted_input_mse;
    margins.push_back(m);
  }
  summary["per_scale"] = margins;
  write_text(run / "summary.json", summary.dump(2) + "\n");
  std::cout << summary.dump(2) << std::endl;
  return 0;
}

// ---------------------------------------------------------------------------
// train-restore
// ---------------------------------------------------------------------------

ModelConfig model_from_config(const json& cfg, const TaskSpec& task) {
  std::string arch = cfg.at("arch").get<std::string>();
  std::string preset = cfg.at("preset").get<std::string>();
  require(preset == "toy" || preset == "full", "preset must be 'toy' or 'full'");
  int ch = cfg.at("channels").get<int>();
  ModelConfig mc;
  if (arch == "dncnn")
    mc = preset == "toy" ? ModelConfig::dncnn_s(ch) : ModelConfig::dncnn_full(ch);
  else if (arch == "edsr" || arch == "edsr_like")
    mc = preset == "toy" ? ModelConfig::edsr_s(ch, task.sr_factor)
                         : ModelConfig::edsr_full(ch, task.sr_factor);
  else if (arch == "sr_resnet" || arch == "sr_resnet_like")
    mc = preset == "toy" ? ModelConfig::sr_resnet_s(ch, task.sr_factor)
                         : ModelConfig::sr_resnet_full(ch, task.sr_factor);
  else
    throw ValidationError("unknown arch: " + arch);
  if (cfg.value("width", 0) > 0) mc.width = cfg.at("width").get<int>();
  if (cfg.value("depth", 0) > 0 && mc.arch == ArchId::kDncnn) mc.depth = cfg.at("depth").get<int>();
  if (cfg.value("blocks", 0) > 0 && mc.arch != ArchId::kDncnn)
    mc.blocks = cfg.at("blocks").get<int>();
  mc.validate();
  return mc;
}

Recipe recipe_from_config(const json& cfg, const TaskSpec& task) {
  Recipe r;
  r.task = task;
  r.patch = cfg.at("patch").get<int>();
  r.epochs = cfg.at("epochs").get<int>();
  r.batch = cfg.at("batch").get<int>();
  r.patches_per_epoch = cfg.at("patches_per_epoch").get<int>();
  r.val_patches = cfg.at("val_patches").get<int>();
  r.optimizer = cfg.at("optimizer").get<std::string>();
  r.lr0 = cfg.at("lr0").get<double>();
  r.lr1 = cfg.at("lr1").get<double>();
  r.schedule = cfg.at("schedule").get<std::string>();
  r.weight_decay = cfg.at("weight_decay").get<double>();
  r.momentum = cfg.at("momentum").get<double>();
  r.augment = cfg.at("augment").get<bool>();
  r.seed = cfg.at("seed").get<uint64_t>();
  r.deterministic = cfg.at("deterministic").get<bool>();
  r.validate();
  return r;
}

int cmd_train_restore(const json& cfg) {
  TaskSpec task = task_from_config(cfg);
  ModelConfig mc = model_from_config(cfg, task);
  Recipe recipe = recipe_from_config(cfg, task);
  auto loss = LossRegistry::instance().make(cfg.at("loss").get<std::string>());

  // Pre-flight: the loss must accept images with this channel count (an
  // mdf stack trained on a different count must fail before training).
  {
    Image probe = synth_image(1, {.h = 48, .w = 48, .channels = mc.channels});
    loss->eval(probe, probe, nullptr);
  }

  fs::path run = make_run_dir(cfg, "train-restore");
  std::fprintf(stderr, "[train-restore] run dir: %s\n", run.string().c_str());

  RestorationModel model(mc, recipe.seed);
  int epoch_offset = 0;
  std::vector<TrainHistory::Row> previous_rows;
  if (cfg.at("resume").get<bool>() && fs::exists(run / "model" / "manifest.json")) {
    model = RestorationModel::load((run / "model").string());
    std::ifstream in(run / "history.csv");
    std::string line;
    std::getline(in, line);  // header
    while (std::getline(in, line)) {
      TrainHistory::Row row{};
      if (std::sscanf(line.c_str(), "%d,%lf,%lf,%lf", &row.epoch, &row.lr, &row.train_loss,
                      &row.val_loss) == 4) {
        previous_rows.push_back(row);
        epoch_offset = row.epoch + 1;
      }
    }
    std::fprintf(stderr, "[train-restore] resuming at epoch %d\n", epoch_offset);
  }

  TrainHistory history =
      train_restoration(model, *loss, recipe, cfg.at("train_dir").get<std::string>(),
                        cfg.at("val_dir").get<std::string>());
  if (history.diverged)
    std::fprintf(stderr, "[train-restore] diverged; last good checkpoint kept\n");

  for (auto& row : history.rows) row.epoch += epoch_offset;
  TrainHistory full;
  full.rows = previous_rows;
  full.rows.insert(full.rows.end(), history.rows.begin(), history.rows.end());
  full.best_epoch = history.best_epoch >= 0 ? history.best_epoch + epoch_offset : -1;
  full.best_val_loss = history.best_val_loss;

  model.save((run / "model").string());
  write_history_csv(full, (run / "history.csv").string());

  json summary;
  summary["model"] = (run / "model").string();
  summary["loss"] = loss->name();
  summary["epochs"] = full.rows.size();
  summary["best_epoch"] = full.best_epoch;
  summary["best_val_loss"] = full.best_val_loss;
  summary["diverged"] = history.diverged;
  write_text(run / "summary.json", summary.dump(2) + "\n");
  std::cout << summary.dump(2) << std::endl;
  return history.diverged ? 3 : 0;
}

// ---------------------------------------------------------------------------
// eval (stack mode and model mode)
// ---------------------------------------------------------------------------

int cmd_eval(const json& cfg) {
  std::string stack_path = cfg.at("stack").get<std::string>();
  std::string model_path = cfg.at("model").get<std::string>();
  if (!stack_path.empty()) {
    require(model_path.empty(), "eval: give either --stack or --model, not both");
    DiscriminatorStack stack = load_stack(stack_path);
    Image ref = load_image(cfg.at("ref").get<std::string>());
    Image test = load_image(cfg.at("test").get<std::string>());
    std::vector<double> per_scale;
    double total = mdf_loss(stack, ref, test, &per_scale);
    json out;
    out["total"] = total;
    out["per_scale"] = per_scale;
    out["scales"] = stack.scale_count();
    std::cout << out.dump(2) << std::endl;
    return 0;
  }
  require(!model_path.empty(), "eval: --stack or --model is required");

  RestorationModel model = RestorationModel::load(model_path);
  TaskSpec task = task_from_config(cfg);
  EvalOptions opts;
  opts.denoise_sigma = cfg.at("sigma").get<double>();
  opts.jpeg_quality = cfg.at("quality").get<int>();
  opts.seed = cfg.at("seed").get<uint64_t>();
  NiqeModel niqe_model;
  std::string niqe_path = cfg.at("niqe_model").get<std::string>();
  if (!niqe_path.empty()) {
    niqe_model = NiqeModel::load(niqe_path);
    opts.compute_niqe = true;
    opts.niqe_model = &niqe_model;
  }

  fs::path run = make_run_dir(cfg, "eval");
  MetricReport report = evaluate_model(model, cfg.at("test_dir").get<std::string>(), task, opts);
  report.write_csv((run / "report.csv").string());

  json out;
  out["report"] = (run / "report.csv").string();
  out["images"] = report.rows.size();
  out["mean_psnr_db"] = report.mean_psnr;
  out["mean_ssim"] = report.mean_ssim;
  if (opts.compute_niqe) out["mean_niqe"] = report.mean_niqe;
  write_text(run / "summary.json", out.dump(2) + "\n");
  std::cout << out.dump(2) << std::endl;
  return 0;
}

// ---------------------------------------------------------------------------
// study
// ---------------------------------------------------------------------------

int cmd_study(const json& cfg) {
  std::vector<std::unique_ptr<LossFunction>> owned;
  std::vector<const LossFunction*> losses;
  for (const std::string& spec : split_list(cfg.at("losses").get<std::string>())) {
    owned.push_back(LossRegistry::instance().make(spec));
    losses.push_back(owned.back().get());
  }
  std::vector<DistortionKind> kinds;
  for (const std::string& k : split_list(cfg.at("kinds").get<std::string>()))
    kinds.push_back(distortion_from_name(k));
  std::vector<double> levels;
  for (const std::string& l : split_list(cfg.at("levels").get<std::string>()))
    levels.push_back(std::stod(l));

  std::vector<Image> images;
  std::string dir = cfg.at("images_dir").get<std::string>();
  require(fs::is_directory(dir), "study: images_dir does not exist: " + dir);
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  int limit = cfg.at("max_images").get<int>();
  for (const auto& f : files) {
    if (static_cast<int>(images.size()) >= limit) break;
    images.push_back(load_image(f));
  }
  require(!images.empty(), "study: no images found in " + dir);

  fs::path run = make_run_dir(cfg, "study");
  SensitivityTable table = sensitivity_study(losses, images, kinds, levels,
                                             cfg.at("seed").get<uint64_t>());
  table.write_csv((run / "study.csv").string());

  // One plot per loss: level vs mean value, one series per kind.
  for (const auto* loss : losses) {
    mdfcli::SvgPlot plot(640, 480, loss->name() + " vs distortion level");
    for (DistortionKind kind : kinds) {
      std::vector<std::pair<double, double>> pts;
      for (const auto& r : table.rows)
        if (r.loss == loss->name() && r.kind == distortion_name(kind))
          pts.emplace_back(r.target_psnr_db, r.mean_loss);
      std::sort(pts.begin(), pts.end());
      plot.add_series(distortion_name(kind), pts);
    }
    std::string safe = loss->name();
    for (char& c : safe)
      if (c == ':' || c == '/' || c == '*' || c == '+') c = '_';
    plot.write((run / ("study_" + safe + ".svg")).string());
  }
  std::cout << "{\"study\": \"" << (run / "study.csv").string() << "\", \"rows\": "
            << table.rows.size() << "}" << std::endl;
  return 0;
}

// ---------------------------------------------------------------------------
// probe
// ---------------------------------------------------------------------------

int cmd_probe(const json& cfg) {
  auto stack = std::make_shared<DiscriminatorStack>(load_stack(cfg.at("stack").get<std::string>()));
  std::vector<LabeledSet> sets;
  for (const std::string& spec : split_list(cfg.at("sets").get<std::string>())) {
    size_t eq = spec.find('=');
    require(eq != std::string::npos, "probe: set spec must be label=dir, got '" + spec + "'");
    LabeledSet set;
    set.label = spec.substr(0, eq);
    std::string dir = spec.substr(eq + 1);
    require(fs::is_directory(dir), "probe: set directory does not exist: " + dir);
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dir))
      if (e.is_regular_file()) files.push_back(e.path().string());
    std::sort(files.begin(), files.end());
    for (const auto& f : files) set.images.push_back(load_image(f));
    sets.push_back(std::move(set));
  }

  fs::path run = make_run_dir(cfg, "probe");
  ProbeResult result = manifold_probe(stack_feature_extractor(stack), sets,
                                      cfg.at("seed").get<uint64_t>(),
                                      cfg.at("tsne_iterations").get<int>());

  std::string csv = "label,x,y,z\n";
  char buf[160];
  for (size_t i = 0; i < result.embedding.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%s,%.6f,%.6f,%.6f\n",
                  result.labels[result.point_labels[i]].c_str(), result.embedding[i][0],
                  result.embedding[i][1], result.embedding[i][2]);
    csv += buf;
  }
  write_text(run / "embedding.csv", csv);

  mdfcli::SvgPlot plot(640, 640, "feature embedding (first two t-SNE axes)");
  for (size_t s = 0; s < sets.size(); ++s) {
    std::vector<std::pair<double, double>> pts;
    for (size_t i = 0; i < result.embedding.size(); ++i)
      if (result.point_labels[i] == static_cast<int>(s))
        pts.emplace_back(result.embedding[i][0], result.embedding[i][1]);
    plot.add_series(sets[s].label, pts, false);
  }
  plot.write((run / "embedding.svg").string());

  json out;
  out["points"] = result.embedding.size();
  json stats = json::array();
  for (const auto& p : result.pair_stats) {
    json s;
    s["a"] = p.a;
    s["b"] = p.b;
    s["silhouette"] = p.silhouette;
    stats.push_back(s);
  }
  out["silhouettes"] = stats;
  write_text(run / "silhouette.json", out.dump(2) + "\n");
  std::cout << out.dump(2) << std::endl;
  return 0;
}

// ---------------------------------------------------------------------------
// scale (JND)
// ---------------------------------------------------------------------------

int cmd_scale(const json& cfg) {
  ComparisonMatrix m = ComparisonMatrix::load(cfg.at("matrix").get<std::string>());
  JndScores s = scale_jnd(m);

  fs::path run = make_run_dir(cfg, "scale");
  json out;
  out["names"] = s.names;
  out["jnd"] = s.q;
  out["ci95"] = s.ci95;
  out["sigma"] = s.sigma;
  out["log_likelihood"] = s.log_likelihood;
  out["boundary"] = s.boundary;
  if (m.size() == 2) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.2f", std::abs(s.q[0] - s.q[1]));
    out["delta_jnd"] = std::stod(buf);
  }
  write_text(run / "jnd.json", out.dump(2) + "\n");
  mdfcli::write_bar_svg((run / "jnd.svg").string(), s.names, s.q, s.ci95,
                        "subjective quality (JND)");
  std::cout << out.dump(2) << std::endl;
  return 0;
}

// ---------------------------------------------------------------------------
// sweep (scale-count ablation)
// ---------------------------------------------------------------------------

int cmd_sweep(const json& cfg) {
  fs::path run = make_run_dir(cfg, "sweep");
  std::fprintf(stderr, "[sweep] run dir: %s\n", run.string().c_str());

  // The stack is trained once at the maximum scale count; each sweep point
  // restricts the loss to the coarsest-K subset.
  std::shared_ptr<DiscriminatorStack> stack;
  std::string stack_path = cfg.at("stack").get<std::string>();
  if (!stack_path.empty()) {
    stack = std::make_shared<DiscriminatorStack>(load_stack(stack_path));
  } else {
    std::string seed_path = cfg.at("seeds").get<std::string>();
    require(!seed_path.empty(), "sweep: --stack or --seeds is required");
    require(fs::exists(seed_path), "seed image does not exist: " + seed_path);
    Image seed = load_image(seed_path);
    TaskSpec task = task_from_config(cfg);
    PyramidSpec spec{cfg.at("scales_max").get<int>(), cfg.at("rho").get<double>()};
    TrainHyper hyper = TrainHyper::desk(cfg.at("iterations").get<int>(),
                                        cfg.at("seed").get<uint64_t>());
    hyper.base_width = cfg.at("width").get<int>();
    Phase1Result r = train_mdf_stack(seed, task, spec, hyper);
    save_stack(r.stack, (run / "stack").string());
    stack = std::make_shared<DiscriminatorStack>(std::move(r.stack));
  }

  std::vector<int> scale_points;
  for (const std::string& s : split_list(cfg.at("sweep_scales").get<std::string>()))
    scale_points.push_back(std::stoi(s));
  require(!scale_points.empty(), "sweep: no scale points given");
  for (int k : scale_points)
    require(k >= 1 && k <= stack->scale_count(),
            "sweep: scale point " + std::to_string(k) + " outside the stack");

  TaskSpec task = task_from_config(cfg);
  ModelConfig mc = model_from_config(cfg, task);
  Recipe recipe = recipe_from_config(cfg, task);
  EvalOptions eopts;
  eopts.denoise_sigma = cfg.at("sigma").get<double>();
  eopts.jpeg_quality = cfg.at("quality").get<int>();

  std::string csv = "scales,psnr_db,ssim,val_loss\n";
  std::vector<std::pair<double, double>> curve;
  for (int k : scale_points) {
    std::vector<int> subset;
    for (int i = 1; i <= k; ++i) subset.push_back(i);
    auto loss = make_mdf_loss(stack, subset);

    RestorationModel model(mc, recipe.seed);
    TrainHistory history = train_restoration(model, *loss, recipe,
                                             cfg.at("train_dir").get<std::string>(),
                                             cfg.at("val_dir").get<std::string>());
    MetricReport report =
        evaluate_model(model, cfg.at("val_dir").get<std::string>(), task, eopts);
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%d,%.4f,%.5f,%.9g\n", k, report.mean_psnr, report.mean_ssim,
                  history.best_val_loss);
    csv += buf;
    curve.emplace_back(k, report.mean_psnr);
    std::fprintf(stderr, "[sweep] scales=%d psnr=%.3f dB\n", k, report.mean_psnr);
    model.save((run / ("model_k" + std::to_string(k))).string());
  }
  write_text(run / "sweep.csv", csv);
  mdfcli::SvgPlot plot(640, 480, "restoration PSNR vs loss scale count");
  plot.add_series("psnr_db", curve);
  plot.write((run / "sweep.svg").string());
  std::cout << "{\"sweep\": \"" << (run / "sweep.csv").string() << "\"}" << std::endl;
  return 0;
}

// ---------------------------------------------------------------------------
// gen-data / fit-niqe
// ---------------------------------------------------------------------------

int cmd_gen_data(const json& cfg) {
  std::string out = cfg.at("data_dir").get<std::string>();
  if (out.empty()) {
    const char* cache = std::getenv("MDF_CACHE");
    out = cache ? std::string(cache) + "/synth" : "runs/synth";
  }
  SynthOptions opts;
  opts.h = cfg.at("size").get<int>();
  opts.w = opts.h;
  opts.channels = cfg.at("channels").get<int>();
  auto paths = synth_dataset(out, cfg.at("count").get<int>(), cfg.at("seed").get<uint64_t>(), opts);
  std::cout << "{\"dir\": \"" << out << "\", \"count\": " << paths.size() << "}" << std::endl;
  return 0;
}

int cmd_fit_niqe(const json& cfg) {
  std::string dir = cfg.at("images_dir").get<std::string>();
  require(fs::is_directory(dir), "fit-niqe: images_dir does not exist: " + dir);
  std::vector<Image> images;
  std::vector<std::string> files;
  for (const auto& e : fs::directory_iterator(dir))
    if (e.is_regular_file()) files.push_back(e.path().string());
  std::sort(files.begin(), files.end());
  for (const auto& f : files) images.push_back(load_image(f));
  NiqeModel model = fit_niqe_model(images, cfg.at("patch").get<int>(),
                                   cfg.at("sharpness_fraction").get<double>(),
                                   "fit-niqe on " + dir + " (" + std::to_string(images.size()) +
                                       " images)");
  model.save(cfg.at("model_out").get<std::string>());
  std::cout << "{\"model\": \"" << cfg.at("model_out").get<std::string>()
            << "\", \"patches\": \"ok\"}" << std::endl;
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"multi-scale discriminative feature loss toolkit"};
  app.require_subcommand(1);

  struct Sub {
    CLI::App* cmd;
    Options opts;
    std::function<int(const json&)> fn;
  };
  std::vector<std::shared_ptr<Sub>> subs;

  auto add = [&](const std::string& name, const std::string& desc,
                 std::function<int(const json&)> fn) {
    auto sub = std::make_shared<Sub>();
    sub->cmd = app.add_subcommand(name, desc);
    sub->fn = std::move(fn);
    sub->cmd->add_option("--config", sub->opts.config_path, "JSON config file");
    subs.push_back(sub);
    return sub;
  };

  auto common = [](std::shared_ptr<Sub> s) {
    s->opts.bind(s->cmd, "out", "output root (run dir is <out>/<cmd>-<config hash>)", "runs");
    s->opts.bind(s->cmd, "seed", "RNG seed", 0);
    s->opts.bind(s->cmd, "deterministic", "pin all RNG streams", true);
  };

  auto task_opts = [](std::shared_ptr<Sub> s) {
    s->opts.bind(s->cmd, "task", "restoration task: sisr | denoise | jpeg", "denoise");
    s->opts.bind(s->cmd, "noise_lo", "denoise sigma range low (0-255 scale)", 0.0);
    s->opts.bind(s->cmd, "noise_hi", "denoise sigma range high", 55.0);
    s->opts.bind(s->cmd, "quality_lo", "jpeg quality range low", 7);
    s->opts.bind(s->cmd, "quality_hi", "jpeg quality range high", 10);
    s->opts.bind(s->cmd, "sr_factor", "super-resolution factor", 4);
  };

  {
    auto s = add("train-loss", "phase 1: train the discriminator stack on seed image(s)",
                 cmd_train_loss);
    common(s);
    task_opts(s);
    s->opts.bind(s->cmd, "seeds", "comma-separated seed image paths", "");
    s->opts.bind(s->cmd, "scales", "number of pyramid scales K", 8);
    s->opts.bind(s->cmd, "rho", "pyramid factor", 2.0);
    s->opts.bind(s->cmd, "iterations", "iterations per scale", 3000);
    s->opts.bind(s->cmd, "alpha", "reconstruction weight", 100.0);
    s->opts.bind(s->cmd, "lr", "learning rate", 5e-4);
    s->opts.bind(s->cmd, "d_steps", "discriminator steps per iteration", 3);
    s->opts.bind(s->cmd, "g_steps", "generator steps per iteration", 3);
    s->opts.bind(s->cmd, "lambda_gp", "gradient penalty weight", 0.1);
    s->opts.bind(s->cmd, "width", "base channel width", 32);
  }
  {
    auto s = add("train-restore", "phase 2: train a restoration model against a loss",
                 cmd_train_restore);
    common(s);
    task_opts(s);
    s->opts.bind(s->cmd, "arch", "dncnn | edsr | sr_resnet", "dncnn");
    s->opts.bind(s->cmd, "preset", "toy | full", "toy");
    s->opts.bind(s->cmd, "channels", "image channels", 3);
    s->opts.bind(s->cmd, "width", "override model width (0 = preset)", 0);
    s->opts.bind(s->cmd, "depth", "override dncnn depth (0 = preset)", 0);
    s->opts.bind(s->cmd, "blocks", "override SR blocks (0 = preset)", 0);
    s->opts.bind(s->cmd, "loss", "loss spec, e.g. l2 | mdf:DIR | mse+0.1*ext:lpips", "l2");
    s->opts.bind(s->cmd, "train_dir", "training image directory", "");
    s->opts.bind(s->cmd, "val_dir", "validation image directory", "");
    s->opts.bind(s->cmd, "patch", "training patch size", 96);
    s->opts.bind(s->cmd, "epochs", "epochs", 50);
    s->opts.bind(s->cmd, "batch", "batch size", 16);
    s->opts.bind(s->cmd, "patches_per_epoch", "patches per epoch", 2000);
    s->opts.bind(s->cmd, "val_patches", "validation patches", 200);
    s->opts.bind(s->cmd, "optimizer", "adam | sgd_nesterov", "adam");
    s->opts.bind(s->cmd, "lr0", "initial learning rate", 1e-3);
    s->opts.bind(s->cmd, "lr1", "final learning rate", 1e-5);
    s->opts.bind(s->cmd, "schedule", "cosine | exp | const", "cosine");
    s->opts.bind(s->cmd, "weight_decay", "weight decay (sgd)", 0.0);
    s->opts.bind(s->cmd, "momentum", "momentum (sgd)", 0.9);
    s->opts.bind(s->cmd, "augment", "dihedral augmentation", true);
    s->opts.bind(s->cmd, "resume", "resume from this config's run dir", false);
  }
  {
    auto s = add("eval", "evaluate a loss on an image pair, or a model on a directory", cmd_eval);
    common(s);
    task_opts(s);
    s->opts.bind(s->cmd, "stack", "stack checkpoint (pair mode)", "");
    s->opts.bind(s->cmd, "ref", "reference image (pair mode)", "");
    s->opts.bind(s->cmd, "test", "test image (pair mode)", "");
    s->opts.bind(s->cmd, "model", "model checkpoint (directory mode)", "");
    s->opts.bind(s->cmd, "test_dir", "test image directory", "");
    s->opts.bind(s->cmd, "sigma", "evaluation noise sigma (denoise)", 25.0);
    s->opts.bind(s->cmd, "quality", "evaluation jpeg quality", 10);
    s->opts.bind(s->cmd, "niqe_model", "NIQE model JSON (enables NIQE)", "");
  }
  {
    auto s = add("study", "loss sensitivity vs equal-PSNR distortions", cmd_study);
    common(s);
    s->opts.bind(s->cmd, "losses", "comma-separated loss specs", "l1,l2,ssim,ms_ssim");
    s->opts.bind(s->cmd, "kinds", "distortions: noise,blur,sinusoid,contrast,brightness",
                 "noise,blur,sinusoid,contrast,brightness");
    s->opts.bind(s->cmd, "levels", "PSNR levels in dB", "20,25,30,35,40");
    s->opts.bind(s->cmd, "images_dir", "reference image directory", "");
    s->opts.bind(s->cmd, "max_images", "cap on reference images", 10);
  }
  {
    auto s = add("probe", "manifold probe: silhouettes + t-SNE embedding", cmd_probe);
    common(s);
    s->opts.bind(s->cmd, "stack", "stack checkpoint", "");
    s->opts.bind(s->cmd, "sets", "labeled sets: label=dir,label=dir,...", "");
    s->opts.bind(s->cmd, "tsne_iterations", "t-SNE iterations", 400);
  }
  {
    auto s = add("scale", "Thurstone Case V JND scaling of a comparison matrix", cmd_scale);
    common(s);
    s->opts.bind(s->cmd, "matrix", "comparison matrix (CSV i,j,count or JSON)", "");
  }
  {
    auto s = add("sweep", "scale-count ablation: subset losses -> PSNR trend", cmd_sweep);
    common(s);
    task_opts(s);
    s->opts.bind(s->cmd, "stack", "existing stack (otherwise trains one)", "");
    s->opts.bind(s->cmd, "seeds", "seed image for stack training", "");
    s->opts.bind(s->cmd, "scales_max", "stack scale count when training", 8);
    s->opts.bind(s->cmd, "rho", "pyramid factor when training", 2.0);
    s->opts.bind(s->cmd, "iterations", "stack iterations per scale", 120);
    s->opts.bind(s->cmd, "width", "stack base width", 32);
    s->opts.bind(s->cmd, "sweep_scales", "scale counts to sweep", "1,2,3,5,7,8");
    s->opts.bind(s->cmd, "arch", "restoration arch", "edsr");
    s->opts.bind(s->cmd, "preset", "toy | full", "toy");
    s->opts.bind(s->cmd, "channels", "image channels", 3);
    s->opts.bind(s->cmd, "width_model", "unused placeholder", 0);
    s->opts.bind(s->cmd, "depth", "override dncnn depth", 0);
    s->opts.bind(s->cmd, "blocks", "override SR blocks", 0);
    s->opts.bind(s->cmd, "train_dir", "training image directory", "");
    s->opts.bind(s->cmd, "val_dir", "validation image directory", "");
    s->opts.bind(s->cmd, "patch", "patch size", 32);
    s->opts.bind(s->cmd, "epochs", "epochs per sweep point", 3);
    s->opts.bind(s->cmd, "batch", "batch size", 8);
    s->opts.bind(s->cmd, "patches_per_epoch", "patches per epoch", 400);
    s->opts.bind(s->cmd, "val_patches", "validation patches", 64);
    s->opts.bind(s->cmd, "optimizer", "adam | sgd_nesterov", "adam");
    s->opts.bind(s->cmd, "lr0", "initial lr", 1e-3);
    s->opts.bind(s->cmd, "lr1", "final lr", 2e-4);
    s->opts.bind(s->cmd, "schedule", "cosine | exp | const", "cosine");
    s->opts.bind(s->cmd, "weight_decay", "weight decay", 0.0);
    s->opts.bind(s->cmd, "momentum", "momentum", 0.9);
    s->opts.bind(s->cmd, "augment", "dihedral augmentation", true);
    s->opts.bind(s->cmd, "sigma", "eval noise sigma", 25.0);
    s->opts.bind(s->cmd, "quality", "eval jpeg quality", 10);
  }
  {
    auto s = add("gen-data", "generate a synthetic PNG dataset", cmd_gen_data);
    common(s);
    s->opts.bind(s->cmd, "data_dir", "output directory (default $MDF_CACHE/synth)", "");
    s->opts.bind(s->cmd, "count", "image count", 16);
    s->opts.bind(s->cmd, "size", "image size (square)", 128);
    s->opts.bind(s->cmd, "channels", "1 or 3", 3);
  }
  {
    auto s = add("fit-niqe", "fit the NIQE pristine model from an image directory", cmd_fit_niqe);
    common(s);
    s->opts.bind(s->cmd, "images_dir", "pristine image directory", "");
    s->opts.bind(s->cmd, "model_out", "output model JSON", "niqe_model.json");
    s->opts.bind(s->cmd, "patch", "NIQE patch size", 96);
    s->opts.bind(s->cmd, "sharpness_fraction", "patch sharpness threshold", 0.75);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    for (auto& sub : subs)
      if (sub->cmd->parsed()) {
        json cfg = sub->opts.finalize(keys_of(sub->opts.values));
        return sub->fn(cfg);
      }
    return 2;
  } catch (const ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "runtime error: %s\n", e.what());
    return 3;
  }
}
