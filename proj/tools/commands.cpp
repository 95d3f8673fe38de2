#include "commands.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <set>
#include <algorithm>
#include <iostream>

#include <json.hpp>

#include "lsld/csv.hpp"
#include "lsld/error.hpp"
#include "lsld/labels.hpp"
#include "lsld/run_manifest.hpp"

namespace lsld::cli {
namespace fs = std::filesystem;

namespace {

using Clock = std::chrono::steady_clock;

std::string num(double v) { return csv::format_real(v); }

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

fs::path manifest_for_file(const fs::path& out) {
  fs::path p = out;
  p += ".manifest.json";
  return p;
}

void note(const GlobalOptions& g, const std::string& msg) {
  if (!g.quiet) std::cerr << msg << '\n';
}

void add_prompt_settings(RunManifest& m, const PromptFlags& p) {
  m.settings["prompt_template"] = p.template_text;
  m.settings["none_token"] = p.none_token;
  m.settings["subset_cap"] = std::to_string(p.subset_cap);
}

model::ModelConfig model_config(const ModelFlags& f, std::uint64_t seed) {
  model::ModelConfig c;
  c.epochs = f.epochs;
  c.learning_rate = f.lr;
  c.lr_decay = f.lr_decay;
  c.decay_period = f.decay_period;
  c.batch_size = f.batch_size;
  c.hidden = f.hidden;
  c.attention = !f.no_attention;
  c.label_smoothing = f.smoothing;
  c.seed = seed;
  return c;
}

void add_model_settings(RunManifest& m, const ModelFlags& f) {
  m.settings["epochs"] = std::to_string(f.epochs);
  m.settings["lr"] = num(f.lr);
  m.settings["lr_decay"] = num(f.lr_decay);
  m.settings["decay_period"] = std::to_string(f.decay_period);
  m.settings["batch_size"] = std::to_string(f.batch_size);
  m.settings["hidden"] = std::to_string(f.hidden);
  m.settings["attention"] = f.no_attention ? "false" : "true";
  m.settings["label_smoothing"] = num(f.smoothing);
}

reweight::GroupScope parse_scope(const std::string& s) {
  if (s == "label") return reweight::GroupScope::label;
  if (s == "dataset") return reweight::GroupScope::dataset;
  throw ValidationError("unknown group scope '" + s + "'");
}

reweight::ScTransform parse_transform(const std::string& s) {
  if (s == "clamp-cosine") return reweight::ScTransform::clamp_cosine;
  if (s == "affine-cosine") return reweight::ScTransform::affine_cosine;
  throw ValidationError("unknown similarity transform '" + s + "'");
}

std::vector<Modality> modalities_of(const std::string& s) {
  if (s == "both") return {Modality::audio, Modality::visual};
  if (s == "audio") return {Modality::audio};
  if (s == "visual") return {Modality::visual};
  throw ValidationError("modality must be audio, visual or both");
}

/// Only the videos that have at least one row in a label file.
TrackLabels restrict_to_listed(const TrackLabels& labels, const fs::path& path) {
  std::set<std::string> listed;
  for (const auto& row : csv::read(path, {"filename", "modality", "t", "event", "value"}))
    listed.insert(row[0]);
  TrackLabels out;
  for (Modality m : {Modality::audio, Modality::visual})
    for (const auto& [id, tensor] : labels.track(m))
      if (listed.count(id)) out.track(m).emplace(id, tensor);
  return out;
}

std::vector<std::size_t> eval_videos(const FeatureBank& bank, double holdout) {
  return pipeline::split_videos(bank, holdout).test;
}

}  // namespace

int run_synth(const GlobalOptions& g, const SynthOptions& o) {
  const auto start = Clock::now();
  synth::SynthConfig c;
  c.videos = o.videos;
  c.classes = o.classes;
  c.segments = o.segments;
  c.d_audio = c.d_visual = o.dim;
  c.noise = o.noise;
  c.p_on = o.p_on;
  c.p_stay = o.p_stay;
  c.max_classes = o.max_classes;
  c.seed = g.seed;
  c.prompt_options = o.prompt.options();
  c.none_tokens = o.none_tokens;
  const auto ds = synth::gen_dataset(c, o.out);

  RunManifest m;
  m.subcommand = "synth";
  m.settings = {{"videos", std::to_string(o.videos)},  {"classes", std::to_string(o.classes)},
                {"segments", std::to_string(o.segments)}, {"dim", std::to_string(o.dim)},
                {"noise", num(o.noise)},                  {"p_on", num(o.p_on)},
                {"p_stay", num(o.p_stay)},                {"max_classes", std::to_string(o.max_classes)}};
  add_prompt_settings(m, o.prompt);
  m.seeds["synth"] = g.seed;
  m.outputs = {o.out};
  m.wall_seconds = seconds_since(start);
  // Kept outside the bank directory so the bank itself stays byte-reproducible.
  fs::path bank_dir = fs::path(o.out).lexically_normal();
  if (bank_dir.filename().empty()) bank_dir = bank_dir.parent_path();
  write_run_manifest(manifest_for_file(bank_dir), m);
  note(g, "wrote " + std::to_string(ds.bank.videos.size()) + " videos to " + o.out);
  return 0;
}

int run_denoise(const GlobalOptions& g, const DenoiseOptions& o) {
  const auto start = Clock::now();
  const auto options = o.prompt.options();
  const FeatureBank bank = load_bank(o.bank, options);
  TrackLabels labels;
  for (Modality m : modalities_of(o.modality))
    labels.track(m) = denoise::denoise_bank(bank, m, o.tau, options, g.threads);
  write_label_csv(o.out, labels, bank.vocabulary, o.dense);

  RunManifest m;
  m.subcommand = "denoise";
  m.settings = {{"modality", o.modality}, {"tau", num(o.tau)}, {"dense", o.dense ? "true" : "false"}};
  add_prompt_settings(m, o.prompt);
  m.inputs = {o.bank};
  m.outputs = {o.out};
  m.wall_seconds = seconds_since(start);
  write_run_manifest(manifest_for_file(o.out), m);
  note(g, "denoised " + std::to_string(bank.videos.size()) + " videos -> " + o.out);
  return 0;
}

namespace {

reweight::ReweightConfig reweight_config(const ReweightOptions& o, const EventVocabulary& vocab) {
  reweight::ReweightConfig c;
  c.alpha = o.alpha;
  c.beta = o.beta;
  c.scope = parse_scope(o.group_scope);
  c.transform = parse_transform(o.sc_transform);
  c.variant = pipeline::parse_variant(o.variant);
  c.stable_value = o.stable_value;
  c.overlap_quantile = o.overlap_quantile;
  for (const auto& name : o.exclude) c.excluded.push_back(vocab.index_of(name));
  return c;
}

}  // namespace

int run_reweight(const GlobalOptions& g, const ReweightOptions& o) {
  const auto start = Clock::now();
  // Reject alpha <= beta before touching any data.
  reweight::ReweightConfig probe;
  probe.alpha = o.alpha;
  probe.beta = o.beta;
  probe.stable_value = o.stable_value;
  probe.overlap_quantile = o.overlap_quantile;
  probe.validate();

  const auto options = o.prompt.options();
  const FeatureBank bank = load_bank(o.bank, options);
  const auto config = reweight_config(o, bank.vocabulary);
  TrackLabels denoised = read_label_csv(o.denoised, bank, LabelKind::denoised);
  for (const auto& v : bank.videos)
    validate_label_tensor(denoised.visual.at(v.id), v.label_set);
  auto result = reweight::reweight_bank(bank, denoised.visual, config, options);

  TrackLabels out;
  out.audio = std::move(denoised.audio);
  out.visual = std::move(result.labels);
  write_label_csv(o.out, out, bank.vocabulary);
  if (!o.stats_out.empty()) reweight::write_stats_csv(o.stats_out, result.stats, bank.vocabulary);

  RunManifest m;
  m.subcommand = "reweight";
  m.settings = {{"alpha", num(o.alpha)},
                {"beta", num(o.beta)},
                {"group_scope", o.group_scope},
                {"sc_transform", o.sc_transform},
                {"variant", o.variant},
                {"stable_value", num(o.stable_value)},
                {"overlap_quantile", num(o.overlap_quantile)}};
  add_prompt_settings(m, o.prompt);
  m.inputs = {o.bank, o.denoised};
  m.outputs = {o.out};
  if (!o.stats_out.empty()) m.outputs.push_back(o.stats_out);
  m.wall_seconds = seconds_since(start);
  write_run_manifest(manifest_for_file(o.out), m);
  note(g, "reweighted visual labels -> " + o.out);
  return 0;
}

int run_stats(const GlobalOptions& g, const StatsOptions& o) {
  const auto start = Clock::now();
  const auto options = o.prompt.options();
  const FeatureBank bank = load_bank(o.bank, options);
  const TrackLabels denoised = read_label_csv(o.denoised, bank, LabelKind::denoised);
  reweight::ReweightConfig c;
  c.scope = parse_scope(o.group_scope);
  c.transform = parse_transform(o.sc_transform);
  std::vector<reweight::GroupStats> stats;
  for (ClassIndex k = 0; k < static_cast<ClassIndex>(bank.num_classes()); ++k)
    stats.push_back(reweight::group_stats(reweight::class_similarity(bank, k, c, options), bank,
                                          denoised.visual, k, o.overlap_quantile));
  reweight::write_stats_csv(o.out, stats, bank.vocabulary);

  RunManifest m;
  m.subcommand = "stats";
  m.settings = {{"group_scope", o.group_scope},
                {"sc_transform", o.sc_transform},
                {"overlap_quantile", num(o.overlap_quantile)}};
  add_prompt_settings(m, o.prompt);
  m.inputs = {o.bank, o.denoised};
  m.outputs = {o.out};
  m.wall_seconds = seconds_since(start);
  write_run_manifest(manifest_for_file(o.out), m);
  note(g, "similarity distribution report -> " + o.out);
  return 0;
}

int run_train(const GlobalOptions& g, const TrainOptions& o) {
  const auto start = Clock::now();
  const FeatureBank bank = load_bank(o.bank);
  const auto mode = model::parse_training_mode(o.mode);
  TrackLabels labels;
  if (mode != model::TrainingMode::video) {
    if (o.labels.empty()) throw ValidationError("--labels is required for mode " + o.mode);
    labels = read_label_csv(o.labels, bank,
                            mode == model::TrainingMode::denoised ? LabelKind::denoised
                                                                  : LabelKind::reweighted);
    for (const auto& v : bank.videos)
      for (Modality m : {Modality::audio, Modality::visual}) {
        auto t = labels.track(m).at(v.id);
        if (m == Modality::audio) t.kind = LabelKind::denoised;
        validate_label_tensor(t, v.label_set);
      }
  }
  const auto split = pipeline::split_videos(bank, o.holdout);
  const auto config = model::config_for(bank, model_config(o.model, g.seed));
  const auto result = model::train(bank, mode, mode == model::TrainingMode::video ? nullptr : &labels,
                                   config, split.train);
  model::save_checkpoint(o.out, result.state);
  {
    std::string trace = "epoch,lr,loss\n";
    nlohmann::json full = nlohmann::json::array();
    for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
      const double lr = model::learning_rate_at(config, static_cast<int>(e + 1));
      trace += std::to_string(e + 1) + ',' + csv::format_real(lr) + ',' +
               csv::format_real(result.epoch_loss[e]) + '\n';
      full.push_back({{"epoch", e + 1}, {"lr", lr}, {"loss", result.epoch_loss[e]}});
    }
    write_file_atomic(fs::path(o.out) / "loss_trace.csv", trace);
    write_file_atomic(fs::path(o.out) / "loss_trace.json", full.dump(2) + '\n');
  }
  if (!o.pred_out.empty()) {
    const auto pred = model::predict(result.state, bank, split.test);
    write_label_csv(o.pred_out, pred, bank.vocabulary, /*dense=*/true);
  }

  RunManifest m;
  m.subcommand = "train";
  m.settings = {{"mode", o.mode}, {"holdout", num(o.holdout)}};
  add_model_settings(m, o.model);
  m.seeds["model"] = g.seed;
  m.inputs = {o.bank};
  if (!o.labels.empty()) m.inputs.push_back(o.labels);
  m.outputs = {o.out};
  if (!o.pred_out.empty()) m.outputs.push_back(o.pred_out);
  m.wall_seconds = seconds_since(start);
  write_run_manifest(fs::path(o.out) / "run_manifest.json", m);
  note(g, "trained " + std::to_string(result.epoch_loss.size()) + " epochs, final loss " +
              num(result.epoch_loss.back()));
  return 0;
}

int run_predict(const GlobalOptions& g, const PredictOptions& o) {
  const auto start = Clock::now();
  const FeatureBank bank = load_bank(o.bank);
  const auto state = model::load_checkpoint(o.model);
  const auto pred = model::predict(state, bank, eval_videos(bank, o.holdout));
  write_label_csv(o.out, pred, bank.vocabulary, /*dense=*/true);

  RunManifest m;
  m.subcommand = "predict";
  m.settings = {{"holdout", num(o.holdout)}};
  m.inputs = {o.bank, o.model};
  m.outputs = {o.out};
  m.wall_seconds = seconds_since(start);
  write_run_manifest(manifest_for_file(o.out), m);
  note(g, "predictions -> " + o.out);
  return 0;
}

int run_eval(const GlobalOptions& g, const EvalOptions& o) {
  const auto start = Clock::now();
  const FeatureBank bank = load_bank(o.bank);
  TrackLabels pred = read_label_csv(o.pred, bank, LabelKind::prediction);
  TrackLabels gt = read_annotations(o.gt, bank);
  if (!o.all_videos) {
    pred = restrict_to_listed(pred, o.pred);
    TrackLabels kept;
    for (Modality m : {Modality::audio, Modality::visual})
      for (const auto& [id, tensor] : pred.track(m)) kept.track(m).emplace(id, gt.track(m).at(id));
    gt = std::move(kept);
  } else {
    pred = restrict_to_listed(pred, o.pred);
  }
  const auto report = metrics::report(pred, gt, o.threshold, o.miou);
  write_file_atomic(o.report, metrics::report_json(report) + "\n");

  RunManifest m;
  m.subcommand = "eval";
  m.settings = {{"threshold", num(o.threshold)},
                {"miou", num(o.miou)},
                {"all_videos", o.all_videos ? "true" : "false"}};
  m.inputs = {o.pred, o.gt, o.bank};
  m.outputs = {o.report};
  m.wall_seconds = seconds_since(start);
  write_run_manifest(manifest_for_file(o.report), m);
  if (!g.quiet) {
    std::cout << "segment-level  A " << num(report.segment.audio) << "  V "
              << num(report.segment.visual) << "  AV " << num(report.segment.audio_visual)
              << "  Type@AV " << num(report.segment.type_av) << "  Event@AV "
              << num(report.segment.event_av) << '\n';
    std::cout << "event-level    A " << num(report.event.audio) << "  V "
              << num(report.event.visual) << "  AV " << num(report.event.audio_visual)
              << "  Type@AV " << num(report.event.type_av) << "  Event@AV "
              << num(report.event.event_av) << '\n';
  }
  return 0;
}

int run_gradcheck(const GlobalOptions& g, const GradcheckOptions& o) {
  model::ModelConfig c;
  c.d_audio = c.d_visual = o.dim;
  c.hidden = o.hidden;
  c.num_classes = o.classes;
  c.seed = g.seed;
  const auto r = model::grad_check(c, o.segments, !o.video_level);
  std::cout << "checked " << r.parameters_checked << " parameters, max relative error "
            << r.max_relative_error << " (" << r.worst_parameter << ")\n";
  if (r.max_relative_error > o.tolerance) {
    std::cerr << "gradient check failed: tolerance " << o.tolerance << '\n';
    return 4;
  }
  return 0;
}

int run_ablate(const GlobalOptions& g, const AblateOptions& o) {
  const auto start = Clock::now();
  pipeline::PipelineConfig c;
  c.temperature = o.tau;
  c.prompt = o.prompt.options();
  c.reweight.stable_value = o.stable_value;
  c.model = model_config(o.model, g.seed);
  c.threshold = o.threshold;
  c.miou = o.miou;
  c.holdout = o.holdout;
  c.threads = g.threads;
  pipeline::AblationGrid grid;
  grid.alphas = o.alphas;
  grid.betas = o.betas;
  grid.none_tokens = o.none_tokens;
  grid.variants.clear();
  for (const auto& v : o.variants) grid.variants.push_back(pipeline::parse_variant(v));

  // Every none token in the grid must be loadable.
  FeatureBank bank;
  for (const auto& token : o.none_tokens) {
    auto opts = c.prompt;
    opts.none_token = token;
    bank = load_bank(o.bank, opts);
  }
  const fs::path gt_path = o.gt.empty() ? fs::path(o.bank) / BankLayout::annotations : fs::path(o.gt);
  const TrackLabels gt = read_annotations(gt_path, bank);
  fs::create_directories(o.out);
  const auto rows = pipeline::ablate(bank, gt, grid, c, o.out);
  pipeline::write_ablation_csv(fs::path(o.out) / "ablation.csv", rows);

  RunManifest m;
  m.subcommand = "ablate";
  m.settings = {{"tau", num(o.tau)}, {"holdout", num(o.holdout)}, {"cells", std::to_string(rows.size())}};
  add_prompt_settings(m, o.prompt);
  add_model_settings(m, o.model);
  m.seeds["model"] = g.seed;
  m.inputs = {o.bank, gt_path.string()};
  m.outputs = {(fs::path(o.out) / "ablation.csv").string()};
  m.wall_seconds = seconds_since(start);
  write_run_manifest(fs::path(o.out) / "run_manifest.json", m);
  note(g, "ablation with " + std::to_string(rows.size()) + " cells -> " +
              (fs::path(o.out) / "ablation.csv").string());
  return 0;
}

int run_pipeline(const GlobalOptions& g, const PipelineOptions& o) {
  const fs::path work = o.work;
  const fs::path bank = work / "bank";
  const fs::path denoised = work / "denoised.csv";
  const fs::path reweighted = work / "reweighted.csv";
  const fs::path stats = work / "stats.csv";
  const fs::path model_dir = work / "model";
  const fs::path pred = work / "predictions.csv";
  const fs::path report = work / "report.json";

  const auto mode = model::parse_training_mode(o.mode);
  const fs::path labels = mode == model::TrainingMode::reweighted ? reweighted : denoised;

  struct Stage {
    std::string name;
    fs::path manifest;
    std::function<int()> run;
  };
  std::vector<Stage> stages;
  stages.push_back({"synth", manifest_for_file(bank), [&] {
                      SynthOptions s = o.synth;
                      s.out = bank.string();
                      return run_synth(g, s);
                    }});
  stages.push_back({"denoise", manifest_for_file(denoised), [&] {
                      DenoiseOptions d;
                      d.bank = bank.string();
                      d.tau = o.tau;
                      d.out = denoised.string();
                      return run_denoise(g, d);
                    }});
  stages.push_back({"reweight", manifest_for_file(reweighted), [&] {
                      ReweightOptions r;
                      r.bank = bank.string();
                      r.denoised = denoised.string();
                      r.alpha = o.alpha;
                      r.beta = o.beta;
                      r.out = reweighted.string();
                      r.stats_out = stats.string();
                      return run_reweight(g, r);
                    }});
  stages.push_back({"train", model_dir / "run_manifest.json", [&] {
                      TrainOptions t;
                      t.bank = bank.string();
                      t.labels = mode == model::TrainingMode::video ? "" : labels.string();
                      t.mode = o.mode;
                      t.out = model_dir.string();
                      t.holdout = o.holdout;
                      t.model = o.model;
                      return run_train(g, t);
                    }});
  stages.push_back({"predict", manifest_for_file(pred), [&] {
                      PredictOptions p;
                      p.bank = bank.string();
                      p.model = model_dir.string();
                      p.out = pred.string();
                      p.holdout = o.holdout;
                      return run_predict(g, p);
                    }});
  stages.push_back({"eval", manifest_for_file(report), [&] {
                      EvalOptions e;
                      e.pred = pred.string();
                      e.gt = (bank / BankLayout::annotations).string();
                      e.bank = bank.string();
                      e.threshold = o.threshold;
                      e.miou = o.miou;
                      e.report = report.string();
                      return run_eval(g, e);
                    }});

  std::size_t first = 0;
  if (!o.from.empty()) {
    while (first < stages.size() && stages[first].name != o.from) ++first;
    if (first == stages.size()) throw ValidationError("unknown stage '" + o.from + "'");
  }
  if (o.dry_run) {
    for (std::size_t i = first; i < stages.size(); ++i)
      std::cout << i + 1 << ". " << stages[i].name << " -> manifest " << stages[i].manifest.string()
                << '\n';
    return 0;
  }
  fs::create_directories(work);
  for (std::size_t i = first; i < stages.size(); ++i) {
    const auto& stage = stages[i];
    int code = 0;
    try {
      code = stage.run();
    } catch (const Error& e) {
      const std::string msg = "stage '" + stage.name + "' failed (manifest " +
                              stage.manifest.string() + "): " + e.what();
      switch (e.kind()) {
        case ErrorKind::validation: throw ValidationError(msg);
        case ErrorKind::format: throw FormatError(msg);
        case ErrorKind::numeric: throw NumericError(msg);
      }
    }
    if (code != 0) {
      std::cerr << "stage '" << stage.name << "' exited with " << code << '\n';
      return code;
    }
  }
  note(g, "pipeline complete: " + report.string());
  return 0;
}

}  // namespace lsld::cli
