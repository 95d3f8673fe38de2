#include "lsld/pipeline.hpp"

#include <atomic>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <thread>

#include "lsld/csv.hpp"
#include "lsld/error.hpp"
#include "lsld/run_manifest.hpp"

namespace lsld::pipeline {
namespace fs = std::filesystem;

Split split_videos(const FeatureBank& bank, double holdout) {
  if (!(holdout >= 0.0 && holdout < 1.0))
    throw ValidationError("holdout fraction must lie in [0, 1)");
  const std::size_t n = bank.videos.size();
  const auto held = static_cast<std::size_t>(static_cast<double>(n) * holdout);
  Split s;
  for (std::size_t i = 0; i < n; ++i) (i < n - held ? s.train : s.test).push_back(i);
  if (held == 0) s.test = s.train;
  if (s.train.empty()) throw ValidationError("no training videos left after the holdout");
  return s;
}

std::string_view to_string(Condition c) {
  switch (c) {
    case Condition::baseline: return "baseline";
    case Condition::denoise: return "denoise";
    case Condition::denoise_reweight: return "denoise+reweight";
  }
  return "?";
}

std::string_view to_string(reweight::Variant v) {
  switch (v) {
    case reweight::Variant::both: return "both";
    case reweight::Variant::with_only: return "with-only";
    case reweight::Variant::without_only: return "without-only";
    case reweight::Variant::stable: return "stable";
  }
  return "?";
}

reweight::Variant parse_variant(std::string_view text) {
  if (text == "both") return reweight::Variant::both;
  if (text == "with-only") return reweight::Variant::with_only;
  if (text == "without-only") return reweight::Variant::without_only;
  if (text == "stable") return reweight::Variant::stable;
  throw ValidationError("unknown reweight variant '" + std::string(text) + "'");
}

TrackLabels denoise_both(const FeatureBank& bank, const PipelineConfig& config) {
  TrackLabels out;
  for (Modality m : {Modality::audio, Modality::visual})
    out.track(m) = denoise::denoise_bank(bank, m, config.temperature, config.prompt,
                                         config.threads);
  return out;
}

std::string CellResult::name() const {
  std::string n(to_string(condition));
  for (auto& ch : n)
    if (ch == '+') ch = '_';
  if (condition == Condition::baseline) return n;
  n += "_" + none_token;
  if (condition == Condition::denoise) return n;
  n += "_" + std::string(to_string(variant));
  if (variant != reweight::Variant::stable) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "_a%g_b%g", alpha, beta);
    n += buf;
  }
  return n;
}

CellResult run_condition(const FeatureBank& bank, const TrackLabels& ground_truth,
                         const Split& split, Condition condition,
                         const PipelineConfig& config) {
  CellResult cell;
  cell.condition = condition;
  cell.none_token = config.prompt.none_token;
  cell.alpha = config.reweight.alpha;
  cell.beta = config.reweight.beta;
  cell.variant = config.reweight.variant;

  const model::ModelConfig mc = model::config_for(bank, config.model);
  model::TrainResult trained;
  if (condition == Condition::baseline) {
    trained = model::train(bank, model::TrainingMode::video, nullptr, mc, split.train);
  } else {
    TrackLabels labels = denoise_both(bank, config);
    model::TrainingMode mode = model::TrainingMode::denoised;
    if (condition == Condition::denoise_reweight) {
      labels.visual = reweight::reweight_bank(bank, labels.visual, config.reweight,
                                              config.prompt)
                          .labels;
      mode = model::TrainingMode::reweighted;
    }
    trained = model::train(bank, mode, &labels, mc, split.train);
  }
  cell.epoch_loss = trained.epoch_loss;

  const TrackLabels pred = model::predict(trained.state, bank, split.test);
  TrackLabels gt;
  for (std::size_t i : split.test) {
    const auto& id = bank.videos[i].id;
    for (Modality m : {Modality::audio, Modality::visual}) {
      auto it = ground_truth.track(m).find(id);
      if (it == ground_truth.track(m).end())
        throw ValidationError("no ground truth for video '" + id + "'");
      gt.track(m).emplace(id, it->second);
    }
  }
  cell.report = metrics::report(pred, gt, config.threshold, config.miou);
  return cell;
}

namespace {

struct CellSpec {
  Condition condition;
  std::string none_token;
  double alpha, beta;
  reweight::Variant variant;
};

std::vector<CellSpec> expand(const AblationGrid& grid, const PipelineConfig& base) {
  std::vector<CellSpec> cells;
  cells.push_back({Condition::baseline, base.prompt.none_token, base.reweight.alpha,
                   base.reweight.beta, base.reweight.variant});
  for (const auto& token : grid.none_tokens)
    cells.push_back({Condition::denoise, token, base.reweight.alpha, base.reweight.beta,
                     base.reweight.variant});
  for (const auto& token : grid.none_tokens) {
    for (auto variant : grid.variants) {
      if (variant == reweight::Variant::stable) {
        cells.push_back({Condition::denoise_reweight, token, base.reweight.alpha,
                         base.reweight.beta, variant});
        continue;
      }
      for (double a : grid.alphas)
        for (double b : grid.betas)
          if (a > b) cells.push_back({Condition::denoise_reweight, token, a, b, variant});
    }
  }
  return cells;
}

std::map<std::string, std::string> settings_of(const CellSpec& s, const PipelineConfig& c) {
  auto num = [](double v) { return csv::format_real(v); };
  return {{"condition", std::string(to_string(s.condition))},
          {"none_token", s.none_token},
          {"alpha", num(s.alpha)},
          {"beta", num(s.beta)},
          {"variant", std::string(to_string(s.variant))},
          {"stable_value", num(c.reweight.stable_value)},
          {"temperature", num(c.temperature)},
          {"prompt_template", c.prompt.template_text},
          {"epochs", std::to_string(c.model.epochs)},
          {"learning_rate", num(c.model.learning_rate)},
          {"batch_size", std::to_string(c.model.batch_size)},
          {"hidden", std::to_string(c.model.hidden)},
          {"attention", c.model.attention ? "true" : "false"},
          {"label_smoothing", num(c.model.label_smoothing)},
          {"threshold", num(c.threshold)},
          {"miou", num(c.miou)},
          {"holdout", num(c.holdout)}};
}

}  // namespace

std::vector<CellResult> ablate(const FeatureBank& bank, const TrackLabels& ground_truth,
                               const AblationGrid& grid, const PipelineConfig& config,
                               const fs::path& out_dir) {
  config.reweight.validate();
  const Split split = split_videos(bank, config.holdout);
  const auto specs = expand(grid, config);
  std::vector<CellResult> results(specs.size());
  std::vector<std::exception_ptr> errors(specs.size());

  auto run = [&](std::size_t i) {
    const auto start = std::chrono::steady_clock::now();
    const CellSpec& s = specs[i];
    PipelineConfig c = config;
    c.threads = 1;
    c.prompt.none_token = s.none_token;
    c.reweight.alpha = s.alpha;
    c.reweight.beta = s.beta;
    c.reweight.variant = s.variant;
    results[i] = run_condition(bank, ground_truth, split, s.condition, c);
    if (!out_dir.empty()) {
      const fs::path rel = fs::path("cells") / results[i].name() / "run_manifest.json";
      fs::create_directories((out_dir / rel).parent_path());
      RunManifest m;
      m.subcommand = "ablate";
      m.settings = settings_of(s, c);
      m.seeds["model"] = c.model.seed;
      m.outputs.push_back("ablation.csv");
      m.wall_seconds =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      write_run_manifest(out_dir / rel, m);
      results[i].manifest = rel.generic_string();
    }
  };

  const unsigned workers = std::max(1u, std::min<unsigned>(config.threads,
                                                           static_cast<unsigned>(specs.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i; (i = next.fetch_add(1)) < specs.size();) {
      try {
        run(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return results;
}

void write_ablation_csv(const fs::path& path, const std::vector<CellResult>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "condition,none_token,alpha,beta,variant,"
         "seg_a,seg_v,seg_av,seg_type_av,seg_event_av,"
         "evt_a,evt_v,evt_av,evt_type_av,evt_event_av,manifest\n";
  for (const auto& r : rows) {
    const bool reweighted = r.condition == Condition::denoise_reweight;
    const bool weighted = reweighted && r.variant != reweight::Variant::stable;
    out << to_string(r.condition) << ','
        << (r.condition == Condition::baseline ? "" : csv::escape(r.none_token)) << ','
        << (weighted ? csv::format_real(r.alpha) : "") << ','
        << (weighted ? csv::format_real(r.beta) : "") << ','
        << (reweighted ? std::string(to_string(r.variant)) : "");
    for (const auto* s : {&r.report.segment, &r.report.event})
      for (double v : {s->audio, s->visual, s->audio_visual, s->type_av, s->event_av})
        out << ',' << csv::format_real(v);
    out << ',' << csv::escape(r.manifest) << '\n';
  }
  if (!out) throw FormatError("write failed for " + path.string());
}

}  // namespace lsld::pipeline
