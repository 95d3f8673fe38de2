// lsld: language-guided segment-level label denoising toolkit.
//
// Exit codes: 0 success, 2 validation error, 3 data/format error,
// 4 numeric failure.

#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "commands.hpp"
#include "lsld/error.hpp"

namespace {

using namespace lsld::cli;

constexpr int kExitValidation = 2;
constexpr int kExitFormat = 3;
constexpr int kExitNumeric = 4;

void add_prompt_flags(CLI::App* cmd, PromptFlags& p) {
  cmd->add_option("--prompt-template", p.template_text,
                  "Prompt template; {} is replaced by the joined class names")
      ->capture_default_str();
  cmd->add_option("--none-token", p.none_token, "Prompt for the empty event subset")
      ->capture_default_str();
  cmd->add_option("--subset-cap", p.subset_cap, "Largest weak-label set to enumerate")
      ->capture_default_str();
}

void add_model_flags(CLI::App* cmd, ModelFlags& m) {
  cmd->add_option("--epochs", m.epochs)->capture_default_str();
  cmd->add_option("--lr", m.lr, "Initial Adam learning rate")->capture_default_str();
  cmd->add_option("--lr-decay", m.lr_decay, "Learning-rate factor per decay period")
      ->capture_default_str();
  cmd->add_option("--decay-period", m.decay_period, "Epochs per learning-rate drop")
      ->capture_default_str();
  cmd->add_option("--batch-size", m.batch_size)->capture_default_str();
  cmd->add_option("--hidden", m.hidden, "Hidden width")->capture_default_str();
  cmd->add_flag("--no-attention", m.no_attention, "Disable the self/cross-attention layers");
  cmd->add_option("--smoothing", m.smoothing, "Label smoothing of video-level targets")
      ->capture_default_str();
}

/// Values from --config fill every option not given on the command line.
/// Keys are long option names without dashes, either at the top level or in
/// an object named after the subcommand (which wins).
void apply_config(CLI::App& app, CLI::App* sub, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw lsld::ValidationError("cannot open config file " + path);
  nlohmann::json cfg;
  try {
    cfg = nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw lsld::ValidationError("config file " + path + ": " + e.what());
  }
  if (!cfg.is_object()) throw lsld::ValidationError("config file must hold a JSON object");

  auto lookup = [&](const std::string& key) -> const nlohmann::json* {
    if (sub && cfg.contains(sub->get_name()) && cfg[sub->get_name()].is_object() &&
        cfg[sub->get_name()].contains(key))
      return &cfg[sub->get_name()][key];
    if (cfg.contains(key) && !(sub && key == sub->get_name())) return &cfg[key];
    return nullptr;
  };
  auto as_string = [](const nlohmann::json& v) {
    return v.is_string() ? v.get<std::string>() : v.dump();
  };
  for (CLI::App* scope : {&app, sub}) {
    if (!scope) continue;
    for (CLI::Option* opt : scope->get_options()) {
      const std::string& name = opt->get_single_name();
      if (opt->count() > 0 || name == "help" || name == "config") continue;
      const nlohmann::json* value = lookup(name);
      if (!value) {
        std::string underscored = name;
        for (auto& ch : underscored)
          if (ch == '-') ch = '_';
        value = lookup(underscored);
      }
      if (!value) continue;
      if (value->is_array()) {
        for (const auto& item : *value) opt->add_result(as_string(item));
      } else {
        opt->add_result(as_string(*value));
      }
      opt->run_callback();
    }
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Language-guided segment-level label denoising for audio-visual video parsing"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(LSLD_VERSION));

  GlobalOptions global;
  app.add_option("--seed", global.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", global.threads, "Worker threads")->capture_default_str();
  app.add_flag("--quiet", global.quiet, "Suppress progress messages");
  app.add_option("--config", global.config, "JSON file overriding defaults");

  SynthOptions synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic feature bank");
  synth_cmd->add_option("--out", synth.out, "Output bank directory")->required();
  synth_cmd->add_option("--videos", synth.videos)->capture_default_str();
  synth_cmd->add_option("--classes", synth.classes)->capture_default_str();
  synth_cmd->add_option("--segments", synth.segments)->capture_default_str();
  synth_cmd->add_option("--dim", synth.dim, "Embedding dim of both modalities")->capture_default_str();
  synth_cmd->add_option("--noise", synth.noise, "Per-coordinate noise sigma")->capture_default_str();
  synth_cmd->add_option("--p-on", synth.p_on, "Event birth probability")->capture_default_str();
  synth_cmd->add_option("--p-stay", synth.p_stay, "Event continuation probability")
      ->capture_default_str();
  synth_cmd->add_option("--max-classes", synth.max_classes, "Candidate classes per video")
      ->capture_default_str();
  synth_cmd->add_option("--none-tokens", synth.none_tokens, "Prompt rows for the empty subset")
      ->capture_default_str();
  add_prompt_flags(synth_cmd, synth.prompt);

  DenoiseOptions dn;
  auto* denoise_cmd = app.add_subcommand("denoise", "Assign segment labels from the closest prompt");
  denoise_cmd->add_option("--bank", dn.bank)->required();
  denoise_cmd->add_option("--modality", dn.modality)
      ->check(CLI::IsMember({"audio", "visual", "both"}))
      ->capture_default_str();
  denoise_cmd->add_option("--tau", dn.tau, "Softmax temperature")->capture_default_str();
  denoise_cmd->add_option("--out", dn.out)->required();
  denoise_cmd->add_flag("--dense", dn.dense, "Write every cell, not only positives");
  add_prompt_flags(denoise_cmd, dn.prompt);

  ReweightOptions rw;
  auto* reweight_cmd = app.add_subcommand("reweight", "Soften unreliable visual segment labels");
  reweight_cmd->add_option("--bank", rw.bank)->required();
  reweight_cmd->add_option("--denoised", rw.denoised)->required();
  reweight_cmd->add_option("--alpha", rw.alpha)->capture_default_str();
  reweight_cmd->add_option("--beta", rw.beta)->capture_default_str();
  reweight_cmd->add_option("--out", rw.out)->required();
  reweight_cmd->add_option("--stats-out", rw.stats_out, "Per-class similarity statistics CSV");
  reweight_cmd->add_option("--group-scope", rw.group_scope)
      ->check(CLI::IsMember({"label", "dataset"}))
      ->capture_default_str();
  reweight_cmd->add_option("--sc-transform", rw.sc_transform)
      ->check(CLI::IsMember({"clamp-cosine", "affine-cosine"}))
      ->capture_default_str();
  reweight_cmd->add_option("--variant", rw.variant)
      ->check(CLI::IsMember({"both", "with-only", "without-only", "stable"}))
      ->capture_default_str();
  reweight_cmd->add_option("--stable-value", rw.stable_value)->capture_default_str();
  reweight_cmd->add_option("--overlap-quantile", rw.overlap_quantile)->capture_default_str();
  reweight_cmd->add_option("--exclude", rw.exclude, "Classes never reweighted");
  add_prompt_flags(reweight_cmd, rw.prompt);

  StatsOptions st;
  auto* stats_cmd = app.add_subcommand("stats", "Per-class similarity distributions");
  stats_cmd->add_option("--bank", st.bank)->required();
  stats_cmd->add_option("--denoised", st.denoised)->required();
  stats_cmd->add_option("--out", st.out)->required();
  stats_cmd->add_option("--group-scope", st.group_scope)
      ->check(CLI::IsMember({"label", "dataset"}))
      ->capture_default_str();
  stats_cmd->add_option("--sc-transform", st.sc_transform)
      ->check(CLI::IsMember({"clamp-cosine", "affine-cosine"}))
      ->capture_default_str();
  stats_cmd->add_option("--overlap-quantile", st.overlap_quantile)->capture_default_str();
  add_prompt_flags(stats_cmd, st.prompt);

  TrainOptions tr;
  auto* train_cmd = app.add_subcommand("train", "Train the attentive MMIL classifier");
  train_cmd->add_option("--bank", tr.bank)->required();
  train_cmd->add_option("--labels", tr.labels, "Segment label CSV (denoised or reweighted)");
  train_cmd->add_option("--mode", tr.mode)
      ->check(CLI::IsMember({"video", "denoised", "reweighted"}))
      ->capture_default_str();
  train_cmd->add_option("--out", tr.out, "Checkpoint directory")->required();
  train_cmd->add_option("--pred-out", tr.pred_out, "Also write held-out predictions");
  train_cmd->add_option("--holdout", tr.holdout, "Fraction of videos held out")
      ->capture_default_str();
  add_model_flags(train_cmd, tr.model);

  PredictOptions pr;
  auto* predict_cmd = app.add_subcommand("predict", "Segment probabilities from a checkpoint");
  predict_cmd->add_option("--bank", pr.bank)->required();
  predict_cmd->add_option("--model", pr.model)->required();
  predict_cmd->add_option("--out", pr.out)->required();
  predict_cmd->add_option("--holdout", pr.holdout, "Predict the last fraction of videos (0: all)")
      ->capture_default_str();

  EvalOptions ev;
  auto* eval_cmd = app.add_subcommand("eval", "Segment- and event-level F-scores");
  eval_cmd->add_option("--pred", ev.pred)->required();
  eval_cmd->add_option("--gt", ev.gt, "Ground-truth annotations CSV")->required();
  eval_cmd->add_option("--bank", ev.bank, "Bank providing the vocabulary and segment counts")
      ->required();
  eval_cmd->add_option("--threshold", ev.threshold)->capture_default_str();
  eval_cmd->add_option("--miou", ev.miou)->capture_default_str();
  eval_cmd->add_option("--report", ev.report)->required();
  eval_cmd->add_flag("--all-videos", ev.all_videos,
                     "Require predictions for every bank video instead of scoring listed ones");

  GradcheckOptions gc;
  auto* grad_cmd = app.add_subcommand("gradcheck", "Compare analytic and numerical gradients");
  grad_cmd->add_option("--tol", gc.tolerance)->capture_default_str();
  grad_cmd->add_option("--dim", gc.dim)->capture_default_str();
  grad_cmd->add_option("--hidden", gc.hidden)->capture_default_str();
  grad_cmd->add_option("--segments", gc.segments)->capture_default_str();
  grad_cmd->add_option("--classes", gc.classes)->capture_default_str();
  grad_cmd->add_flag("--video-level", gc.video_level, "Check the video-level loss instead");

  AblateOptions ab;
  auto* ablate_cmd = app.add_subcommand("ablate", "Run the denoise/reweight ablation grid");
  ablate_cmd->add_option("--bank", ab.bank)->required();
  ablate_cmd->add_option("--gt", ab.gt, "Annotations CSV (default: the bank's)");
  ablate_cmd->add_option("--out", ab.out, "Output directory")->required();
  ablate_cmd->add_option("--alphas", ab.alphas)->capture_default_str();
  ablate_cmd->add_option("--betas", ab.betas)->capture_default_str();
  ablate_cmd->add_option("--none-tokens", ab.none_tokens)->capture_default_str();
  ablate_cmd->add_option("--variants", ab.variants)
      ->check(CLI::IsMember({"both", "with-only", "without-only", "stable"}))
      ->capture_default_str();
  ablate_cmd->add_option("--stable-value", ab.stable_value)->capture_default_str();
  ablate_cmd->add_option("--tau", ab.tau)->capture_default_str();
  ablate_cmd->add_option("--holdout", ab.holdout)->capture_default_str();
  ablate_cmd->add_option("--threshold", ab.threshold)->capture_default_str();
  ablate_cmd->add_option("--miou", ab.miou)->capture_default_str();
  add_prompt_flags(ablate_cmd, ab.prompt);
  add_model_flags(ablate_cmd, ab.model);

  PipelineOptions pl;
  auto* pipeline_cmd =
      app.add_subcommand("pipeline", "synth -> denoise -> reweight -> train -> predict -> eval");
  pipeline_cmd->add_option("--work", pl.work, "Working directory")->required();
  pipeline_cmd->add_flag("--dry-run", pl.dry_run, "Print the stage plan only");
  pipeline_cmd->add_option("--from", pl.from, "Resume at a stage, reusing earlier outputs")
      ->check(CLI::IsMember({"synth", "denoise", "reweight", "train", "predict", "eval"}));
  pipeline_cmd->add_option("--videos", pl.synth.videos)->capture_default_str();
  pipeline_cmd->add_option("--classes", pl.synth.classes)->capture_default_str();
  pipeline_cmd->add_option("--segments", pl.synth.segments)->capture_default_str();
  pipeline_cmd->add_option("--dim", pl.synth.dim)->capture_default_str();
  pipeline_cmd->add_option("--noise", pl.synth.noise)->capture_default_str();
  pipeline_cmd->add_option("--tau", pl.tau)->capture_default_str();
  pipeline_cmd->add_option("--alpha", pl.alpha)->capture_default_str();
  pipeline_cmd->add_option("--beta", pl.beta)->capture_default_str();
  pipeline_cmd->add_option("--mode", pl.mode)
      ->check(CLI::IsMember({"video", "denoised", "reweighted"}))
      ->capture_default_str();
  pipeline_cmd->add_option("--holdout", pl.holdout)->capture_default_str();
  pipeline_cmd->add_option("--threshold", pl.threshold)->capture_default_str();
  pipeline_cmd->add_option("--miou", pl.miou)->capture_default_str();
  add_model_flags(pipeline_cmd, pl.model);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitValidation;
  }

  try {
    CLI::App* sub = app.get_subcommands().front();
    if (!global.config.empty()) apply_config(app, sub, global.config);
    if (sub == synth_cmd) return run_synth(global, synth);
    if (sub == denoise_cmd) return run_denoise(global, dn);
    if (sub == reweight_cmd) return run_reweight(global, rw);
    if (sub == stats_cmd) return run_stats(global, st);
    if (sub == train_cmd) return run_train(global, tr);
    if (sub == predict_cmd) return run_predict(global, pr);
    if (sub == eval_cmd) return run_eval(global, ev);
    if (sub == grad_cmd) return run_gradcheck(global, gc);
    if (sub == ablate_cmd) return run_ablate(global, ab);
    if (sub == pipeline_cmd) return run_pipeline(global, pl);
  } catch (const lsld::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    switch (e.kind()) {
      case lsld::ErrorKind::validation: return kExitValidation;
      case lsld::ErrorKind::format: return kExitFormat;
      case lsld::ErrorKind::numeric: return kExitNumeric;
    }
  } catch (const CLI::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitFormat;
  }
  return 1;
}
