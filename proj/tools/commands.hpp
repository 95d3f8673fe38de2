#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lsld/pipeline.hpp"
#include "lsld/synth.hpp"

namespace lsld::cli {

struct GlobalOptions {
  std::uint64_t seed = 0;
  unsigned threads = 1;
  bool quiet = false;
  std::string config;
};

struct PromptFlags {
  std::string template_text = "{}";
  std::string none_token = "other";
  std::size_t subset_cap = prompts::kDefaultSubsetCap;

  prompts::PromptOptions options() const { return {template_text, none_token, subset_cap}; }
};

struct SynthOptions {
  std::string out;
  int videos = 200;
  int classes = 8;
  int segments = 10;
  int dim = 32;
  double noise = 0.1;
  double p_on = 0.1;
  double p_stay = 0.8;
  int max_classes = 3;
  std::vector<std::string> none_tokens = {"other", "none"};
  PromptFlags prompt;
};

struct DenoiseOptions {
  std::string bank;
  std::string modality = "both";
  double tau = denoise::kDefaultTemperature;
  std::string out;
  bool dense = false;
  PromptFlags prompt;
};

struct ReweightOptions {
  std::string bank;
  std::string denoised;
  double alpha = 4.0;
  double beta = 0.4;
  std::string out;
  std::string stats_out;
  std::string group_scope = "label";
  std::string sc_transform = "clamp-cosine";
  std::string variant = "both";
  double stable_value = 0.5;
  double overlap_quantile = 0.0;
  std::vector<std::string> exclude;
  PromptFlags prompt;
};

struct StatsOptions {
  std::string bank;
  std::string denoised;
  std::string out;
  std::string group_scope = "label";
  std::string sc_transform = "clamp-cosine";
  double overlap_quantile = 0.0;
  PromptFlags prompt;
};

struct ModelFlags {
  int epochs = 20;
  double lr = 2e-4;
  double lr_decay = 0.25;
  int decay_period = 6;
  int batch_size = 32;
  int hidden = 32;
  bool no_attention = false;
  double smoothing = 0.1;
};

struct TrainOptions {
  std::string bank;
  std::string labels;
  std::string mode = "reweighted";
  std::string out;
  std::string pred_out;
  double holdout = 0.25;
  ModelFlags model;
};

struct PredictOptions {
  std::string bank;
  std::string model;
  std::string out;
  double holdout = 0.25;
};

struct EvalOptions {
  std::string pred;
  std::string gt;
  std::string bank;
  double threshold = 0.5;
  double miou = 0.5;
  std::string report;
  bool all_videos = false;
};

struct GradcheckOptions {
  double tolerance = 1e-3;
  int dim = 8;
  int hidden = 8;
  int segments = 4;
  int classes = 3;
  bool video_level = false;
};

struct AblateOptions {
  std::string bank;
  std::string gt;
  std::string out;
  std::vector<double> alphas = {4.0};
  std::vector<double> betas = {0.4};
  std::vector<std::string> none_tokens = {"other", "none"};
  std::vector<std::string> variants = {"both", "with-only", "without-only", "stable"};
  double stable_value = 0.5;
  double tau = denoise::kDefaultTemperature;
  double holdout = 0.25;
  double threshold = 0.5;
  double miou = 0.5;
  PromptFlags prompt;
  ModelFlags model;
};

struct PipelineOptions {
  std::string work;
  bool dry_run = false;
  /// Resume at this stage, reusing earlier intermediates in the work dir.
  std::string from;
  SynthOptions synth;
  double tau = denoise::kDefaultTemperature;
  double alpha = 4.0;
  double beta = 0.4;
  std::string mode = "reweighted";
  double holdout = 0.25;
  double threshold = 0.5;
  double miou = 0.5;
  ModelFlags model;
};

int run_synth(const GlobalOptions&, const SynthOptions&);
int run_denoise(const GlobalOptions&, const DenoiseOptions&);
int run_reweight(const GlobalOptions&, const ReweightOptions&);
int run_stats(const GlobalOptions&, const StatsOptions&);
int run_train(const GlobalOptions&, const TrainOptions&);
int run_predict(const GlobalOptions&, const PredictOptions&);
int run_eval(const GlobalOptions&, const EvalOptions&);
int run_gradcheck(const GlobalOptions&, const GradcheckOptions&);
int run_ablate(const GlobalOptions&, const AblateOptions&);
int run_pipeline(const GlobalOptions&, const PipelineOptions&);

}  // namespace lsld::cli
