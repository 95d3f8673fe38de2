#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "lsld/bank.hpp"
#include "lsld/denoise.hpp"
#include "lsld/labels.hpp"
#include "lsld/metrics.hpp"
#include "lsld/model.hpp"
#include "lsld/reweight.hpp"
#include "lsld/train.hpp"

namespace lsld::pipeline {

/// Training and evaluation halves of a bank. The last
/// floor(n * holdout) videos are held out for evaluation; with holdout 0 both
/// halves are the whole bank.
struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};
Split split_videos(const FeatureBank& bank, double holdout);

enum class Condition { baseline, denoise, denoise_reweight };
std::string_view to_string(Condition c);
std::string_view to_string(reweight::Variant v);
reweight::Variant parse_variant(std::string_view text);

struct PipelineConfig {
  double temperature = denoise::kDefaultTemperature;
  prompts::PromptOptions prompt;
  reweight::ReweightConfig reweight;
  model::ModelConfig model;
  double threshold = 0.5;
  double miou = 0.5;
  double holdout = 0.25;
  unsigned threads = 1;
};

/// Denoised labels for both tracks of every bank video.
TrackLabels denoise_both(const FeatureBank& bank, const PipelineConfig& config);

struct CellResult {
  Condition condition = Condition::baseline;
  std::string none_token;
  double alpha = 0.0;
  double beta = 0.0;
  reweight::Variant variant = reweight::Variant::both;
  metrics::ParsingReport report;
  std::vector<double> epoch_loss;
  /// Relative path of the cell's run manifest, empty when none was written.
  std::string manifest;

  std::string name() const;
};

/// Trains one condition on the training split and scores the held-out split.
CellResult run_condition(const FeatureBank& bank, const TrackLabels& ground_truth,
                         const Split& split, Condition condition,
                         const PipelineConfig& config);

struct AblationGrid {
  std::vector<double> alphas = {4.0};
  std::vector<double> betas = {0.4};
  std::vector<std::string> none_tokens = {"other", "none"};
  std::vector<reweight::Variant> variants = {
      reweight::Variant::both, reweight::Variant::with_only,
      reweight::Variant::without_only, reweight::Variant::stable};
};

/// One baseline row; one +denoise row per none token; one +denoise+reweight
/// row per (none token, alpha > beta pair, variant). The stable variant ignores
/// alpha and beta and gets a single row per none token. When `out_dir` is not
/// empty each cell writes `cells/<name>/run_manifest.json` under it.
std::vector<CellResult> ablate(const FeatureBank& bank, const TrackLabels& ground_truth,
                               const AblationGrid& grid, const PipelineConfig& config,
                               const std::filesystem::path& out_dir = {});

/// Header: condition,none_token,alpha,beta,variant, the ten scores, manifest.
void write_ablation_csv(const std::filesystem::path& path,
                        const std::vector<CellResult>& rows);

}  // namespace lsld::pipeline
