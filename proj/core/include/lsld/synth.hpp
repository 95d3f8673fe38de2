#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lsld/bank.hpp"
#include "lsld/labels.hpp"
#include "lsld/prompts.hpp"

namespace lsld::synth {

struct SynthConfig {
  int videos = 200;
  int classes = 8;
  int segments = 10;
  int d_audio = 32;
  int d_visual = 32;
  /// Gaussian noise per embedding coordinate, added before renormalization.
  double noise = 0.1;
  /// Per-segment probability that an absent event starts.
  double p_on = 0.1;
  /// Probability that a present event continues into the next segment.
  double p_stay = 0.8;
  /// Candidate classes per video; events are planted only among these.
  int max_classes = 3;
  std::uint64_t seed = 0;
  prompts::PromptOptions prompt_options;
  /// Every none token gets a row pointing at the background prototype.
  std::vector<std::string> none_tokens = {"other", "none"};

  /// Throws ValidationError on bad sizes, probabilities or d < C + 1.
  void validate() const;
};

/// Planted ground truth for one video. Presence matrices are T x C binary.
struct PlantedVideo {
  std::string id;
  ClassSet label_set;
  std::array<Eigen::MatrixXd, 2> presence;  // audio, visual
};

/// Rows 0..C-1 are class prototypes, row C is the background prototype.
/// Rows are orthonormal; the same seed gives the same rows.
Eigen::MatrixXd make_prototypes(int classes, int dim, std::uint64_t seed);

/// Two-state presence chains per class and track; the weak label is the union
/// of everything planted.
std::vector<PlantedVideo> plant_events(const SynthConfig& config);

/// Embedding of a class subset: normalized prototype sum, or the background
/// prototype for the empty set.
Eigen::RowVectorXd subset_embedding(const ClassSet& subset,
                                    const Eigen::MatrixXd& prototypes);

/// T x d segment embeddings for a presence matrix, with per-coordinate noise
/// and renormalization.
FeatureMatrix embed_segments(const Eigen::MatrixXd& presence,
                             const Eigen::MatrixXd& prototypes, double noise,
                             std::mt19937_64& rng);

/// Default event vocabulary of `classes` names.
EventVocabulary default_vocabulary(int classes);

struct SynthDataset {
  FeatureBank bank;
  TrackLabels ground_truth;
  std::vector<PlantedVideo> planted;
};

SynthDataset generate(const SynthConfig& config);

/// Writes the bank plus annotations.csv into `outdir`.
SynthDataset gen_dataset(const SynthConfig& config, const std::filesystem::path& outdir);

}  // namespace lsld::synth
