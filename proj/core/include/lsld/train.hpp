#pragma once

#include <cstddef>
#include <string_view>
#include <vector>

#include "lsld/bank.hpp"
#include "lsld/labels.hpp"
#include "lsld/model.hpp"

namespace lsld::model {

/// Where the modality supervision comes from.
enum class TrainingMode {
  video,       // smoothed video-level labels on the pooled predictions
  denoised,    // segment-level denoised labels on both tracks
  reweighted,  // denoised audio labels, reweighted visual labels
};

TrainingMode parse_training_mode(std::string_view text);
std::string_view to_string(TrainingMode mode);

/// Learning rate of a 1-based epoch: lr * decay^floor((epoch - 1) / period).
double learning_rate_at(const ModelConfig& config, int epoch);

/// Targets of one bank video. `labels` is ignored in video mode; in the other
/// modes it must hold both tracks for the video.
VideoTargets make_targets(const FeatureBank& bank, const VideoRecord& video,
                          TrainingMode mode, const TrackLabels* labels,
                          double label_smoothing);

struct TrainResult {
  ModelState state;
  /// Mean per-video loss of each epoch, in order.
  std::vector<double> epoch_loss;
};

/// Mini-batch Adam over the given videos (indices into bank.videos; all videos
/// when empty). Single-threaded and bit-reproducible for a fixed seed. Throws
/// NumericError with epoch and batch when the loss is not finite.
TrainResult train(const FeatureBank& bank, TrainingMode mode,
                  const TrackLabels* labels, const ModelConfig& config,
                  const std::vector<std::size_t>& video_subset = {});

/// Segment probabilities for the given videos (all when empty).
TrackLabels predict(const ModelState& state, const FeatureBank& bank,
                    const std::vector<std::size_t>& video_subset = {});

/// Config with input dims and class count taken from the bank.
ModelConfig config_for(const FeatureBank& bank, ModelConfig base = {});

}  // namespace lsld::model
