#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace lsld::model {

/// Index 0 is audio, 1 is visual throughout this module.
inline constexpr int kModalities = 2;

struct ModelConfig {
  int d_audio = 0;
  int d_visual = 0;
  int hidden = 32;
  int num_classes = 0;
  bool attention = true;
  std::uint64_t seed = 0;
  double label_smoothing = 0.1;
  double learning_rate = 2e-4;
  double lr_decay = 0.25;
  int decay_period = 6;
  int epochs = 20;
  int batch_size = 32;

  /// Throws ValidationError on non-positive sizes or smoothing outside [0, 0.5).
  void validate() const;
};

/// Learnable parameters. Gradients use the same type.
struct Parameters {
  Eigen::MatrixXd proj_audio, proj_audio_bias;    // d_a x h, 1 x h
  Eigen::MatrixXd proj_visual, proj_visual_bias;  // d_v x h, 1 x h
  // Attention maps (h x h) per modality; empty when attention is disabled.
  std::array<Eigen::MatrixXd, kModalities> self_query, self_key, self_value;
  std::array<Eigen::MatrixXd, kModalities> cross_query, cross_key, cross_value;
  Eigen::MatrixXd classifier, classifier_bias;    // h x C, 1 x C
  Eigen::MatrixXd temporal, temporal_bias;        // h x C, 1 x C
  Eigen::MatrixXd modality, modality_bias;        // h x C, 1 x C

  /// Calls f(name, matrix) for every non-empty parameter in a fixed order.
  void visit(const std::function<void(const std::string&, Eigen::MatrixXd&)>& f);
  void visit(const std::function<void(const std::string&, const Eigen::MatrixXd&)>& f) const;

  /// Same shapes, all zeros.
  Parameters zeros_like() const;
  std::size_t count() const;
};

struct ModelState {
  ModelConfig config;
  Parameters params;
  int epoch = 0;
};

/// Xavier-uniform weights and zero biases drawn from `config.seed`.
ModelState init_model(const ModelConfig& config);

struct ForwardOutput {
  /// Segment probabilities, T x C per modality.
  std::array<Eigen::MatrixXd, kModalities> segment_probs;
  /// Temporal pooling weights, T x C per modality; columns sum to one.
  std::array<Eigen::MatrixXd, kModalities> temporal_weights;
  /// Joint weights over (modality, segment); per class they sum to one.
  std::array<Eigen::MatrixXd, kModalities> joint_weights;
  Eigen::RowVectorXd video_audio;
  Eigen::RowVectorXd video_visual;
  Eigen::RowVectorXd video_av;
};

ForwardOutput forward(const ModelState& state, const Eigen::MatrixXd& audio,
                      const Eigen::MatrixXd& visual);

/// Supervision for one video.
struct VideoTargets {
  Eigen::RowVectorXd weak;  // y^av, binary 1 x C
  /// Segment-level targets (T x C) when true; otherwise smoothed video-level
  /// targets for the pooled audio and visual predictions.
  bool segment_level = false;
  Eigen::MatrixXd audio;   // T x C, or 1 x C in video-level mode
  Eigen::MatrixXd visual;  // T x C, or 1 x C in video-level mode
};

inline constexpr double kProbClamp = 1e-7;

/// -[y ln p + (1-y) ln(1-p)] with p clamped to [1e-7, 1 - 1e-7].
double bce(double y, double p);

/// y (1 - eps) + (1 - y) eps, elementwise.
Eigen::RowVectorXd label_smooth(const Eigen::RowVectorXd& y, double eps);

/// Mean-over-classes BCE of the audio-visual prediction plus the two modality
/// terms (mean over segments and classes in segment mode). Throws
/// ValidationError when a target leaves [0, 1].
double loss(const ForwardOutput& out, const VideoTargets& targets);

/// Loss of one video and its gradient with respect to every parameter.
double loss_and_gradient(const ModelState& state, const Eigen::MatrixXd& audio,
                         const Eigen::MatrixXd& visual, const VideoTargets& targets,
                         Parameters& grad);

/// Small random problem used to compare analytic and numerical gradients.
struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t parameters_checked = 0;
};

/// Central differences with `step`; relative error is
/// |a - n| / max(|a|, |n|, 1e-8).
GradCheckResult grad_check(const ModelConfig& config, int segments,
                           bool segment_level, double step = 1e-4);

void save_checkpoint(const std::filesystem::path& dir, const ModelState& state);
ModelState load_checkpoint(const std::filesystem::path& dir);

}  // namespace lsld::model
