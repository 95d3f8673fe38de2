#pragma once

#include <cstddef>
#include <map>
#include <string>

#include <Eigen/Core>

#include "lsld/bank.hpp"
#include "lsld/labels.hpp"
#include "lsld/prompts.hpp"

namespace lsld::denoise {

inline constexpr double kDefaultTemperature = 100.0;

/// Prompt x segment similarity. `cosine` holds the raw cosine scores and
/// `normalized` the per-segment softmax over prompts of temperature * cosine.
struct SimilarityMatrix {
  Eigen::MatrixXd cosine;
  Eigen::MatrixXd normalized;
  double temperature = kDefaultTemperature;
  prompts::PromptSet prompt_set;

  Eigen::Index prompts() const { return cosine.rows(); }
  Eigen::Index segments() const { return cosine.cols(); }
};

/// Row-wise L2 normalization. Throws NumericError naming the first zero-norm
/// (or non-finite) row; `what` labels the matrix in the message.
Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& m, const std::string& what);

/// text_feats is N x d (one row per prompt), seg_feats is T x d.
SimilarityMatrix similarity(const Eigen::MatrixXd& text_feats,
                            const Eigen::MatrixXd& seg_feats,
                            double temperature = kDefaultTemperature);

/// Index of the selected prompt per segment: the highest normalized score,
/// with exact ties going to the earlier canonical prompt (smaller subset first).
std::vector<int> select_prompts(const SimilarityMatrix& sim);

/// Binary T x C labels: each segment takes the subset of its selected prompt.
SegmentLabelTensor denoise_labels(const SimilarityMatrix& sim,
                                  const VideoRecord& video,
                                  std::size_t num_classes,
                                  Modality modality = Modality::visual);

/// Builds the prompt-set similarity for one video and modality from the bank.
SimilarityMatrix video_similarity(const FeatureBank& bank, const VideoRecord& video,
                                  Modality modality, double temperature,
                                  const prompts::PromptOptions& options = {});

/// Denoises every video of the bank on one modality. Work is split across
/// `threads` workers; the result does not depend on the thread count.
LabelTable denoise_bank(const FeatureBank& bank, Modality modality,
                        double temperature = kDefaultTemperature,
                        const prompts::PromptOptions& options = {},
                        unsigned threads = 1);

}  // namespace lsld::denoise
