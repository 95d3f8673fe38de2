#pragma once

#include <filesystem>
#include <map>
#include <string>

#include <Eigen/Core>

#include "lsld/bank.hpp"
#include "lsld/vocabulary.hpp"

namespace lsld {

enum class LabelKind { ground_truth, denoised, reweighted, prediction };

/// T x C per-segment values for one video and modality.
struct SegmentLabelTensor {
  std::string video_id;
  Modality modality = Modality::visual;
  LabelKind kind = LabelKind::ground_truth;
  Eigen::MatrixXd values;
};

/// Keyed by video id; ordered so every dump is deterministic.
using LabelTable = std::map<std::string, SegmentLabelTensor>;

struct TrackLabels {
  LabelTable audio;
  LabelTable visual;

  LabelTable& track(Modality m) { return m == Modality::audio ? audio : visual; }
  const LabelTable& track(Modality m) const {
    return m == Modality::audio ? audio : visual;
  }
};

/// Checks range, binarity for denoised tensors and, for every kind except
/// ground truth and prediction, that no positive value falls outside the weak
/// label. Returns an empty string when valid, otherwise the first violation.
std::string check_label_tensor(const SegmentLabelTensor& tensor,
                               const ClassSet& weak_label);
/// Throws ValidationError with the message from check_label_tensor.
void validate_label_tensor(const SegmentLabelTensor& tensor,
                           const ClassSet& weak_label);

/// `filename,modality,t,event,value`. Sparse output lists positive cells only.
void write_label_csv(const std::filesystem::path& path, const TrackLabels& labels,
                     const EventVocabulary& vocabulary, bool dense = false);

/// Reads a label CSV against a bank: every bank video gets a zero T x C tensor
/// on both tracks, then listed cells are filled in. Unknown videos, classes or
/// out-of-range segments are FormatErrors.
TrackLabels read_label_csv(const std::filesystem::path& path,
                           const FeatureBank& bank, LabelKind kind);

/// Ground-truth annotations: `filename,modality,event,onset,offset` with
/// segment indices and an exclusive offset.
TrackLabels read_annotations(const std::filesystem::path& path,
                             const FeatureBank& bank);
void write_annotations(const std::filesystem::path& path,
                       const TrackLabels& ground_truth,
                       const EventVocabulary& vocabulary);

}  // namespace lsld
