#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "lsld/labels.hpp"

namespace lsld::metrics {

using BinaryMatrix =
    Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

/// Half-open segment interval [onset, offset).
struct Interval {
  int onset = 0;
  int offset = 0;

  int length() const { return offset - onset; }
  friend bool operator==(const Interval&, const Interval&) = default;
};

/// Event families scored by the parsing protocol.
enum class Family { audio, visual, audio_visual };

struct Counts {
  long long tp = 0;
  long long fp = 0;
  long long fn = 0;

  Counts& operator+=(const Counts& o) {
    tp += o.tp;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }
  friend Counts operator+(Counts a, const Counts& b) { return a += b; }
  friend bool operator==(const Counts&, const Counts&) = default;
};

/// Binary tracks of one video; both are T x C.
struct VideoTracks {
  BinaryMatrix audio;
  BinaryMatrix visual;
};
using TrackSet = std::map<std::string, VideoTracks>;

struct FamilyScores {
  double audio = 0;
  double visual = 0;
  double audio_visual = 0;
  double type_av = 0;
  double event_av = 0;
};

struct FamilyCounts {
  Counts audio;
  Counts visual;
  Counts audio_visual;
};

struct ParsingReport {
  FamilyScores segment;
  FamilyScores event;
  FamilyCounts segment_counts;
  FamilyCounts event_counts;
};

/// 1 where prob >= threshold.
BinaryMatrix binarize(const Eigen::MatrixXd& probs, double threshold);

/// Maximal runs of true values.
std::vector<Interval> extract_runs(const std::vector<bool>& track);
/// Runs of one class column of a T x C binary matrix.
std::vector<Interval> extract_events(const BinaryMatrix& tracks, Eigen::Index cls);

double iou(const Interval& a, const Interval& b);

/// 2TP / (2TP + FP + FN); 1 when all counts are zero.
double f_score(const Counts& counts);

/// Cell-wise counts over a T x C pair.
Counts segment_counts(const BinaryMatrix& pred, const BinaryMatrix& gt);

/// Greedy one-to-one matching by decreasing IoU over pairs with
/// IoU >= threshold. Instances must belong to one (video, family, class) group.
Counts event_counts(const std::vector<Interval>& pred,
                    const std::vector<Interval>& gt, double iou_threshold);

/// Elementwise AND of the audio and visual tracks.
BinaryMatrix audio_visual(const VideoTracks& tracks);

/// Scores binary predictions. Throws ValidationError when the two sets do not
/// cover the same videos (listing the symmetric difference) or shapes differ.
ParsingReport report(const TrackSet& pred, const TrackSet& gt,
                     double iou_threshold = 0.5);

/// Binarizes real-valued predictions and ground truth at `threshold` first.
ParsingReport report(const TrackLabels& pred, const TrackLabels& gt,
                     double threshold = 0.5, double iou_threshold = 0.5);

TrackSet to_tracks(const TrackLabels& labels, double threshold);

/// JSON object with both score levels and all count tables.
std::string report_json(const ParsingReport& report);

}  // namespace lsld::metrics
