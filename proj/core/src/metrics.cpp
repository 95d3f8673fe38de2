#include "lsld/metrics.hpp"

#include <algorithm>
#include <set>
#include <tuple>

#include <json.hpp>

#include "lsld/error.hpp"

namespace lsld::metrics {

BinaryMatrix binarize(const Eigen::MatrixXd& probs, double threshold) {
  return (probs.array() >= threshold).cast<std::uint8_t>();
}

std::vector<Interval> extract_runs(const std::vector<bool>& track) {
  std::vector<Interval> runs;
  const int T = static_cast<int>(track.size());
  int t = 0;
  while (t < T) {
    if (!track[static_cast<std::size_t>(t)]) {
      ++t;
      continue;
    }
    const int onset = t;
    while (t < T && track[static_cast<std::size_t>(t)]) ++t;
    runs.push_back({onset, t});
  }
  return runs;
}

std::vector<Interval> extract_events(const BinaryMatrix& tracks,
                                     Eigen::Index cls) {
  std::vector<bool> column(static_cast<std::size_t>(tracks.rows()));
  for (Eigen::Index t = 0; t < tracks.rows(); ++t)
    column[static_cast<std::size_t>(t)] = tracks(t, cls) != 0;
  return extract_runs(column);
}

double iou(const Interval& a, const Interval& b) {
  const int inter = std::max(0, std::min(a.offset, b.offset) - std::max(a.onset, b.onset));
  const int uni = a.length() + b.length() - inter;
  return uni > 0 ? static_cast<double>(inter) / uni : 0.0;
}

double f_score(const Counts& c) {
  const long long denom = 2 * c.tp + c.fp + c.fn;
  if (denom == 0) return 1.0;
  return static_cast<double>(2 * c.tp) / static_cast<double>(denom);
}

Counts segment_counts(const BinaryMatrix& pred, const BinaryMatrix& gt) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols())
    throw ValidationError("segment_counts: prediction is " +
                          std::to_string(pred.rows()) + "x" +
                          std::to_string(pred.cols()) + " but ground truth is " +
                          std::to_string(gt.rows()) + "x" +
                          std::to_string(gt.cols()));
  Counts out;
  for (Eigen::Index i = 0; i < pred.size(); ++i) {
    const bool p = pred.data()[i] != 0;
    const bool g = gt.data()[i] != 0;
    out.tp += p && g;
    out.fp += p && !g;
    out.fn += !p && g;
  }
  return out;
}

Counts event_counts(const std::vector<Interval>& pred,
                    const std::vector<Interval>& gt, double iou_threshold) {
  struct Candidate {
    double iou;
    std::size_t g;
    std::size_t p;
  };
  std::vector<Candidate> candidates;
  for (std::size_t g = 0; g < gt.size(); ++g)
    for (std::size_t p = 0; p < pred.size(); ++p)
      if (const double v = iou(pred[p], gt[g]); v >= iou_threshold && v > 0.0)
        candidates.push_back({v, g, p});
  std::sort(candidates.begin(), candidates.end(),
            [](const Candidate& a, const Candidate& b) {
              return std::tie(b.iou, a.g, a.p) < std::tie(a.iou, b.g, b.p);
            });
  std::vector<bool> gt_used(gt.size()), pred_used(pred.size());
  long long matches = 0;
  for (const auto& c : candidates) {
    if (gt_used[c.g] || pred_used[c.p]) continue;
    gt_used[c.g] = pred_used[c.p] = true;
    ++matches;
  }
  const auto n_pred = static_cast<long long>(pred.size());
  const auto n_gt = static_cast<long long>(gt.size());
  return {matches, n_pred - matches, n_gt - matches};
}

BinaryMatrix audio_visual(const VideoTracks& tracks) {
  if (tracks.audio.rows() != tracks.visual.rows() ||
      tracks.audio.cols() != tracks.visual.cols())
    throw ValidationError("audio and visual tracks differ in shape");
  return tracks.audio.cwiseMin(tracks.visual);
}

namespace {

Counts event_counts_matrix(const BinaryMatrix& pred, const BinaryMatrix& gt,
                           double iou_threshold) {
  if (pred.rows() != gt.rows() || pred.cols() != gt.cols())
    throw ValidationError("event counts: prediction and ground truth differ in shape");
  Counts out;
  for (Eigen::Index c = 0; c < pred.cols(); ++c)
    out += event_counts(extract_events(pred, c), extract_events(gt, c),
                        iou_threshold);
  return out;
}

FamilyScores scores_from(const FamilyCounts& counts) {
  FamilyScores s;
  s.audio = f_score(counts.audio);
  s.visual = f_score(counts.visual);
  s.audio_visual = f_score(counts.audio_visual);
  s.type_av = (s.audio + s.visual + s.audio_visual) / 3.0;
  s.event_av = f_score(counts.audio + counts.visual);
  return s;
}

}  // namespace

ParsingReport report(const TrackSet& pred, const TrackSet& gt,
                     double iou_threshold) {
  std::vector<std::string> only_pred, only_gt;
  for (const auto& [id, t] : pred)
    if (!gt.count(id)) only_pred.push_back(id);
  for (const auto& [id, t] : gt)
    if (!pred.count(id)) only_gt.push_back(id);
  if (!only_pred.empty() || !only_gt.empty()) {
    std::string msg = "prediction and ground-truth video sets differ;";
    if (!only_pred.empty()) {
      msg += " only in predictions:";
      for (const auto& id : only_pred) msg += " " + id;
      msg += ";";
    }
    if (!only_gt.empty()) {
      msg += " only in ground truth:";
      for (const auto& id : only_gt) msg += " " + id;
    }
    throw ValidationError(msg);
  }

  ParsingReport r;
  for (const auto& [id, g] : gt) {
    const auto& p = pred.at(id);
    const BinaryMatrix p_av = audio_visual(p);
    const BinaryMatrix g_av = audio_visual(g);
    r.segment_counts.audio += segment_counts(p.audio, g.audio);
    r.segment_counts.visual += segment_counts(p.visual, g.visual);
    r.segment_counts.audio_visual += segment_counts(p_av, g_av);
    r.event_counts.audio += event_counts_matrix(p.audio, g.audio, iou_threshold);
    r.event_counts.visual += event_counts_matrix(p.visual, g.visual, iou_threshold);
    r.event_counts.audio_visual += event_counts_matrix(p_av, g_av, iou_threshold);
  }
  r.segment = scores_from(r.segment_counts);
  r.event = scores_from(r.event_counts);
  return r;
}

TrackSet to_tracks(const TrackLabels& labels, double threshold) {
  TrackSet out;
  for (const auto& [id, tensor] : labels.audio) out[id].audio = binarize(tensor.values, threshold);
  for (const auto& [id, tensor] : labels.visual) out[id].visual = binarize(tensor.values, threshold);
  for (const auto& [id, tracks] : out)
    if (tracks.audio.size() == 0 || tracks.visual.size() == 0)
      throw ValidationError("video '" + id + "' lacks an audio or visual track");
  return out;
}

ParsingReport report(const TrackLabels& pred, const TrackLabels& gt,
                     double threshold, double iou_threshold) {
  return report(to_tracks(pred, threshold), to_tracks(gt, 0.5), iou_threshold);
}

std::string report_json(const ParsingReport& r) {
  using nlohmann::json;
  auto scores = [](const FamilyScores& s) {
    return json{{"audio", s.audio},
                {"visual", s.visual},
                {"audio_visual", s.audio_visual},
                {"type_av", s.type_av},
                {"event_av", s.event_av}};
  };
  auto counts = [](const Counts& c) {
    return json{{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}};
  };
  auto family_counts = [&](const FamilyCounts& f) {
    return json{{"audio", counts(f.audio)},
                {"visual", counts(f.visual)},
                {"audio_visual", counts(f.audio_visual)}};
  };
  json out{{"segment_level", scores(r.segment)},
           {"event_level", scores(r.event)},
           {"counts",
            {{"segment_level", family_counts(r.segment_counts)},
             {"event_level", family_counts(r.event_counts)}}}};
  return out.dump(2);
}

}  // namespace lsld::metrics
