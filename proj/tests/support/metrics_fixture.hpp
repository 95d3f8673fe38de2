#pragma once

// Two videos, two classes, four segments. Counts worked out by hand:
//
// segment  A: tp 4 fp 2 fn 2   V: tp 5 fp 0 fn 1   AV: tp 2 fp 1 fn 1
// event    A: tp 2 fp 2 fn 0   V: tp 3 fp 0 fn 0   AV: tp 1 fp 1 fn 1
//
// Event level at mIoU 0.5 includes two matches at exactly IoU = 0.5
// (audio v1 class 0 and visual v1 class 1).

#include <string>
#include <vector>

#include "lsld/metrics.hpp"

namespace lsld::testing {

inline metrics::BinaryMatrix tracks_from(const std::vector<std::string>& per_class) {
  const auto C = static_cast<Eigen::Index>(per_class.size());
  const auto T = static_cast<Eigen::Index>(per_class.front().size());
  metrics::BinaryMatrix m(T, C);
  for (Eigen::Index c = 0; c < C; ++c)
    for (Eigen::Index t = 0; t < T; ++t)
      m(t, c) = per_class[static_cast<std::size_t>(c)][static_cast<std::size_t>(t)] == '1';
  return m;
}

struct MetricsFixture {
  metrics::TrackSet pred;
  metrics::TrackSet gt;
  metrics::FamilyScores segment;
  metrics::FamilyScores event;
};

inline MetricsFixture two_video_fixture() {
  MetricsFixture f;
  f.gt["v1"] = {tracks_from({"1100", "0000"}), tracks_from({"0110", "0011"})};
  f.pred["v1"] = {tracks_from({"1010", "0000"}), tracks_from({"0110", "0001"})};
  f.gt["v2"] = {tracks_from({"0000", "1111"}), tracks_from({"0000", "1100"})};
  f.pred["v2"] = {tracks_from({"0001", "1110"}), tracks_from({"0000", "1100"})};
  f.segment = {2.0 / 3.0, 10.0 / 11.0, 2.0 / 3.0, 74.0 / 99.0, 18.0 / 23.0};
  f.event = {2.0 / 3.0, 1.0, 0.5, 13.0 / 18.0, 5.0 / 6.0};
  return f;
}

}  // namespace lsld::testing
