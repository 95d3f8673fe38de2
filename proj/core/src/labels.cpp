#include "lsld/labels.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>

#include "lsld/csv.hpp"
#include "lsld/error.hpp"
#include "lsld/metrics.hpp"

namespace lsld {
namespace fs = std::filesystem;

namespace {

int parse_int(const std::string& text, const std::string& where) {
  int value = 0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size())
    throw FormatError(where + ": '" + text + "' is not an integer");
  return value;
}

double parse_real(const std::string& text, const std::string& where) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw FormatError(where + ": '" + text + "' is not a number");
  }
}

TrackLabels zero_labels(const FeatureBank& bank, LabelKind kind) {
  TrackLabels out;
  const auto C = static_cast<Eigen::Index>(bank.num_classes());
  for (const auto& v : bank.videos) {
    for (Modality m : {Modality::audio, Modality::visual}) {
      out.track(m).emplace(
          v.id, SegmentLabelTensor{v.id, m, kind,
                                   Eigen::MatrixXd::Zero(v.segments, C)});
    }
  }
  return out;
}

}  // namespace

std::string check_label_tensor(const SegmentLabelTensor& tensor,
                               const ClassSet& weak_label) {
  const auto& y = tensor.values;
  for (Eigen::Index t = 0; t < y.rows(); ++t) {
    for (Eigen::Index c = 0; c < y.cols(); ++c) {
      const double v = y(t, c);
      const std::string cell = "video '" + tensor.video_id + "' " +
                               std::string(to_string(tensor.modality)) +
                               " t=" + std::to_string(t) +
                               " c=" + std::to_string(c);
      if (!(v >= 0.0 && v <= 1.0)) return cell + ": value outside [0,1]";
      if (tensor.kind == LabelKind::denoised && v != 0.0 && v != 1.0)
        return cell + ": denoised label is not binary";
      if ((tensor.kind == LabelKind::denoised ||
           tensor.kind == LabelKind::reweighted) &&
          v > 0.0 &&
          !std::binary_search(weak_label.begin(), weak_label.end(),
                              static_cast<ClassIndex>(c)))
        return cell + ": positive value outside the weak label";
    }
  }
  return {};
}

void validate_label_tensor(const SegmentLabelTensor& tensor,
                           const ClassSet& weak_label) {
  if (auto msg = check_label_tensor(tensor, weak_label); !msg.empty())
    throw ValidationError(msg);
}

void write_label_csv(const fs::path& path, const TrackLabels& labels,
                     const EventVocabulary& vocabulary, bool dense) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "filename,modality,t,event,value\n";
  for (Modality m : {Modality::audio, Modality::visual}) {
    for (const auto& [id, tensor] : labels.track(m)) {
      const auto& y = tensor.values;
      for (Eigen::Index t = 0; t < y.rows(); ++t) {
        for (Eigen::Index c = 0; c < y.cols(); ++c) {
          if (!dense && !(y(t, c) > 0.0)) continue;
          out << csv::escape(id) << ',' << to_string(m) << ',' << t << ','
              << csv::escape(vocabulary.name(static_cast<ClassIndex>(c))) << ','
              << csv::format_real(y(t, c)) << '\n';
        }
      }
    }
  }
  if (!out) throw FormatError("write failed for " + path.string());
}

TrackLabels read_label_csv(const fs::path& path, const FeatureBank& bank,
                           LabelKind kind) {
  TrackLabels out = zero_labels(bank, kind);
  const auto rows = csv::read(path, {"filename", "modality", "t", "event", "value"});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const std::string where = path.string() + " record " + std::to_string(i + 1);
    const Modality m = parse_modality(row[1]);
    auto& table = out.track(m);
    auto it = table.find(row[0]);
    if (it == table.end())
      throw FormatError(where + ": video '" + row[0] + "' is not in the bank");
    const int t = parse_int(row[2], where);
    if (t < 0 || t >= it->second.values.rows())
      throw FormatError(where + ": segment " + row[2] + " out of range");
    const ClassIndex c = bank.vocabulary.index_of(row[3]);
    const double v = parse_real(row[4], where);
    if (!(v >= 0.0 && v <= 1.0))
      throw FormatError(where + ": value " + row[4] + " outside [0,1]");
    it->second.values(t, c) = v;
  }
  return out;
}

TrackLabels read_annotations(const fs::path& path, const FeatureBank& bank) {
  TrackLabels out = zero_labels(bank, LabelKind::ground_truth);
  const auto rows =
      csv::read(path, {"filename", "modality", "event", "onset", "offset"});
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& row = rows[i];
    const std::string where = path.string() + " record " + std::to_string(i + 1);
    const Modality m = parse_modality(row[1]);
    auto& table = out.track(m);
    auto it = table.find(row[0]);
    if (it == table.end())
      throw FormatError(where + ": video '" + row[0] + "' is not in the bank");
    const ClassIndex c = bank.vocabulary.index_of(row[2]);
    const int onset = parse_int(row[3], where);
    const int offset = parse_int(row[4], where);
    if (onset < 0 || onset >= offset || offset > it->second.values.rows())
      throw FormatError(where + ": interval [" + row[3] + ", " + row[4] +
                        ") invalid for T=" +
                        std::to_string(it->second.values.rows()));
    for (int t = onset; t < offset; ++t) it->second.values(t, c) = 1.0;
  }
  return out;
}

void write_annotations(const fs::path& path, const TrackLabels& ground_truth,
                       const EventVocabulary& vocabulary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "filename,modality,event,onset,offset\n";
  // Rows grouped by video so the file reads like an annotation list.
  for (const auto& [id, audio] : ground_truth.audio) {
    for (Modality m : {Modality::audio, Modality::visual}) {
      auto it = ground_truth.track(m).find(id);
      if (it == ground_truth.track(m).end()) continue;
      const auto& y = it->second.values;
      for (Eigen::Index c = 0; c < y.cols(); ++c) {
        std::vector<bool> track(static_cast<std::size_t>(y.rows()));
        for (Eigen::Index t = 0; t < y.rows(); ++t)
          track[static_cast<std::size_t>(t)] = y(t, c) > 0.5;
        for (const auto& run : metrics::extract_runs(track)) {
          out << csv::escape(id) << ',' << to_string(m) << ','
              << csv::escape(vocabulary.name(static_cast<ClassIndex>(c))) << ','
              << run.onset << ',' << run.offset << '\n';
        }
      }
    }
  }
  if (!out) throw FormatError("write failed for " + path.string());
}

}  // namespace lsld
