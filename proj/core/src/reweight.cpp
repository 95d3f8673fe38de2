#include "lsld/reweight.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "lsld/csv.hpp"
#include "lsld/denoise.hpp"
#include "lsld/error.hpp"

namespace lsld::reweight {

void ReweightConfig::validate() const {
  if (!(alpha > beta))
    throw ValidationError("reweighting requires alpha > beta (alpha=" +
                          std::to_string(alpha) + ", beta=" + std::to_string(beta) +
                          ")");
  if (!(beta > 0.0)) throw ValidationError("beta must be positive");
  if (!(stable_value >= 0.0 && stable_value <= 1.0))
    throw ValidationError("stable soft value must lie in [0,1]");
  if (!(overlap_quantile >= 0.0 && overlap_quantile < 0.5))
    throw ValidationError("overlap quantile must lie in [0, 0.5)");
}

double transform_similarity(double cosine, ScTransform transform) {
  const double s = transform == ScTransform::clamp_cosine ? cosine
                                                          : 0.5 * (1.0 + cosine);
  return std::clamp(s, 0.0, 1.0);
}

std::size_t histogram_bin(double s) {
  if (!(s > 0.0)) return 0;
  const auto bin = static_cast<std::size_t>(std::floor(s * kHistogramBins));
  return std::min(bin, kHistogramBins - 1);
}

std::vector<SegmentSimilarity> class_similarity(
    const FeatureBank& bank, ClassIndex cls, const ReweightConfig& config,
    const prompts::PromptOptions& options) {
  std::vector<SegmentSimilarity> out;
  const auto& table = bank.prompt_table(Modality::visual);
  const auto row = table.find(prompts::render_prompt({cls}, bank.vocabulary, options));
  if (!row) return out;
  const Eigen::RowVectorXd prompt = denoise::normalize_rows(
      table.matrix().row(*row).cast<double>(), "class prompt");
  for (std::size_t i = 0; i < bank.videos.size(); ++i) {
    const auto& v = bank.videos[i];
    if (config.scope == GroupScope::label && !v.has_label(cls)) continue;
    const Eigen::MatrixXd seg =
        denoise::normalize_rows(v.visual.cast<double>(), "segment of '" + v.id + "'");
    const Eigen::VectorXd cosines = seg * prompt.transpose();
    for (int t = 0; t < v.segments; ++t)
      out.push_back({i, t, transform_similarity(cosines(t), config.transform)});
  }
  return out;
}

namespace {

double quantile(std::vector<double> values, double q) {
  std::sort(values.begin(), values.end());
  const auto idx = static_cast<std::size_t>(
      std::floor(q * static_cast<double>(values.size() - 1)));
  return values[idx];
}

}  // namespace

GroupStats group_stats(const std::vector<SegmentSimilarity>& sims,
                       const FeatureBank& bank, const LabelTable& denoised,
                       ClassIndex cls, double overlap_quantile) {
  GroupStats stats;
  stats.cls = cls;
  std::vector<double> with, without;
  std::vector<bool> positive;
  positive.reserve(sims.size());
  for (const auto& s : sims) {
    const auto& id = bank.videos.at(s.video).id;
    auto it = denoised.find(id);
    if (it == denoised.end())
      throw ValidationError("no denoised visual labels for video '" + id + "'");
    const bool pos = it->second.values(s.t, cls) > 0.5;
    positive.push_back(pos);
    (pos ? with : without).push_back(s.s);
    (pos ? stats.hist_with : stats.hist_without)[histogram_bin(s.s)]++;
  }
  stats.n_with = with.size();
  stats.n_without = without.size();
  stats.degenerate = with.empty() || without.empty();
  if (stats.degenerate) return stats;

  if (overlap_quantile > 0.0) {
    stats.min_with = quantile(with, overlap_quantile);
    stats.max_without = quantile(without, 1.0 - overlap_quantile);
  } else {
    stats.min_with = *std::min_element(with.begin(), with.end());
    stats.max_without = *std::max_element(without.begin(), without.end());
  }
  std::size_t unreliable = 0;
  for (std::size_t i = 0; i < sims.size(); ++i) {
    const double s = sims[i].s;
    if (positive[i] ? s <= stats.max_without : s >= stats.min_with) ++unreliable;
  }
  stats.overlap_fraction =
      static_cast<double>(unreliable) / static_cast<double>(sims.size());
  return stats;
}

double soft_label(double denoised, double s, const GroupStats& stats,
                  const ReweightConfig& config) {
  if (stats.degenerate) return denoised;
  const bool with_branch = config.variant != Variant::without_only;
  const bool without_branch = config.variant != Variant::with_only;
  const bool stable = config.variant == Variant::stable;
  if (denoised == 1.0 && s <= stats.max_without && with_branch)
    return stable ? config.stable_value : std::min(1.0, config.alpha * s);
  if (denoised == 0.0 && s >= stats.min_with && without_branch)
    return stable ? config.stable_value : std::min(1.0, config.beta * s);
  return denoised;
}

ReweightResult reweight_bank(const FeatureBank& bank, const LabelTable& denoised_visual,
                             const ReweightConfig& config,
                             const prompts::PromptOptions& options) {
  config.validate();
  ReweightResult result;
  for (const auto& v : bank.videos) {
    auto it = denoised_visual.find(v.id);
    if (it == denoised_visual.end())
      throw ValidationError("no denoised visual labels for video '" + v.id + "'");
    SegmentLabelTensor t = it->second;
    t.kind = LabelKind::reweighted;
    t.modality = Modality::visual;
    result.labels.emplace(v.id, std::move(t));
  }
  const auto C = static_cast<ClassIndex>(bank.num_classes());
  for (ClassIndex c = 0; c < C; ++c) {
    const auto sims = class_similarity(bank, c, config, options);
    GroupStats stats = group_stats(sims, bank, denoised_visual, c, config.overlap_quantile);
    const bool excluded =
        std::find(config.excluded.begin(), config.excluded.end(), c) != config.excluded.end();
    if (!excluded && !stats.degenerate) {
      for (const auto& s : sims) {
        const auto& video = bank.videos[s.video];
        auto& y = result.labels.at(video.id).values;
        const double updated = soft_label(y(s.t, c), s.s, stats, config);
        y(s.t, c) = video.has_label(c) ? updated : 0.0;
      }
    }
    result.stats.push_back(std::move(stats));
  }
  return result;
}

void write_stats_csv(const std::filesystem::path& path,
                     const std::vector<GroupStats>& stats,
                     const EventVocabulary& vocabulary) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "event,min_with,max_without,n_with,n_without,overlap_fraction";
  for (std::size_t b = 0; b < kHistogramBins; ++b) out << ",hist_with_" << b;
  for (std::size_t b = 0; b < kHistogramBins; ++b) out << ",hist_without_" << b;
  out << ",degenerate\n";
  for (const auto& s : stats) {
    out << csv::escape(vocabulary.name(s.cls)) << ',';
    if (s.degenerate) {
      out << ",,";
    } else {
      out << csv::format_real(s.min_with) << ',' << csv::format_real(s.max_without)
          << ',';
    }
    out << s.n_with << ',' << s.n_without << ','
        << csv::format_real(s.overlap_fraction);
    for (auto n : s.hist_with) out << ',' << n;
    for (auto n : s.hist_without) out << ',' << n;
    out << ',' << (s.degenerate ? 1 : 0) << '\n';
  }
  if (!out) throw FormatError("write failed for " + path.string());
}

}  // namespace lsld::reweight
