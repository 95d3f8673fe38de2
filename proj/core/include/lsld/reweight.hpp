#pragma once

#include <array>
#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "lsld/bank.hpp"
#include "lsld/labels.hpp"
#include "lsld/prompts.hpp"

namespace lsld::reweight {

inline constexpr std::size_t kHistogramBins = 100;

/// How the raw segment/class-prompt cosine becomes s_c in [0, 1].
enum class ScTransform {
  clamp_cosine,   // max(0, cos)
  affine_cosine,  // (1 + cos) / 2
};

/// Which segments form the with/without groups of a class.
enum class GroupScope {
  label,    // only videos whose weak label contains the class
  dataset,  // every video; out-of-label classes are masked afterwards
};

/// Which soft-label branches fire.
enum class Variant {
  both,          // both branches, weighted similarity
  with_only,     // only positives inside the overlap are softened
  without_only,  // only negatives inside the overlap are softened
  stable,        // both branches, fixed soft value instead of weighted similarity
};

struct ReweightConfig {
  double alpha = 4.0;
  double beta = 0.4;
  GroupScope scope = GroupScope::label;
  ScTransform transform = ScTransform::clamp_cosine;
  Variant variant = Variant::both;
  double stable_value = 0.5;
  /// 0 disables the guard. Otherwise Min_w is the q-quantile of the positive
  /// group and Max_w/o the (1-q)-quantile of the negative group.
  double overlap_quantile = 0.0;
  /// Classes left untouched.
  std::vector<ClassIndex> excluded;

  /// Throws ValidationError unless alpha > beta > 0 and the rest is in range.
  void validate() const;
};

/// Similarity of one segment to a class's singleton prompt.
struct SegmentSimilarity {
  std::size_t video = 0;  // index into FeatureBank::videos
  int t = 0;
  double s = 0.0;
};

struct GroupStats {
  ClassIndex cls = 0;
  double min_with = 0.0;
  double max_without = 0.0;
  std::size_t n_with = 0;
  std::size_t n_without = 0;
  std::array<std::size_t, kHistogramBins> hist_with{};
  std::array<std::size_t, kHistogramBins> hist_without{};
  /// An empty group; reweighting is the identity for this class.
  bool degenerate = true;
  /// Share of the class's segments that fall in the overlap region.
  double overlap_fraction = 0.0;

  bool overlap_empty() const { return degenerate || min_with > max_without; }
};

double transform_similarity(double cosine, ScTransform transform);

/// Histogram bin of a value in [0, 1]: half-open bins, the last one closed.
std::size_t histogram_bin(double s);

/// Similarity of every in-scope visual segment to the prompt of class `cls`.
/// Empty when the class has no in-scope video or no singleton prompt row.
std::vector<SegmentSimilarity> class_similarity(
    const FeatureBank& bank, ClassIndex cls, const ReweightConfig& config = {},
    const prompts::PromptOptions& options = {});

/// Splits the similarities by the denoised visual label of the class.
GroupStats group_stats(const std::vector<SegmentSimilarity>& sims,
                       const FeatureBank& bank, const LabelTable& denoised,
                       ClassIndex cls, double overlap_quantile = 0.0);

/// The per-cell soft-label rule. `denoised` is 0 or 1.
double soft_label(double denoised, double s, const GroupStats& stats,
                  const ReweightConfig& config);

struct ReweightResult {
  LabelTable labels;               // kind = reweighted, visual only
  std::vector<GroupStats> stats;   // one per vocabulary class
};

/// Softens unreliable visual labels of the whole bank.
ReweightResult reweight_bank(const FeatureBank& bank, const LabelTable& denoised_visual,
                             const ReweightConfig& config = {},
                             const prompts::PromptOptions& options = {});

/// `event,min_with,max_without,n_with,n_without,overlap_fraction,
/// hist_with_0..99,hist_without_0..99`, plus a trailing `degenerate` flag.
void write_stats_csv(const std::filesystem::path& path,
                     const std::vector<GroupStats>& stats,
                     const EventVocabulary& vocabulary);

}  // namespace lsld::reweight
