#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "lsld/vocabulary.hpp"

namespace lsld::prompts {

inline constexpr std::size_t kDefaultSubsetCap = 10;

/// Rendering options shared by the bank loader, denoising and the exporter.
struct PromptOptions {
  /// `{}` is replaced by the joined class names. A template without `{}` is
  /// used as a prefix followed by a space.
  std::string template_text = "{}";
  /// Rendered text for the empty subset ("no pre-defined event appears").
  std::string none_token = "other";
  std::size_t subset_cap = kDefaultSubsetCap;
};

/// Every event-appearance case for one video: the power set of its weak label.
struct PromptSet {
  std::string video_id;
  std::vector<ClassSet> subsets;
  std::vector<std::string> rendered;

  std::size_t size() const { return subsets.size(); }
};

/// Canonical order: ascending subset size, then lexicographic by sorted class
/// index. The empty set comes first. Throws ValidationError when
/// |label_set| exceeds `cap`; `video_id` is only used for the message.
std::vector<ClassSet> enumerate_subsets(const ClassSet& label_set,
                                        std::size_t cap = kDefaultSubsetCap,
                                        std::string_view video_id = {});

/// Empty subset renders as the none token; otherwise class names in index
/// order joined by " and " and substituted into the template.
std::string render_prompt(const ClassSet& subset,
                          const EventVocabulary& vocabulary,
                          const PromptOptions& options = {});

PromptSet make_prompt_set(std::string video_id, const ClassSet& label_set,
                          const EventVocabulary& vocabulary,
                          const PromptOptions& options = {});

}  // namespace lsld::prompts
