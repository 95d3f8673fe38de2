#include "lsld/prompts.hpp"

#include <algorithm>

#include "lsld/error.hpp"

namespace lsld::prompts {

std::vector<ClassSet> enumerate_subsets(const ClassSet& label_set,
                                        std::size_t cap,
                                        std::string_view video_id) {
  const ClassSet sorted = make_class_set(label_set);
  if (sorted.size() != label_set.size())
    throw ValidationError("label set of video '" + std::string(video_id) +
                          "' contains duplicates");
  const std::size_t k = sorted.size();
  if (k > cap)
    throw ValidationError("video '" + std::string(video_id) + "' has " +
                          std::to_string(k) + " weak labels, above the cap of " +
                          std::to_string(cap) + " (2^" + std::to_string(k) +
                          " prompts)");

  std::vector<ClassSet> subsets;
  subsets.reserve(std::size_t{1} << k);
  // Grow by size using ordered combinations, which are produced in
  // lexicographic order of the sorted members.
  for (std::size_t size = 0; size <= k; ++size) {
    std::vector<std::size_t> pick(size);
    for (std::size_t i = 0; i < size; ++i) pick[i] = i;
    while (true) {
      ClassSet subset;
      subset.reserve(size);
      for (auto i : pick) subset.push_back(sorted[i]);
      subsets.push_back(std::move(subset));
      std::size_t i = size;
      while (i > 0 && pick[i - 1] == k - size + (i - 1)) --i;
      if (i == 0) break;
      ++pick[i - 1];
      for (std::size_t j = i; j < size; ++j) pick[j] = pick[j - 1] + 1;
    }
  }
  return subsets;
}

std::string render_prompt(const ClassSet& subset,
                          const EventVocabulary& vocabulary,
                          const PromptOptions& options) {
  if (subset.empty()) return options.none_token;
  ClassSet ordered = make_class_set(subset);
  std::string joined;
  for (std::size_t i = 0; i < ordered.size(); ++i) {
    if (i) joined += " and ";
    joined += vocabulary.name(ordered[i]);
  }
  const std::string& tpl = options.template_text;
  if (tpl.empty() || tpl == "{}") return joined;
  const auto slot = tpl.find("{}");
  if (slot == std::string::npos) return tpl + " " + joined;
  return tpl.substr(0, slot) + joined + tpl.substr(slot + 2);
}

PromptSet make_prompt_set(std::string video_id, const ClassSet& label_set,
                          const EventVocabulary& vocabulary,
                          const PromptOptions& options) {
  PromptSet set;
  set.subsets = enumerate_subsets(label_set, options.subset_cap, video_id);
  set.rendered.reserve(set.subsets.size());
  for (const auto& s : set.subsets)
    set.rendered.push_back(render_prompt(s, vocabulary, options));
  set.video_id = std::move(video_id);
  return set;
}

}  // namespace lsld::prompts
