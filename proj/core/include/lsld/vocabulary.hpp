#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace lsld {

/// Class index within an EventVocabulary; the canonical class identity.
using ClassIndex = int;

/// Sorted, duplicate-free set of class indices.
using ClassSet = std::vector<ClassIndex>;

enum class Modality { audio, visual };

std::string_view to_string(Modality m);
Modality parse_modality(std::string_view text);

/// Ordered list of distinct event class names.
class EventVocabulary {
 public:
  EventVocabulary() = default;
  explicit EventVocabulary(std::vector<std::string> classes);

  std::size_t size() const { return classes_.size(); }
  const std::string& name(ClassIndex c) const;
  const std::vector<std::string>& names() const { return classes_; }

  std::optional<ClassIndex> find(std::string_view name) const;
  /// Throws FormatError when the name is unknown.
  ClassIndex index_of(std::string_view name) const;

  /// One class name per line.
  static EventVocabulary load(const std::filesystem::path& path);
  void save(const std::filesystem::path& path) const;

  friend bool operator==(const EventVocabulary& a, const EventVocabulary& b) {
    return a.classes_ == b.classes_;
  }

 private:
  std::vector<std::string> classes_;
  std::unordered_map<std::string, ClassIndex> lookup_;
};

/// Sorts and deduplicates in place, returning the canonical ClassSet.
ClassSet make_class_set(std::vector<ClassIndex> classes);

}  // namespace lsld
