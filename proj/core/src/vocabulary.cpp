#include "lsld/vocabulary.hpp"

#include <algorithm>
#include <fstream>

#include "lsld/error.hpp"

namespace lsld {

std::string_view to_string(Modality m) {
  return m == Modality::audio ? "audio" : "visual";
}

Modality parse_modality(std::string_view text) {
  if (text == "audio") return Modality::audio;
  if (text == "visual") return Modality::visual;
  throw FormatError("unknown modality '" + std::string(text) + "'");
}

EventVocabulary::EventVocabulary(std::vector<std::string> classes)
    : classes_(std::move(classes)) {
  if (classes_.empty()) throw FormatError("event vocabulary is empty");
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    if (classes_[i].empty())
      throw FormatError("event vocabulary entry " + std::to_string(i) +
                        " is empty");
    auto [it, inserted] =
        lookup_.emplace(classes_[i], static_cast<ClassIndex>(i));
    if (!inserted)
      throw FormatError("duplicate class name '" + classes_[i] +
                        "' in event vocabulary");
  }
}

const std::string& EventVocabulary::name(ClassIndex c) const {
  if (c < 0 || static_cast<std::size_t>(c) >= classes_.size())
    throw FormatError("class index " + std::to_string(c) +
                      " outside vocabulary of size " +
                      std::to_string(classes_.size()));
  return classes_[static_cast<std::size_t>(c)];
}

std::optional<ClassIndex> EventVocabulary::find(std::string_view name) const {
  auto it = lookup_.find(std::string(name));
  if (it == lookup_.end()) return std::nullopt;
  return it->second;
}

ClassIndex EventVocabulary::index_of(std::string_view name) const {
  if (auto c = find(name)) return *c;
  throw FormatError("class '" + std::string(name) +
                    "' is not in the event vocabulary");
}

EventVocabulary EventVocabulary::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open vocabulary file " + path.string());
  std::vector<std::string> names;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    names.push_back(line);
  }
  return EventVocabulary(std::move(names));
}

void EventVocabulary::save(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write vocabulary file " + path.string());
  for (const auto& n : classes_) out << n << '\n';
  if (!out) throw FormatError("write failed for " + path.string());
}

ClassSet make_class_set(std::vector<ClassIndex> classes) {
  std::sort(classes.begin(), classes.end());
  classes.erase(std::unique(classes.begin(), classes.end()), classes.end());
  return classes;
}

}  // namespace lsld
