#include "lsld/bank.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "lsld/array_io.hpp"
#include "lsld/csv.hpp"
#include "lsld/error.hpp"

namespace lsld {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
}

template <class T>
T field(const json& obj, const char* key, const std::string& where) {
  if (!obj.is_object() || !obj.contains(key))
    throw FormatError(where + ": missing field '" + key + "'");
  try {
    return obj.at(key).get<T>();
  } catch (const json::exception& e) {
    throw FormatError(where + ": field '" + key + "': " + e.what());
  }
}

FeatureMatrix read_matrix(const fs::path& path) {
  Array a = read_array(path);
  if (a.shape.size() != 2)
    throw FormatError(path.string() + ": expected a rank-2 array, found rank " +
                      std::to_string(a.shape.size()));
  FeatureMatrix m(a.shape[0], a.shape[1]);
  std::copy(a.data.begin(), a.data.end(), m.data());
  return m;
}

void write_matrix(const fs::path& path, const FeatureMatrix& m) {
  const std::uint32_t shape[2] = {static_cast<std::uint32_t>(m.rows()),
                                  static_cast<std::uint32_t>(m.cols())};
  write_array(path, shape, std::span<const float>(m.data(), m.size()));
}

PromptTable load_prompt_table(const fs::path& dir, const json& spec,
                              const std::string& where, int expected_dim) {
  const auto index_file = field<std::string>(spec, "index_file", where);
  const auto matrix_file = field<std::string>(spec, "matrix_file", where);
  const json index_json = read_json(dir / index_file);
  if (!index_json.is_object())
    throw FormatError(index_file + ": prompt index must be a JSON object");
  FeatureMatrix matrix = read_matrix(dir / matrix_file);
  if (matrix.cols() != expected_dim)
    throw FormatError(matrix_file + ": prompt embedding dim " +
                      std::to_string(matrix.cols()) +
                      " disagrees with manifest dim " +
                      std::to_string(expected_dim));
  std::unordered_map<std::string, int> index;
  for (const auto& [prompt, row] : index_json.items()) {
    if (!row.is_number_integer())
      throw FormatError(index_file + ": row for prompt '" + prompt +
                        "' is not an integer");
    const int r = row.get<int>();
    if (r < 0 || r >= matrix.rows())
      throw FormatError(index_file + ": row " + std::to_string(r) +
                        " for prompt '" + prompt + "' outside matrix of " +
                        std::to_string(matrix.rows()) + " rows");
    index.emplace(prompt, r);
  }
  return PromptTable(std::move(index), std::move(matrix));
}

void save_prompt_table(const fs::path& dir, const PromptTable& table,
                       const std::string& stem) {
  json index = json::object();
  for (const auto& [prompt, row] : table.index()) index[prompt] = row;
  std::ofstream out(dir / (stem + ".json"), std::ios::binary);
  out << index.dump(1) << '\n';
  if (!out) throw FormatError("write failed for " + (dir / (stem + ".json")).string());
  write_matrix(dir / (stem + ".bin"), table.matrix());
}

}  // namespace

bool VideoRecord::has_label(ClassIndex c) const {
  return std::binary_search(label_set.begin(), label_set.end(), c);
}

PromptTable::PromptTable(std::unordered_map<std::string, int> index,
                         FeatureMatrix matrix)
    : index_(std::move(index)), matrix_(std::move(matrix)) {}

std::optional<int> PromptTable::find(const std::string& prompt) const {
  auto it = index_.find(prompt);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

int PromptTable::row_of(const std::string& prompt) const {
  if (auto r = find(prompt)) return *r;
  throw FormatError("prompt table has no row for \"" + prompt + "\"");
}

std::optional<std::size_t> FeatureBank::find_video(const std::string& id) const {
  for (std::size_t i = 0; i < videos.size(); ++i)
    if (videos[i].id == id) return i;
  return std::nullopt;
}

std::vector<std::pair<std::string, ClassSet>> read_weak_labels(
    const fs::path& path, const EventVocabulary& vocabulary) {
  std::vector<std::pair<std::string, ClassSet>> out;
  for (const auto& row : csv::read(path, {"filename", "labels"})) {
    std::vector<ClassIndex> classes;
    if (!row[1].empty()) {
      for (const auto& name : csv::split(row[1])) {
        if (auto c = vocabulary.find(name)) {
          classes.push_back(*c);
        } else {
          throw FormatError(path.string() + ": video '" + row[0] +
                            "' names class '" + name +
                            "' which is not in the event vocabulary");
        }
      }
    }
    const std::size_t named = classes.size();
    ClassSet set = make_class_set(std::move(classes));
    if (set.size() != named)
      throw FormatError(path.string() + ": video '" + row[0] +
                        "' repeats a class in its weak label");
    out.emplace_back(row[0], std::move(set));
  }
  return out;
}

void write_weak_labels(const fs::path& path, const FeatureBank& bank) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw FormatError("cannot write " + path.string());
  out << "filename,labels\n";
  for (const auto& v : bank.videos) {
    std::string names;
    for (std::size_t i = 0; i < v.label_set.size(); ++i) {
      if (i) names += ',';
      names += bank.vocabulary.name(v.label_set[i]);
    }
    out << csv::escape(v.id) << ',' << csv::escape(names) << '\n';
  }
  if (!out) throw FormatError("write failed for " + path.string());
}

FeatureBank load_bank(const fs::path& dir,
                      const prompts::PromptOptions& options) {
  const fs::path manifest_path = dir / BankLayout::manifest;
  const json manifest = read_json(manifest_path);
  const std::string where = manifest_path.string();

  const int version = field<int>(manifest, "version", where);
  if (version != kManifestVersion)
    throw FormatError(where + ": unsupported manifest version " +
                      std::to_string(version));

  FeatureBank bank;
  bank.d_audio = field<int>(manifest, "d_audio", where);
  bank.d_visual = field<int>(manifest, "d_visual", where);
  bank.d_text_audio = field<int>(manifest, "d_text_audio", where);
  bank.d_text_visual = field<int>(manifest, "d_text_visual", where);
  for (int d : {bank.d_audio, bank.d_visual, bank.d_text_audio, bank.d_text_visual})
    if (d <= 0) throw FormatError(where + ": embedding dims must be positive");

  const std::string vocab_file =
      manifest.value("vocabulary_file", std::string(BankLayout::vocabulary));
  bank.vocabulary = EventVocabulary::load(dir / vocab_file);

  std::unordered_map<std::string, ClassSet> weak;
  for (auto& [id, set] : read_weak_labels(dir / BankLayout::labels, bank.vocabulary)) {
    if (!weak.emplace(id, std::move(set)).second)
      throw FormatError(std::string(BankLayout::labels) + ": duplicate video '" +
                        id + "'");
  }

  const auto& videos = manifest.contains("videos") ? manifest.at("videos") : json();
  if (!videos.is_array()) throw FormatError(where + ": 'videos' must be an array");
  std::set<std::string> seen;
  for (const auto& entry : videos) {
    VideoRecord v;
    v.id = field<std::string>(entry, "id", where);
    const std::string vwhere = where + ": video '" + v.id + "'";
    if (!seen.insert(v.id).second)
      throw FormatError(vwhere + " listed twice");
    v.segments = field<int>(entry, "T", vwhere);
    if (v.segments <= 0) throw FormatError(vwhere + ": T must be positive");
    v.audio_file = field<std::string>(entry, "audio_file", vwhere);
    v.visual_file = field<std::string>(entry, "visual_file", vwhere);
    v.audio = read_matrix(dir / v.audio_file);
    v.visual = read_matrix(dir / v.visual_file);
    if (v.audio.rows() != v.segments || v.visual.rows() != v.segments)
      throw FormatError("shape error for video '" + v.id + "': T=" +
                        std::to_string(v.segments) + " but audio has " +
                        std::to_string(v.audio.rows()) + " rows and visual has " +
                        std::to_string(v.visual.rows()));
    if (v.audio.cols() != bank.d_audio || v.visual.cols() != bank.d_visual)
      throw FormatError("shape error for video '" + v.id +
                        "': feature dims disagree with the manifest");
    auto it = weak.find(v.id);
    if (it == weak.end())
      throw FormatError("video '" + v.id + "' has no entry in labels.csv");
    v.label_set = it->second;
    weak.erase(it);
    bank.videos.push_back(std::move(v));
  }
  for (const auto& [id, set] : weak)
    bank.warnings.push_back("labels.csv names video '" + id +
                            "' which is not in the manifest");
  std::sort(bank.warnings.begin(), bank.warnings.end());

  bank.prompt_table_audio =
      load_prompt_table(dir, manifest.value("prompt_table_audio", json()),
                        where + ": prompt_table_audio", bank.d_text_audio);
  bank.prompt_table_visual =
      load_prompt_table(dir, manifest.value("prompt_table_visual", json()),
                        where + ": prompt_table_visual", bank.d_text_visual);

  for (const auto& v : bank.videos) {
    const auto set = prompts::make_prompt_set(v.id, v.label_set, bank.vocabulary, options);
    for (const auto& text : set.rendered) {
      for (Modality m : {Modality::audio, Modality::visual}) {
        if (!bank.prompt_table(m).find(text))
          throw FormatError("completeness error: " + std::string(to_string(m)) +
                            " prompt table has no row for \"" + text +
                            "\" needed by video '" + v.id + "'");
      }
    }
  }
  return bank;
}

void save_bank(const fs::path& dir, const FeatureBank& bank) {
  fs::create_directories(dir);
  json manifest;
  manifest["version"] = kManifestVersion;
  manifest["d_audio"] = bank.d_audio;
  manifest["d_visual"] = bank.d_visual;
  manifest["d_text_audio"] = bank.d_text_audio;
  manifest["d_text_visual"] = bank.d_text_visual;
  manifest["vocabulary_file"] = BankLayout::vocabulary;
  json videos = json::array();
  for (const auto& v : bank.videos) {
    for (const auto& file : {v.audio_file, v.visual_file})
      fs::create_directories((dir / file).parent_path());
    write_matrix(dir / v.audio_file, v.audio);
    write_matrix(dir / v.visual_file, v.visual);
    videos.push_back({{"id", v.id},
                      {"T", v.segments},
                      {"audio_file", v.audio_file},
                      {"visual_file", v.visual_file}});
  }
  manifest["videos"] = std::move(videos);
  manifest["prompt_table_audio"] = {{"index_file", "prompts_audio.json"},
                                    {"matrix_file", "prompts_audio.bin"}};
  manifest["prompt_table_visual"] = {{"index_file", "prompts_visual.json"},
                                     {"matrix_file", "prompts_visual.bin"}};
  save_prompt_table(dir, bank.prompt_table_audio, "prompts_audio");
  save_prompt_table(dir, bank.prompt_table_visual, "prompts_visual");
  bank.vocabulary.save(dir / BankLayout::vocabulary);
  write_weak_labels(dir / BankLayout::labels, bank);
  std::ofstream out(dir / BankLayout::manifest, std::ios::binary);
  out << manifest.dump(2) << '\n';
  if (!out) throw FormatError("write failed for manifest in " + dir.string());
}

}  // namespace lsld
