#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include <Eigen/Core>

#include "lsld/prompts.hpp"
#include "lsld/vocabulary.hpp"

namespace lsld {

/// Segment or prompt embeddings, one row per segment/prompt, as stored on disk.
using FeatureMatrix =
    Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct VideoRecord {
  std::string id;
  int segments = 0;
  /// The video-level weak label.
  ClassSet label_set;
  std::string audio_file;
  std::string visual_file;
  FeatureMatrix audio;
  FeatureMatrix visual;

  const FeatureMatrix& features(Modality m) const {
    return m == Modality::audio ? audio : visual;
  }
  bool has_label(ClassIndex c) const;
};

/// Rendered prompt string -> row of a P x d text-embedding matrix. Several
/// strings may share a row.
class PromptTable {
 public:
  PromptTable() = default;
  PromptTable(std::unordered_map<std::string, int> index, FeatureMatrix matrix);

  std::optional<int> find(const std::string& prompt) const;
  /// Throws FormatError naming the prompt when it has no row.
  int row_of(const std::string& prompt) const;
  int dim() const { return static_cast<int>(matrix_.cols()); }
  int rows() const { return static_cast<int>(matrix_.rows()); }
  const FeatureMatrix& matrix() const { return matrix_; }
  const std::unordered_map<std::string, int>& index() const { return index_; }

 private:
  std::unordered_map<std::string, int> index_;
  FeatureMatrix matrix_;
};

/// Immutable after loading; safe for concurrent reads.
struct FeatureBank {
  EventVocabulary vocabulary;
  std::vector<VideoRecord> videos;
  int d_audio = 0;
  int d_visual = 0;
  int d_text_audio = 0;
  int d_text_visual = 0;
  PromptTable prompt_table_audio;
  PromptTable prompt_table_visual;
  /// Non-fatal findings from load_bank; empty for a clean bank.
  std::vector<std::string> warnings;

  std::size_t num_classes() const { return vocabulary.size(); }
  const PromptTable& prompt_table(Modality m) const {
    return m == Modality::audio ? prompt_table_audio : prompt_table_visual;
  }
  std::optional<std::size_t> find_video(const std::string& id) const;
};

/// File names inside a bank directory.
struct BankLayout {
  static constexpr const char* manifest = "manifest.json";
  static constexpr const char* vocabulary = "vocabulary.txt";
  static constexpr const char* labels = "labels.csv";
  static constexpr const char* annotations = "annotations.csv";
};

inline constexpr int kManifestVersion = 1;

/// Loads and validates a bank directory. Every video invariant is checked
/// eagerly, and every subset prompt of every weak label must resolve in both
/// prompt tables under `options`.
FeatureBank load_bank(const std::filesystem::path& dir,
                      const prompts::PromptOptions& options = {});

/// Writes manifest, vocabulary, labels.csv, per-video arrays and prompt tables.
/// Array files are written under the names recorded in each VideoRecord.
void save_bank(const std::filesystem::path& dir, const FeatureBank& bank);

/// labels.csv: `filename,labels` with the class names in one quoted field.
std::vector<std::pair<std::string, ClassSet>> read_weak_labels(
    const std::filesystem::path& path, const EventVocabulary& vocabulary);
void write_weak_labels(const std::filesystem::path& path,
                       const FeatureBank& bank);

}  // namespace lsld
