#include "lsld/synth.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <set>

#include <Eigen/QR>

#include "lsld/error.hpp"

namespace lsld::synth {
namespace {

using Eigen::MatrixXd;

// Independent random streams derived from the user seed.
enum Stream : std::uint64_t {
  kAudioPrototypes = 1,
  kVisualPrototypes = 2,
  kEvents = 3,
  kNoise = 4,
};

std::uint64_t derive(std::uint64_t seed, Stream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  std::uint32_t out[2];
  seq.generate(out, out + 2);
  return (static_cast<std::uint64_t>(out[0]) << 32) | out[1];
}

const char* const kLlpClasses[] = {
    "Speech",           "Car",           "Cheering",       "Dog",
    "Cat",              "Frying_(food)", "Basketball_bounce", "Fire_alarm",
    "Chainsaw",         "Cello",         "Banjo",          "Singing",
    "Chicken_rooster",  "Violin_fiddle", "Vacuum_cleaner", "Baby_laughter",
    "Accordion",        "Lawn_mower",    "Motorcycle",     "Helicopter",
    "Acoustic_guitar",  "Telephone_bell_ringing", "Baby_cry_infant_cry",
    "Blender",          "Clapping"};

std::string video_id(int i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "synth_%05d", i);
  return buf;
}

PromptTable build_prompt_table(const std::vector<PlantedVideo>& planted,
                               const EventVocabulary& vocabulary,
                               const MatrixXd& prototypes,
                               const SynthConfig& config) {
  std::set<ClassSet> subsets;
  for (ClassIndex c = 0; c < static_cast<ClassIndex>(vocabulary.size()); ++c)
    subsets.insert({c});
  for (const auto& v : planted)
    for (auto& s : prompts::enumerate_subsets(v.label_set, config.prompt_options.subset_cap, v.id))
      if (!s.empty()) subsets.insert(std::move(s));

  FeatureMatrix matrix(static_cast<Eigen::Index>(subsets.size() + 1), prototypes.cols());
  std::unordered_map<std::string, int> index;
  matrix.row(0) = subset_embedding({}, prototypes).cast<float>();
  for (const auto& token : config.none_tokens) index.emplace(token, 0);
  index.emplace(config.prompt_options.none_token, 0);
  int row = 1;
  for (const auto& s : subsets) {
    matrix.row(row) = subset_embedding(s, prototypes).cast<float>();
    index.emplace(prompts::render_prompt(s, vocabulary, config.prompt_options), row);
    ++row;
  }
  return PromptTable(std::move(index), std::move(matrix));
}

}  // namespace

void SynthConfig::validate() const {
  if (videos <= 0 || classes <= 0 || segments <= 0)
    throw ValidationError("videos, classes and segments must be positive");
  if (d_audio < classes + 1 || d_visual < classes + 1)
    throw ValidationError("embedding dim must be at least classes + 1 (" +
                          std::to_string(classes + 1) + ")");
  if (!(noise >= 0.0)) throw ValidationError("noise must be non-negative");
  if (!(p_on >= 0.0 && p_on <= 1.0) || !(p_stay >= 0.0 && p_stay <= 1.0))
    throw ValidationError("p_on and p_stay must lie in [0,1]");
  if (max_classes <= 0) throw ValidationError("max_classes must be positive");
  if (static_cast<std::size_t>(std::min(max_classes, classes)) > prompt_options.subset_cap)
    throw ValidationError("max_classes exceeds the prompt subset cap");
}

MatrixXd make_prototypes(int classes, int dim, std::uint64_t seed) {
  if (dim < classes + 1)
    throw ValidationError("cannot place " + std::to_string(classes + 1) +
                          " orthonormal prototypes in dimension " + std::to_string(dim));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  MatrixXd gaussian(dim, classes + 1);
  for (Eigen::Index j = 0; j < gaussian.cols(); ++j)
    for (Eigen::Index i = 0; i < gaussian.rows(); ++i) gaussian(i, j) = normal(rng);
  Eigen::HouseholderQR<MatrixXd> qr(gaussian);
  const MatrixXd q = qr.householderQ() * MatrixXd::Identity(dim, classes + 1);
  return q.transpose();
}

std::vector<PlantedVideo> plant_events(const SynthConfig& config) {
  config.validate();
  std::mt19937_64 rng(derive(config.seed, kEvents));
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<PlantedVideo> out;
  out.reserve(static_cast<std::size_t>(config.videos));
  std::vector<ClassIndex> pool(static_cast<std::size_t>(config.classes));
  for (int i = 0; i < config.videos; ++i) {
    PlantedVideo v;
    v.id = video_id(i);
    std::iota(pool.begin(), pool.end(), 0);
    const int k = std::min(config.max_classes, config.classes);
    for (int j = 0; j < k; ++j) {
      std::uniform_int_distribution<int> pick(j, config.classes - 1);
      std::swap(pool[static_cast<std::size_t>(j)], pool[static_cast<std::size_t>(pick(rng))]);
    }
    std::vector<ClassIndex> candidates(pool.begin(), pool.begin() + k);
    std::sort(candidates.begin(), candidates.end());
    std::vector<ClassIndex> present;
    for (auto& track : v.presence) {
      track = MatrixXd::Zero(config.segments, config.classes);
      for (ClassIndex c : candidates) {
        bool on = false;
        for (int t = 0; t < config.segments; ++t) {
          on = unit(rng) < (on ? config.p_stay : config.p_on);
          if (on) {
            track(t, c) = 1.0;
            present.push_back(c);
          }
        }
      }
    }
    v.label_set = make_class_set(std::move(present));
    out.push_back(std::move(v));
  }
  return out;
}

Eigen::RowVectorXd subset_embedding(const ClassSet& subset, const MatrixXd& prototypes) {
  if (subset.empty()) return prototypes.row(prototypes.rows() - 1);
  Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(prototypes.cols());
  for (ClassIndex c : subset) sum += prototypes.row(c);
  return sum / sum.norm();
}

FeatureMatrix embed_segments(const MatrixXd& presence, const MatrixXd& prototypes,
                             double noise, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  FeatureMatrix out(presence.rows(), prototypes.cols());
  for (Eigen::Index t = 0; t < presence.rows(); ++t) {
    ClassSet present;
    for (Eigen::Index c = 0; c < presence.cols(); ++c)
      if (presence(t, c) > 0.5) present.push_back(static_cast<ClassIndex>(c));
    Eigen::RowVectorXd e = subset_embedding(present, prototypes);
    if (noise > 0.0) {
      for (Eigen::Index j = 0; j < e.size(); ++j) e(j) += noise * normal(rng);
      e /= e.norm();
    }
    out.row(t) = e.cast<float>();
  }
  return out;
}

EventVocabulary default_vocabulary(int classes) {
  std::vector<std::string> names;
  constexpr int known = static_cast<int>(std::size(kLlpClasses));
  for (int c = 0; c < classes; ++c)
    names.push_back(c < known ? std::string(kLlpClasses[c]) : "Event_" + std::to_string(c));
  return EventVocabulary(std::move(names));
}

SynthDataset generate(const SynthConfig& config) {
  config.validate();
  SynthDataset ds;
  ds.planted = plant_events(config);
  auto& bank = ds.bank;
  bank.vocabulary = default_vocabulary(config.classes);
  bank.d_audio = config.d_audio;
  bank.d_visual = config.d_visual;
  bank.d_text_audio = config.d_audio;
  bank.d_text_visual = config.d_visual;
  const MatrixXd audio_protos =
      make_prototypes(config.classes, config.d_audio, derive(config.seed, kAudioPrototypes));
  const MatrixXd visual_protos =
      make_prototypes(config.classes, config.d_visual, derive(config.seed, kVisualPrototypes));
  std::mt19937_64 noise_rng(derive(config.seed, kNoise));
  for (const auto& p : ds.planted) {
    VideoRecord v;
    v.id = p.id;
    v.segments = config.segments;
    v.label_set = p.label_set;
    v.audio_file = "audio/" + p.id + ".bin";
    v.visual_file = "visual/" + p.id + ".bin";
    v.audio = embed_segments(p.presence[0], audio_protos, config.noise, noise_rng);
    v.visual = embed_segments(p.presence[1], visual_protos, config.noise, noise_rng);
    bank.videos.push_back(std::move(v));
    for (int m = 0; m < 2; ++m) {
      const Modality mod = m == 0 ? Modality::audio : Modality::visual;
      ds.ground_truth.track(mod).emplace(
          p.id, SegmentLabelTensor{p.id, mod, LabelKind::ground_truth, p.presence[m]});
    }
  }
  bank.prompt_table_audio = build_prompt_table(ds.planted, bank.vocabulary, audio_protos, config);
  bank.prompt_table_visual = build_prompt_table(ds.planted, bank.vocabulary, visual_protos, config);
  return ds;
}

SynthDataset gen_dataset(const SynthConfig& config, const std::filesystem::path& outdir) {
  SynthDataset ds = generate(config);
  save_bank(outdir, ds.bank);
  write_annotations(outdir / BankLayout::annotations, ds.ground_truth, ds.bank.vocabulary);
  return ds;
}

}  // namespace lsld::synth
