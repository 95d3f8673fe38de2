#include "lsld/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "lsld/error.hpp"

namespace lsld::model {
namespace {

using Eigen::MatrixXd;

struct AdamState {
  Parameters first, second;
  long long step = 0;
};

constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kAdamEps = 1e-8;

void adam_update(Parameters& params, const Parameters& grad, AdamState& adam, double lr) {
  ++adam.step;
  const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(adam.step));
  const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(adam.step));
  std::vector<MatrixXd*> p, m, v;
  std::vector<const MatrixXd*> g;
  params.visit([&](const std::string&, MatrixXd& x) { p.push_back(&x); });
  adam.first.visit([&](const std::string&, MatrixXd& x) { m.push_back(&x); });
  adam.second.visit([&](const std::string&, MatrixXd& x) { v.push_back(&x); });
  grad.visit([&](const std::string&, const MatrixXd& x) { g.push_back(&x); });
  for (std::size_t i = 0; i < p.size(); ++i) {
    *m[i] = kBeta1 * *m[i] + (1.0 - kBeta1) * *g[i];
    *v[i] = kBeta2 * *v[i] + (1.0 - kBeta2) * g[i]->cwiseAbs2();
    p[i]->array() -= lr * (m[i]->array() / c1) /
                     ((v[i]->array() / c2).sqrt() + kAdamEps);
  }
}

std::vector<std::size_t> all_or(const FeatureBank& bank,
                                 const std::vector<std::size_t>& subset) {
  if (!subset.empty()) return subset;
  std::vector<std::size_t> all(bank.videos.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return all;
}

}  // namespace

TrainingMode parse_training_mode(std::string_view text) {
  if (text == "video") return TrainingMode::video;
  if (text == "denoised") return TrainingMode::denoised;
  if (text == "reweighted") return TrainingMode::reweighted;
  throw ValidationError("unknown training mode '" + std::string(text) + "'");
}

std::string_view to_string(TrainingMode mode) {
  switch (mode) {
    case TrainingMode::video: return "video";
    case TrainingMode::denoised: return "denoised";
    case TrainingMode::reweighted: return "reweighted";
  }
  return "?";
}

double learning_rate_at(const ModelConfig& config, int epoch) {
  const int drops = std::max(0, epoch - 1) / config.decay_period;
  return config.learning_rate * std::pow(config.lr_decay, drops);
}

VideoTargets make_targets(const FeatureBank& bank, const VideoRecord& video,
                          TrainingMode mode, const TrackLabels* labels,
                          double label_smoothing) {
  const auto C = static_cast<Eigen::Index>(bank.num_classes());
  VideoTargets t;
  t.weak = Eigen::RowVectorXd::Zero(C);
  for (ClassIndex c : video.label_set) t.weak(c) = 1.0;
  if (mode == TrainingMode::video) {
    const Eigen::RowVectorXd smooth = label_smooth(t.weak, label_smoothing);
    t.audio = smooth;
    t.visual = smooth;
    return t;
  }
  if (labels == nullptr)
    throw ValidationError("training mode '" + std::string(to_string(mode)) +
                          "' needs segment labels");
  t.segment_level = true;
  for (Modality m : {Modality::audio, Modality::visual}) {
    auto it = labels->track(m).find(video.id);
    if (it == labels->track(m).end())
      throw ValidationError("no " + std::string(lsld::to_string(m)) +
                            " labels for training video '" + video.id + "'");
    const MatrixXd& y = it->second.values;
    if (y.rows() != video.segments || y.cols() != C)
      throw ValidationError("labels of video '" + video.id + "' have the wrong shape");
    (m == Modality::audio ? t.audio : t.visual) = y;
  }
  return t;
}

TrainResult train(const FeatureBank& bank, TrainingMode mode,
                  const TrackLabels* labels, const ModelConfig& config,
                  const std::vector<std::size_t>& video_subset) {
  TrainResult result;
  result.state = init_model(config);
  auto& state = result.state;
  const auto order_base = all_or(bank, video_subset);
  if (order_base.empty()) throw ValidationError("no videos to train on");

  std::vector<MatrixXd> audio, visual;
  std::vector<VideoTargets> targets;
  for (std::size_t i : order_base) {
    const auto& v = bank.videos.at(i);
    audio.push_back(v.audio.cast<double>());
    visual.push_back(v.visual.cast<double>());
    targets.push_back(make_targets(bank, v, mode, labels, config.label_smoothing));
  }

  AdamState adam{state.params.zeros_like(), state.params.zeros_like(), 0};
  std::mt19937_64 rng(config.seed + 1);
  std::vector<std::size_t> order(order_base.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  const auto batch = static_cast<std::size_t>(config.batch_size);

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    const double lr = learning_rate_at(config, epoch);
    double epoch_sum = 0.0;
    for (std::size_t start = 0, b = 0; start < order.size(); start += batch, ++b) {
      const std::size_t end = std::min(order.size(), start + batch);
      Parameters grad = state.params.zeros_like();
      double batch_sum = 0.0;
      for (std::size_t k = start; k < end; ++k) {
        const std::size_t i = order[k];
        batch_sum += loss_and_gradient(state, audio[i], visual[i], targets[i], grad);
      }
      if (!std::isfinite(batch_sum))
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) +
                           ", batch " + std::to_string(b));
      const double scale = 1.0 / static_cast<double>(end - start);
      grad.visit([&](const std::string&, MatrixXd& g) { g *= scale; });
      adam_update(state.params, grad, adam, lr);
      epoch_sum += batch_sum;
    }
    result.epoch_loss.push_back(epoch_sum / static_cast<double>(order.size()));
    state.epoch = epoch;
  }
  return result;
}

TrackLabels predict(const ModelState& state, const FeatureBank& bank,
                    const std::vector<std::size_t>& video_subset) {
  TrackLabels out;
  for (std::size_t i : all_or(bank, video_subset)) {
    const auto& v = bank.videos.at(i);
    const ForwardOutput f = forward(state, v.audio.cast<double>(), v.visual.cast<double>());
    out.audio.emplace(v.id, SegmentLabelTensor{v.id, Modality::audio, LabelKind::prediction,
                                               f.segment_probs[0]});
    out.visual.emplace(v.id, SegmentLabelTensor{v.id, Modality::visual, LabelKind::prediction,
                                                f.segment_probs[1]});
  }
  return out;
}

ModelConfig config_for(const FeatureBank& bank, ModelConfig base) {
  base.d_audio = bank.d_audio;
  base.d_visual = bank.d_visual;
  base.num_classes = static_cast<int>(bank.num_classes());
  return base;
}

}  // namespace lsld::model
