#include "lsld/model.hpp"

#include <cmath>
#include <fstream>
#include <random>

#include <json.hpp>

#include "lsld/array_io.hpp"
#include "lsld/error.hpp"

namespace lsld::model {
namespace {

using Eigen::MatrixXd;
using Eigen::RowVectorXd;

constexpr int kAudio = 0;
constexpr int kVisual = 1;

MatrixXd sigmoid(const MatrixXd& x) {
  return (1.0 + (-x.array()).exp()).inverse().matrix();
}

MatrixXd softmax_rows(const MatrixXd& s) {
  MatrixXd out(s.rows(), s.cols());
  for (Eigen::Index r = 0; r < s.rows(); ++r) {
    const auto e = (s.row(r).array() - s.row(r).maxCoeff()).exp();
    out.row(r) = e / e.sum();
  }
  return out;
}

MatrixXd softmax_cols(const MatrixXd& s) {
  return softmax_rows(s.transpose()).transpose();
}

MatrixXd affine(const MatrixXd& x, const MatrixXd& w, const MatrixXd& b) {
  return (x * w).rowwise() + b.row(0);
}

struct AttentionCache {
  MatrixXd query, key, value, probs;
};

/// Single-head scaled dot-product attention of `queries` over `context`.
MatrixXd attend(const MatrixXd& queries, const MatrixXd& context, const MatrixXd& wq,
                const MatrixXd& wk, const MatrixXd& wv, AttentionCache& cache) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(wq.cols()));
  cache.query = queries * wq;
  cache.key = context * wk;
  cache.value = context * wv;
  cache.probs = softmax_rows(scale * cache.query * cache.key.transpose());
  return cache.probs * cache.value;
}

/// Accumulates gradients of attend() given d(output).
void attend_backward(const MatrixXd& queries, const MatrixXd& context,
                     const MatrixXd& wq, const MatrixXd& wk, const MatrixXd& wv,
                     const AttentionCache& cache, const MatrixXd& d_out,
                     MatrixXd& d_queries, MatrixXd& d_context, MatrixXd& d_wq,
                     MatrixXd& d_wk, MatrixXd& d_wv) {
  const double scale = 1.0 / std::sqrt(static_cast<double>(wq.cols()));
  const MatrixXd d_probs = d_out * cache.value.transpose();
  const MatrixXd d_value = cache.probs.transpose() * d_out;
  const Eigen::VectorXd row_dot = (d_probs.array() * cache.probs.array()).rowwise().sum();
  const MatrixXd d_scores =
      (cache.probs.array() * (d_probs.colwise() - row_dot).array()).matrix();
  const MatrixXd d_query = scale * d_scores * cache.key;
  const MatrixXd d_key = scale * d_scores.transpose() * cache.query;
  d_wq += queries.transpose() * d_query;
  d_wk += context.transpose() * d_key;
  d_wv += context.transpose() * d_value;
  d_queries += d_query * wq.transpose();
  d_context += d_key * wk.transpose() + d_value * wv.transpose();
}

struct Cache {
  std::array<MatrixXd, kModalities> projected;   // X_m
  std::array<MatrixXd, kModalities> after_self;  // Y_m
  std::array<MatrixXd, kModalities> hidden;      // Z_m
  std::array<AttentionCache, kModalities> self_attn, cross_attn;
  std::array<MatrixXd, kModalities> modality_probs;  // softmax over m
  std::array<MatrixXd, kModalities> joint_raw;
  RowVectorXd joint_norm;
  ForwardOutput out;
};

Cache run_forward(const ModelState& state, const MatrixXd& audio, const MatrixXd& visual) {
  const auto& cfg = state.config;
  const auto& p = state.params;
  if (audio.cols() != cfg.d_audio || visual.cols() != cfg.d_visual ||
      audio.rows() != visual.rows() || audio.rows() == 0)
    throw ValidationError("forward: expected T x " + std::to_string(cfg.d_audio) +
                          " audio and T x " + std::to_string(cfg.d_visual) +
                          " visual features, got " + std::to_string(audio.rows()) +
                          "x" + std::to_string(audio.cols()) + " and " +
                          std::to_string(visual.rows()) + "x" +
                          std::to_string(visual.cols()));
  Cache c;
  c.projected[kAudio] = affine(audio, p.proj_audio, p.proj_audio_bias);
  c.projected[kVisual] = affine(visual, p.proj_visual, p.proj_visual_bias);
  if (cfg.attention) {
    for (int m = 0; m < kModalities; ++m)
      c.after_self[m] = c.projected[m] + attend(c.projected[m], c.projected[m],
                                                p.self_query[m], p.self_key[m],
                                                p.self_value[m], c.self_attn[m]);
    for (int m = 0; m < kModalities; ++m) {
      const int other = 1 - m;
      c.hidden[m] = c.after_self[m] + attend(c.after_self[m], c.after_self[other],
                                             p.cross_query[m], p.cross_key[m],
                                             p.cross_value[m], c.cross_attn[m]);
    }
  } else {
    c.after_self = c.projected;
    c.hidden = c.projected;
  }

  auto& out = c.out;
  std::array<MatrixXd, kModalities> modality_logits;
  for (int m = 0; m < kModalities; ++m) {
    out.segment_probs[m] = sigmoid(affine(c.hidden[m], p.classifier, p.classifier_bias));
    out.temporal_weights[m] = softmax_cols(affine(c.hidden[m], p.temporal, p.temporal_bias));
    modality_logits[m] = affine(c.hidden[m], p.modality, p.modality_bias);
  }
  // Two-way softmax over modalities per (t, c).
  const MatrixXd shift = modality_logits[kAudio].cwiseMax(modality_logits[kVisual]);
  const MatrixXd ea = (modality_logits[kAudio] - shift).array().exp();
  const MatrixXd ev = (modality_logits[kVisual] - shift).array().exp();
  const MatrixXd total = ea + ev;
  c.modality_probs[kAudio] = ea.cwiseQuotient(total);
  c.modality_probs[kVisual] = ev.cwiseQuotient(total);

  for (int m = 0; m < kModalities; ++m)
    c.joint_raw[m] = out.temporal_weights[m].cwiseProduct(c.modality_probs[m]);
  c.joint_norm = c.joint_raw[kAudio].colwise().sum() + c.joint_raw[kVisual].colwise().sum();
  for (int m = 0; m < kModalities; ++m)
    out.joint_weights[m] = c.joint_raw[m].array().rowwise() / c.joint_norm.array();

  out.video_audio = out.temporal_weights[kAudio]
                        .cwiseProduct(out.segment_probs[kAudio])
                        .colwise()
                        .sum();
  out.video_visual = out.temporal_weights[kVisual]
                         .cwiseProduct(out.segment_probs[kVisual])
                         .colwise()
                         .sum();
  out.video_av = out.joint_weights[kAudio].cwiseProduct(out.segment_probs[kAudio]).colwise().sum() +
                 out.joint_weights[kVisual].cwiseProduct(out.segment_probs[kVisual]).colwise().sum();
  // Weighted means of values near 1 can round to 1 + ulp.
  for (auto* v : {&out.video_audio, &out.video_visual, &out.video_av})
    *v = v->cwiseMax(0.0).cwiseMin(1.0);
  return c;
}

/// dBCE/dp with the clamp: zero outside the clamp interval.
double bce_grad(double y, double p) {
  if (p <= kProbClamp || p >= 1.0 - kProbClamp) return 0.0;
  return (p - y) / (p * (1.0 - p));
}

void check_targets(const MatrixXd& y, const char* what) {
  if (!((y.array() >= 0.0).all() && (y.array() <= 1.0).all()))
    throw ValidationError(std::string(what) + " target outside [0,1]");
}

void xavier(MatrixXd& w, Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  std::uniform_real_distribution<double> dist(-limit, limit);
  w.resize(rows, cols);
  for (Eigen::Index j = 0; j < cols; ++j)
    for (Eigen::Index i = 0; i < rows; ++i) w(i, j) = dist(rng);
}

}  // namespace

void ModelConfig::validate() const {
  if (d_audio <= 0 || d_visual <= 0 || hidden <= 0 || num_classes <= 0)
    throw ValidationError("model dims and class count must be positive");
  if (!(label_smoothing >= 0.0 && label_smoothing < 0.5))
    throw ValidationError("label smoothing must lie in [0, 0.5)");
  if (!(learning_rate > 0.0) || !(lr_decay > 0.0) || decay_period <= 0)
    throw ValidationError("learning-rate schedule must be positive");
  if (epochs <= 0 || batch_size <= 0)
    throw ValidationError("epochs and batch size must be positive");
}

void Parameters::visit(const std::function<void(const std::string&, MatrixXd&)>& f) {
  auto each = [&](const char* name, MatrixXd& m) {
    if (m.size() > 0) f(name, m);
  };
  each("proj_audio", proj_audio);
  each("proj_audio_bias", proj_audio_bias);
  each("proj_visual", proj_visual);
  each("proj_visual_bias", proj_visual_bias);
  const char* suffix[kModalities] = {"audio", "visual"};
  for (int m = 0; m < kModalities; ++m) {
    const std::string s = std::string("_") + suffix[m];
    if (self_query[m].size() == 0) continue;
    f("self_query" + s, self_query[m]);
    f("self_key" + s, self_key[m]);
    f("self_value" + s, self_value[m]);
    f("cross_query" + s, cross_query[m]);
    f("cross_key" + s, cross_key[m]);
    f("cross_value" + s, cross_value[m]);
  }
  each("classifier", classifier);
  each("classifier_bias", classifier_bias);
  each("temporal", temporal);
  each("temporal_bias", temporal_bias);
  each("modality", modality);
  each("modality_bias", modality_bias);
}

void Parameters::visit(
    const std::function<void(const std::string&, const MatrixXd&)>& f) const {
  const_cast<Parameters*>(this)->visit(
      [&](const std::string& name, MatrixXd& m) { f(name, m); });
}

Parameters Parameters::zeros_like() const {
  Parameters z = *this;
  z.visit([](const std::string&, MatrixXd& m) { m.setZero(); });
  return z;
}

std::size_t Parameters::count() const {
  std::size_t n = 0;
  visit([&](const std::string&, const MatrixXd& m) { n += static_cast<std::size_t>(m.size()); });
  return n;
}

ModelState init_model(const ModelConfig& config) {
  config.validate();
  ModelState state;
  state.config = config;
  std::mt19937_64 rng(config.seed);
  auto& p = state.params;
  const int h = config.hidden;
  const int C = config.num_classes;
  xavier(p.proj_audio, config.d_audio, h, rng);
  p.proj_audio_bias = MatrixXd::Zero(1, h);
  xavier(p.proj_visual, config.d_visual, h, rng);
  p.proj_visual_bias = MatrixXd::Zero(1, h);
  if (config.attention) {
    for (int m = 0; m < kModalities; ++m) {
      xavier(p.self_query[m], h, h, rng);
      xavier(p.self_key[m], h, h, rng);
      xavier(p.self_value[m], h, h, rng);
      xavier(p.cross_query[m], h, h, rng);
      xavier(p.cross_key[m], h, h, rng);
      xavier(p.cross_value[m], h, h, rng);
    }
  }
  xavier(p.classifier, h, C, rng);
  p.classifier_bias = MatrixXd::Zero(1, C);
  xavier(p.temporal, h, C, rng);
  p.temporal_bias = MatrixXd::Zero(1, C);
  xavier(p.modality, h, C, rng);
  p.modality_bias = MatrixXd::Zero(1, C);
  return state;
}

ForwardOutput forward(const ModelState& state, const MatrixXd& audio,
                      const MatrixXd& visual) {
  return run_forward(state, audio, visual).out;
}

double bce(double y, double p) {
  const double q = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
  // 0 * log(.) terms are dropped so hard labels stay exact.
  double v = 0.0;
  if (y > 0.0) v -= y * std::log(q);
  if (y < 1.0) v -= (1.0 - y) * std::log(1.0 - q);
  return v;
}

RowVectorXd label_smooth(const RowVectorXd& y, double eps) {
  return (y.array() * (1.0 - eps) + (1.0 - y.array()) * eps).matrix();
}

namespace {

double mean_bce(const MatrixXd& y, const MatrixXd& p) {
  double sum = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) sum += bce(y.data()[i], p.data()[i]);
  return sum / static_cast<double>(y.size());
}

void check_video_targets(const ForwardOutput& out, const VideoTargets& t) {
  check_targets(t.weak, "audio-visual");
  check_targets(t.audio, "audio");
  check_targets(t.visual, "visual");
  const auto C = out.video_av.size();
  const auto T = out.segment_probs[kAudio].rows();
  const auto rows = t.segment_level ? T : 1;
  if (t.weak.size() != C || t.audio.rows() != rows || t.audio.cols() != C ||
      t.visual.rows() != rows || t.visual.cols() != C)
    throw ValidationError("training targets disagree with model output shape");
}

}  // namespace

double loss(const ForwardOutput& out, const VideoTargets& t) {
  check_video_targets(out, t);
  double l = mean_bce(t.weak, out.video_av);
  if (t.segment_level) {
    l += mean_bce(t.audio, out.segment_probs[kAudio]);
    l += mean_bce(t.visual, out.segment_probs[kVisual]);
  } else {
    l += mean_bce(t.audio, out.video_audio);
    l += mean_bce(t.visual, out.video_visual);
  }
  return l;
}

double loss_and_gradient(const ModelState& state, const MatrixXd& audio,
                         const MatrixXd& visual, const VideoTargets& targets,
                         Parameters& grad) {
  const auto& cfg = state.config;
  const auto& p = state.params;
  Cache c = run_forward(state, audio, visual);
  const ForwardOutput& out = c.out;
  const double value = loss(out, targets);
  const auto T = out.segment_probs[kAudio].rows();
  const auto C = out.video_av.size();
  const double inv_c = 1.0 / static_cast<double>(C);
  const double inv_tc = 1.0 / static_cast<double>(T * C);

  // d loss / d pooled predictions.
  RowVectorXd d_av(C), d_pa = RowVectorXd::Zero(C), d_pv = RowVectorXd::Zero(C);
  for (Eigen::Index k = 0; k < C; ++k) {
    d_av(k) = inv_c * bce_grad(targets.weak(k), out.video_av(k));
    if (!targets.segment_level) {
      d_pa(k) = inv_c * bce_grad(targets.audio(0, k), out.video_audio(k));
      d_pv(k) = inv_c * bce_grad(targets.visual(0, k), out.video_visual(k));
    }
  }
  const RowVectorXd d_pooled[kModalities] = {d_pa, d_pv};

  std::array<MatrixXd, kModalities> d_probs, d_temporal_w, d_joint;
  for (int m = 0; m < kModalities; ++m) {
    const auto& prob = out.segment_probs[m];
    d_probs[m] = out.temporal_weights[m].array().rowwise() * d_pooled[m].array();
    d_probs[m] += (out.joint_weights[m].array().rowwise() * d_av.array()).matrix();
    d_temporal_w[m] = prob.array().rowwise() * d_pooled[m].array();
    d_joint[m] = prob.array().rowwise() * d_av.array();
    if (targets.segment_level) {
      const MatrixXd& y = m == kAudio ? targets.audio : targets.visual;
      for (Eigen::Index i = 0; i < prob.size(); ++i)
        d_probs[m].data()[i] += inv_tc * bce_grad(y.data()[i], prob.data()[i]);
    }
  }

  // Joint renormalization W = R / sum(R).
  const RowVectorXd weighted = (d_joint[kAudio].cwiseProduct(out.joint_weights[kAudio]) +
                                d_joint[kVisual].cwiseProduct(out.joint_weights[kVisual]))
                                   .colwise()
                                   .sum();
  std::array<MatrixXd, kModalities> d_modality_probs, d_hidden;
  for (int m = 0; m < kModalities; ++m) {
    const MatrixXd d_raw =
        (d_joint[m].rowwise() - weighted).array().rowwise() / c.joint_norm.array();
    d_temporal_w[m] += d_raw.cwiseProduct(c.modality_probs[m]);
    d_modality_probs[m] = d_raw.cwiseProduct(out.temporal_weights[m]);
  }
  const MatrixXd modality_dot = d_modality_probs[kAudio].cwiseProduct(c.modality_probs[kAudio]) +
                                d_modality_probs[kVisual].cwiseProduct(c.modality_probs[kVisual]);

  for (int m = 0; m < kModalities; ++m) {
    const auto& prob = out.segment_probs[m];
    const MatrixXd d_logits =
        d_probs[m].cwiseProduct(prob.cwiseProduct((1.0 - prob.array()).matrix()));
    const auto& w = out.temporal_weights[m];
    const RowVectorXd col_dot = w.cwiseProduct(d_temporal_w[m]).colwise().sum();
    const MatrixXd d_temporal_logits =
        w.cwiseProduct(d_temporal_w[m].rowwise() - col_dot);
    const MatrixXd d_modality_logits =
        c.modality_probs[m].cwiseProduct(d_modality_probs[m] - modality_dot);

    const MatrixXd& z = c.hidden[m];
    grad.classifier += z.transpose() * d_logits;
    grad.classifier_bias += d_logits.colwise().sum();
    grad.temporal += z.transpose() * d_temporal_logits;
    grad.temporal_bias += d_temporal_logits.colwise().sum();
    grad.modality += z.transpose() * d_modality_logits;
    grad.modality_bias += d_modality_logits.colwise().sum();
    d_hidden[m] = d_logits * p.classifier.transpose() +
                  d_temporal_logits * p.temporal.transpose() +
                  d_modality_logits * p.modality.transpose();
  }

  std::array<MatrixXd, kModalities> d_projected;
  if (cfg.attention) {
    std::array<MatrixXd, kModalities> d_after_self = d_hidden;
    for (int m = 0; m < kModalities; ++m) {
      const int other = 1 - m;
      attend_backward(c.after_self[m], c.after_self[other], p.cross_query[m],
                      p.cross_key[m], p.cross_value[m], c.cross_attn[m], d_hidden[m],
                      d_after_self[m], d_after_self[other], grad.cross_query[m],
                      grad.cross_key[m], grad.cross_value[m]);
    }
    d_projected = d_after_self;
    for (int m = 0; m < kModalities; ++m) {
      MatrixXd d_ctx = MatrixXd::Zero(T, cfg.hidden);
      attend_backward(c.projected[m], c.projected[m], p.self_query[m], p.self_key[m],
                      p.self_value[m], c.self_attn[m], d_after_self[m], d_projected[m],
                      d_ctx, grad.self_query[m], grad.self_key[m], grad.self_value[m]);
      d_projected[m] += d_ctx;
    }
  } else {
    d_projected = d_hidden;
  }
  grad.proj_audio += audio.transpose() * d_projected[kAudio];
  grad.proj_audio_bias += d_projected[kAudio].colwise().sum();
  grad.proj_visual += visual.transpose() * d_projected[kVisual];
  grad.proj_visual_bias += d_projected[kVisual].colwise().sum();
  return value;
}

GradCheckResult grad_check(const ModelConfig& config, int segments,
                           bool segment_level, double step) {
  ModelState state = init_model(config);
  std::mt19937_64 rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  // Non-zero biases so every term of the backward pass is exercised.
  state.params.visit([&](const std::string& name, MatrixXd& m) {
    if (name.ends_with("_bias"))
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = 0.1 * normal(rng);
  });
  auto random_matrix = [&](Eigen::Index r, Eigen::Index cols) {
    MatrixXd x(r, cols);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
    return x;
  };
  auto random_unit = [&](Eigen::Index r, Eigen::Index cols) {
    MatrixXd x(r, cols);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = unit(rng);
    return x;
  };
  const MatrixXd audio = random_matrix(segments, config.d_audio);
  const MatrixXd visual = random_matrix(segments, config.d_visual);
  VideoTargets targets;
  targets.weak = (random_unit(1, config.num_classes).array() > 0.5).cast<double>().matrix();
  targets.segment_level = segment_level;
  const int rows = segment_level ? segments : 1;
  targets.audio = random_unit(rows, config.num_classes);
  targets.visual = random_unit(rows, config.num_classes);

  Parameters grad = state.params.zeros_like();
  loss_and_gradient(state, audio, visual, targets, grad);

  std::vector<std::pair<std::string, const MatrixXd*>> analytic;
  grad.visit([&](const std::string& name, const MatrixXd& m) { analytic.emplace_back(name, &m); });

  GradCheckResult result;
  std::size_t which = 0;
  state.params.visit([&](const std::string& name, MatrixXd& param) {
    const MatrixXd& g = *analytic[which++].second;
    for (Eigen::Index i = 0; i < param.size(); ++i) {
      const double saved = param.data()[i];
      param.data()[i] = saved + step;
      const double up = loss(forward(state, audio, visual), targets);
      param.data()[i] = saved - step;
      const double down = loss(forward(state, audio, visual), targets);
      param.data()[i] = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = g.data()[i];
      const double rel = std::abs(a - numeric) /
                         std::max({std::abs(a), std::abs(numeric), 1e-8});
      if (rel > result.max_relative_error) {
        result.max_relative_error = rel;
        result.worst_parameter = name + "[" + std::to_string(i) + "]";
      }
      ++result.parameters_checked;
    }
  });
  return result;
}

void save_checkpoint(const std::filesystem::path& dir, const ModelState& state) {
  using nlohmann::json;
  std::filesystem::create_directories(dir);
  const auto& cfg = state.config;
  json manifest{{"version", 1},
                {"epoch", state.epoch},
                {"seed", cfg.seed},
                {"config",
                 {{"d_audio", cfg.d_audio},
                  {"d_visual", cfg.d_visual},
                  {"hidden", cfg.hidden},
                  {"num_classes", cfg.num_classes},
                  {"attention", cfg.attention},
                  {"label_smoothing", cfg.label_smoothing},
                  {"learning_rate", cfg.learning_rate},
                  {"lr_decay", cfg.lr_decay},
                  {"decay_period", cfg.decay_period},
                  {"epochs", cfg.epochs},
                  {"batch_size", cfg.batch_size}}}};
  json params = json::array();
  state.params.visit([&](const std::string& name, const MatrixXd& m) {
    const std::string file = name + ".bin";
    const std::uint32_t shape[2] = {static_cast<std::uint32_t>(m.rows()),
                                    static_cast<std::uint32_t>(m.cols())};
    std::vector<float> data;
    data.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index col = 0; col < m.cols(); ++col)
        data.push_back(static_cast<float>(m(r, col)));
    write_array(dir / file, shape, data);
    params.push_back({{"name", name}, {"file", file}});
  });
  manifest["parameters"] = std::move(params);
  std::ofstream out(dir / "model.json", std::ios::binary);
  out << manifest.dump(2) << '\n';
  if (!out) throw FormatError("write failed for " + (dir / "model.json").string());
}

ModelState load_checkpoint(const std::filesystem::path& dir) {
  using nlohmann::json;
  std::ifstream in(dir / "model.json");
  if (!in) throw FormatError("cannot open " + (dir / "model.json").string());
  json manifest;
  ModelConfig cfg;
  try {
    manifest = json::parse(in);
    const auto& c = manifest.at("config");
    cfg.d_audio = c.at("d_audio");
    cfg.d_visual = c.at("d_visual");
    cfg.hidden = c.at("hidden");
    cfg.num_classes = c.at("num_classes");
    cfg.attention = c.at("attention");
    cfg.label_smoothing = c.at("label_smoothing");
    cfg.learning_rate = c.at("learning_rate");
    cfg.lr_decay = c.at("lr_decay");
    cfg.decay_period = c.at("decay_period");
    cfg.epochs = c.at("epochs");
    cfg.batch_size = c.at("batch_size");
    cfg.seed = manifest.at("seed");
  } catch (const json::exception& e) {
    throw FormatError((dir / "model.json").string() + ": " + e.what());
  }
  ModelState state = init_model(cfg);
  state.epoch = manifest.value("epoch", 0);
  std::map<std::string, std::string> files;
  for (const auto& entry : manifest.at("parameters"))
    files[entry.at("name").get<std::string>()] = entry.at("file").get<std::string>();
  state.params.visit([&](const std::string& name, MatrixXd& m) {
    auto it = files.find(name);
    if (it == files.end())
      throw FormatError("checkpoint is missing parameter '" + name + "'");
    const Array a = read_array(dir / it->second);
    if (a.shape.size() != 2 || a.shape[0] != m.rows() || a.shape[1] != m.cols())
      throw FormatError("checkpoint parameter '" + name + "' has the wrong shape");
    for (Eigen::Index r = 0; r < m.rows(); ++r)
      for (Eigen::Index col = 0; col < m.cols(); ++col)
        m(r, col) = a.data[static_cast<std::size_t>(r * m.cols() + col)];
  });
  return state;
}

}  // namespace lsld::model
