#include "lsld/denoise.hpp"

#include <cmath>
#include <thread>

#include "lsld/error.hpp"

namespace lsld::denoise {

Eigen::MatrixXd normalize_rows(const Eigen::MatrixXd& m, const std::string& what) {
  Eigen::MatrixXd out(m.rows(), m.cols());
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double norm = m.row(r).norm();
    if (!(norm > 0.0) || !std::isfinite(norm))
      throw NumericError("cannot normalize " + what + " row " + std::to_string(r) +
                         ": norm is " + std::to_string(norm));
    out.row(r) = m.row(r) / norm;
  }
  return out;
}

SimilarityMatrix similarity(const Eigen::MatrixXd& text_feats,
                            const Eigen::MatrixXd& seg_feats,
                            double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature))
    throw ValidationError("temperature must be positive and finite");
  if (text_feats.cols() != seg_feats.cols())
    throw ValidationError("prompt embeddings have dim " +
                          std::to_string(text_feats.cols()) +
                          " but segment embeddings have dim " +
                          std::to_string(seg_feats.cols()));
  SimilarityMatrix sim;
  sim.temperature = temperature;
  sim.cosine = normalize_rows(text_feats, "prompt") *
               normalize_rows(seg_feats, "segment").transpose();
  sim.normalized.resize(sim.cosine.rows(), sim.cosine.cols());
  for (Eigen::Index t = 0; t < sim.cosine.cols(); ++t) {
    const Eigen::VectorXd logits = temperature * sim.cosine.col(t);
    const Eigen::VectorXd e = (logits.array() - logits.maxCoeff()).exp();
    sim.normalized.col(t) = e / e.sum();
  }
  return sim;
}

std::vector<int> select_prompts(const SimilarityMatrix& sim) {
  std::vector<int> chosen(static_cast<std::size_t>(sim.segments()), 0);
  for (Eigen::Index t = 0; t < sim.segments(); ++t) {
    Eigen::Index best = 0;
    for (Eigen::Index n = 1; n < sim.prompts(); ++n)
      if (sim.normalized(n, t) > sim.normalized(best, t)) best = n;
    chosen[static_cast<std::size_t>(t)] = static_cast<int>(best);
  }
  return chosen;
}

SegmentLabelTensor denoise_labels(const SimilarityMatrix& sim,
                                  const VideoRecord& video,
                                  std::size_t num_classes, Modality modality) {
  if (sim.prompt_set.video_id != video.id)
    throw ValidationError("similarity matrix belongs to video '" +
                          sim.prompt_set.video_id + "', not '" + video.id + "'");
  if (static_cast<std::size_t>(sim.prompts()) != sim.prompt_set.size())
    throw ValidationError("similarity matrix rows disagree with its prompt set");
  SegmentLabelTensor out{video.id, modality, LabelKind::denoised,
                         Eigen::MatrixXd::Zero(sim.segments(),
                                               static_cast<Eigen::Index>(num_classes))};
  const auto chosen = select_prompts(sim);
  for (std::size_t t = 0; t < chosen.size(); ++t)
    for (ClassIndex c : sim.prompt_set.subsets[static_cast<std::size_t>(chosen[t])])
      out.values(static_cast<Eigen::Index>(t), c) = 1.0;
  return out;
}

SimilarityMatrix video_similarity(const FeatureBank& bank, const VideoRecord& video,
                                  Modality modality, double temperature,
                                  const prompts::PromptOptions& options) {
  auto set = prompts::make_prompt_set(video.id, video.label_set, bank.vocabulary,
                                      options);
  const PromptTable& table = bank.prompt_table(modality);
  Eigen::MatrixXd text(static_cast<Eigen::Index>(set.size()), table.dim());
  for (std::size_t n = 0; n < set.size(); ++n)
    text.row(static_cast<Eigen::Index>(n)) =
        table.matrix().row(table.row_of(set.rendered[n])).cast<double>();
  SimilarityMatrix sim =
      similarity(text, video.features(modality).cast<double>(), temperature);
  sim.prompt_set = std::move(set);
  return sim;
}

LabelTable denoise_bank(const FeatureBank& bank, Modality modality,
                        double temperature,
                        const prompts::PromptOptions& options, unsigned threads) {
  const std::size_t n = bank.videos.size();
  std::vector<SegmentLabelTensor> results(n);
  auto work = [&](std::size_t begin, std::size_t end) {
    for (std::size_t i = begin; i < end; ++i) {
      const auto& v = bank.videos[i];
      results[i] = denoise_labels(
          video_similarity(bank, v, modality, temperature, options), v,
          bank.num_classes(), modality);
    }
  };
  threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
  if (threads == 1) {
    work(0, n);
  } else {
    std::vector<std::exception_ptr> errors(threads);
    {
      std::vector<std::jthread> pool;
      const std::size_t chunk = (n + threads - 1) / threads;
      for (unsigned w = 0; w < threads; ++w) {
        pool.emplace_back([&, w] {
          try {
            work(std::min(n, w * chunk), std::min(n, (w + 1) * chunk));
          } catch (...) {
            errors[w] = std::current_exception();
          }
        });
      }
    }
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  }
  LabelTable out;
  for (auto& r : results) out.emplace(r.video_id, std::move(r));
  return out;
}

}  // namespace lsld::denoise
