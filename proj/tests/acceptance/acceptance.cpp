// Acceptance checks, one line per criterion:
//
//   [PASS] 1 oracle exact recovery ... (details)
//
// Exit status is the number of failed criteria.

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <ctime>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "lsld/array_io.hpp"
#include "lsld/bank.hpp"
#include "lsld/denoise.hpp"
#include "lsld/error.hpp"
#include "lsld/metrics.hpp"
#include "lsld/model.hpp"
#include "lsld/pipeline.hpp"
#include "lsld/reweight.hpp"
#include "lsld/synth.hpp"
#include "lsld/train.hpp"
#include "metrics_fixture.hpp"
#include "metrics_oracle.hpp"
#include "test_util.hpp"

namespace {

namespace fs = std::filesystem;
using Eigen::MatrixXd;

struct Outcome {
  bool pass = true;
  std::ostringstream detail;
  void require(bool ok, const std::string& what) {
    if (!ok) {
      if (detail.tellp() > 0) detail << "; ";
      detail << what;
      pass = false;
    }
  }
};

int failures = 0;

void criterion(int id, const char* title, const std::function<void(Outcome&)>& body) {
  Outcome o;
  const auto start = std::chrono::steady_clock::now();
  try {
    body(o);
  } catch (const std::exception& e) {
    o.require(false, std::string("exception: ") + e.what());
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  std::printf("[%s] %d %s (%s) [%.2fs]\n", o.pass ? "PASS" : "FAIL", id, title,
              o.detail.str().c_str(), secs);
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

// Share of (video, modality, segment, class) cells where the denoised label
// equals the planted one.
double recovery_accuracy(const lsld::FeatureBank& bank, const lsld::TrackLabels& gt) {
  long long agree = 0, total = 0;
  for (auto m : {lsld::Modality::audio, lsld::Modality::visual}) {
    const auto labels = lsld::denoise::denoise_bank(bank, m, 100.0, {}, 4);
    for (const auto& v : bank.videos) {
      const MatrixXd& a = labels.at(v.id).values;
      const MatrixXd& b = gt.track(m).at(v.id).values;
      agree += (a.array() == b.array()).count();
      total += a.size();
    }
  }
  return static_cast<double>(agree) / static_cast<double>(total);
}

lsld::synth::SynthConfig synth_config(double noise, std::uint64_t seed) {
  lsld::synth::SynthConfig cfg;
  cfg.videos = 200;
  cfg.classes = 8;
  cfg.segments = 10;
  cfg.noise = noise;
  cfg.seed = seed;
  return cfg;
}

void oracle_recovery(Outcome& o) {
  const std::clock_t cpu0 = std::clock();
  lsld::testing::TempDir dir;
  lsld::synth::gen_dataset(synth_config(0.0, 1), dir.path());
  const auto bank = lsld::load_bank(dir.path());
  const auto gt = lsld::read_annotations(dir / "annotations.csv", bank);
  const double acc = recovery_accuracy(bank, gt);
  const double cpu = double(std::clock() - cpu0) / CLOCKS_PER_SEC;
  o.detail << "agreement " << acc * 100.0 << "% over " << bank.videos.size()
           << " videos, cpu " << cpu << "s";
  o.require(acc == 1.0, "agreement below 100%");
  o.require(cpu < 30.0, "cpu time above 30 s");
}

void noise_monotonicity(Outcome& o) {
  const std::vector<double> sigmas = {0.0, 0.05, 0.1, 0.2, 0.4};
  std::vector<double> mean;
  for (double sigma : sigmas) {
    double sum = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const auto ds = lsld::synth::generate(synth_config(sigma, seed));
      sum += recovery_accuracy(ds.bank, ds.ground_truth);
    }
    mean.push_back(100.0 * sum / 5.0);
  }
  for (std::size_t i = 0; i < sigmas.size(); ++i)
    o.detail << (i ? ", " : "") << "sigma " << sigmas[i] << ": " << mean[i] << "%";
  for (std::size_t i = 1; i < mean.size(); ++i)
    o.require(mean[i] <= mean[i - 1] + 1.0,
              "accuracy rose by more than 1 point at sigma " + std::to_string(sigmas[i]));
}

void ablation_direction(Outcome& o) {
  using lsld::pipeline::Condition;
  double sum_denoise = 0.0, sum_reweight = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto ds = lsld::synth::generate(synth_config(0.1, seed));
    lsld::pipeline::PipelineConfig cfg;
    cfg.model = lsld::model::config_for(ds.bank);
    cfg.model.seed = seed;
    cfg.model.learning_rate = 2e-2;
    cfg.model.epochs = 20;
    cfg.threads = 4;
    const auto split = lsld::pipeline::split_videos(ds.bank, cfg.holdout);
    const double base = 100.0 * lsld::pipeline::run_condition(ds.bank, ds.ground_truth, split,
                                                              Condition::baseline, cfg)
                                    .report.segment.visual;
    const double den = 100.0 * lsld::pipeline::run_condition(ds.bank, ds.ground_truth, split,
                                                             Condition::denoise, cfg)
                                   .report.segment.visual;
    const double rw = 100.0 * lsld::pipeline::run_condition(ds.bank, ds.ground_truth, split,
                                                            Condition::denoise_reweight, cfg)
                                  .report.segment.visual;
    o.detail << (seed > 1 ? "; " : "") << "seed " << seed << " V " << base << " -> " << den
             << " -> " << rw;
    o.require(base < den, "baseline not below +denoise at seed " + std::to_string(seed));
    sum_denoise += den;
    sum_reweight += rw;
  }
  o.detail << "; mean +denoise " << sum_denoise / 5 << ", +reweight " << sum_reweight / 5;
  o.require(sum_reweight / 5 >= sum_denoise / 5 - 0.5, "+reweight more than 0.5 points below");
}

void reweight_arithmetic(Outcome& o) {
  using namespace lsld::reweight;
  auto stats = [](double min_w, double max_wo) {
    GroupStats s;
    s.degenerate = false;
    s.min_with = min_w;
    s.max_without = max_wo;
    return s;
  };
  ReweightConfig cfg;
  const double a = soft_label(1.0, 0.2, stats(0.1, 0.3), cfg);
  const double b = soft_label(1.0, 0.5, stats(0.1, 0.3), cfg);
  const double c = soft_label(0.0, 0.25, stats(0.2, 0.6), cfg);
  o.detail << "fixtures " << a << ", " << b << ", " << c;
  o.require(a == std::min(1.0, 4.0 * 0.2) && std::abs(a - 0.8) < 1e-15, "0.8 fixture");
  o.require(b == 1.0, "unchanged fixture");
  o.require(c == std::min(1.0, 0.4 * 0.25) && std::abs(c - 0.1) < 1e-15, "0.1 fixture");

  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  int mismatches = 0;
  for (int i = 0; i < 10000; ++i) {
    ReweightConfig r;
    r.beta = 0.01 + u(rng);
    r.alpha = r.beta + 0.01 + 5.0 * u(rng);
    const double y = (rng() & 1) ? 1.0 : 0.0, s = u(rng), mw = u(rng), mwo = u(rng);
    const bool pos = y == 1.0 && s <= mwo, neg = y == 0.0 && s >= mw;
    const double expected = pos ? std::min(1.0, r.alpha * s) : neg ? std::min(1.0, r.beta * s) : y;
    mismatches += soft_label(y, s, stats(mw, mwo), r) != expected;
  }
  o.detail << ", oracle mismatches " << mismatches << "/10000";
  o.require(mismatches == 0, "branch oracle disagrees");

  bool rejected = false;
  try {
    ReweightConfig bad;
    bad.alpha = 0.4;
    bad.beta = 0.4;
    lsld::synth::SynthConfig sc;
    sc.videos = 4;
    const auto ds = lsld::synth::generate(sc);
    reweight_bank(ds.bank, lsld::denoise::denoise_bank(ds.bank, lsld::Modality::visual), bad);
  } catch (const lsld::ValidationError&) {
    rejected = true;
  }
  o.detail << ", alpha<=beta " << (rejected ? "rejected" : "accepted");
  o.require(rejected, "alpha <= beta accepted");
}

void argmax_invariance(Outcome& o) {
  std::mt19937_64 rng(6);
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_int_distribution<int> prompts(1, 16), segs(1, 12), dims(2, 32);
  long long agree = 0, total = 0;
  for (int problem = 0; problem < 1000; ++problem) {
    const int P = prompts(rng), T = segs(rng), d = dims(rng);
    MatrixXd text = MatrixXd::NullaryExpr(P, d, [&] { return n(rng); });
    MatrixXd seg = MatrixXd::NullaryExpr(T, d, [&] { return n(rng); });
    std::vector<int> raw(T);
    for (int t = 0; t < T; ++t) {
      double best = -2.0;
      for (int p = 0; p < P; ++p) {
        const double cos = text.row(p).dot(seg.row(t)) / (text.row(p).norm() * seg.row(t).norm());
        if (cos > best) {
          best = cos;
          raw[t] = p;
        }
      }
    }
    for (double tau : {0.1, 1.0, 100.0}) {
      const auto chosen = lsld::denoise::select_prompts(lsld::denoise::similarity(text, seg, tau));
      for (int t = 0; t < T; ++t) agree += chosen[t] == raw[t];
      total += T;
    }
  }
  o.detail << agree << "/" << total << " segments agree";
  o.require(agree == total, "argmax changed under softmax");
}

void pooling_normalization(Outcome& o) {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> n(0.0, 1.0);
  double worst = 0.0;
  bool in_range = true;
  for (int trial = 0; trial < 100; ++trial) {
    lsld::model::ModelConfig cfg;
    cfg.d_audio = 3 + trial % 7;
    cfg.d_visual = 4 + trial % 5;
    cfg.hidden = 2 + trial % 6;
    cfg.num_classes = 1 + trial % 9;
    cfg.attention = trial % 3 != 0;
    cfg.seed = static_cast<std::uint64_t>(trial);
    auto state = lsld::model::init_model(cfg);
    state.params.visit([&](const std::string&, MatrixXd& m) {
      for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] += n(rng);
    });
    const int T = 1 + trial % 12;
    const MatrixXd a = MatrixXd::NullaryExpr(T, cfg.d_audio, [&] { return 3.0 * n(rng); });
    const MatrixXd v = MatrixXd::NullaryExpr(T, cfg.d_visual, [&] { return 3.0 * n(rng); });
    const auto out = lsld::model::forward(state, a, v);
    for (int c = 0; c < cfg.num_classes; ++c) {
      worst = std::max(worst, std::abs(out.temporal_weights[0].col(c).sum() - 1.0));
      worst = std::max(worst, std::abs(out.temporal_weights[1].col(c).sum() - 1.0));
      worst = std::max(worst, std::abs(out.joint_weights[0].col(c).sum() +
                                       out.joint_weights[1].col(c).sum() - 1.0));
    }
    for (const auto* p : {&out.video_audio, &out.video_visual, &out.video_av})
      in_range = in_range && p->minCoeff() >= 0.0 && p->maxCoeff() <= 1.0;
  }
  o.detail << "max |sum - 1| " << worst << ", probabilities " << (in_range ? "in" : "outside")
           << " [0,1]";
  o.require(worst <= 1e-6, "weights do not sum to one");
  o.require(in_range, "probability outside [0,1]");
}

void gradient_check(Outcome& o) {
  lsld::model::ModelConfig cfg;
  cfg.d_audio = 8;
  cfg.d_visual = 8;
  cfg.hidden = 8;
  cfg.num_classes = 3;
  cfg.seed = 1;
  double worst = 0.0;
  for (bool segment_level : {true, false})
    worst = std::max(worst, lsld::model::grad_check(cfg, 4, segment_level).max_relative_error);
  const double b = lsld::model::bce(1.0, 0.5);
  lsld::model::ModelConfig schedule;
  const double lr7 = lsld::model::learning_rate_at(schedule, 7);
  o.detail << "max rel error " << worst << ", BCE(1,0.5) " << b << ", lr@7 " << lr7;
  o.require(worst <= 1e-3, "gradient mismatch");
  o.require(std::abs(b - 0.693147) <= 1e-6, "BCE fixture");
  o.require(lr7 == 5e-5, "schedule");
}

void metrics_oracle(Outcome& o) {
  const auto f = lsld::testing::two_video_fixture();
  const auto r = lsld::metrics::report(f.pred, f.gt, 0.5);
  auto same = [](const lsld::metrics::FamilyScores& a, const lsld::metrics::FamilyScores& b) {
    return a.audio == b.audio && a.visual == b.visual && a.audio_visual == b.audio_visual &&
           std::abs(a.type_av - b.type_av) < 1e-15 && a.event_av == b.event_av;
  };
  o.require(same(r.segment, f.segment) && same(r.event, f.event), "golden fixture");

  std::mt19937_64 rng(8);
  int disagreements = 0;
  double type_gap = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int T = 4 + trial % 9, C = 1 + trial % 4;
    const auto gt = lsld::testing::random_tracks(rng, 3, T, C, 0.2, 0.7);
    const auto pred = lsld::testing::random_tracks(rng, 3, T, C, 0.2, 0.7);
    const auto got = lsld::metrics::report(pred, gt, 0.5);
    const auto want = lsld::testing::oracle_report(pred, gt, 0.5);
    disagreements += !(std::abs(got.segment.audio - want.segment.audio) < 1e-12 &&
                       std::abs(got.segment.event_av - want.segment.event_av) < 1e-12 &&
                       std::abs(got.segment.audio_visual - want.segment.audio_visual) < 1e-12 &&
                       std::abs(got.event.audio - want.event.audio) < 1e-12 &&
                       std::abs(got.event.visual - want.event.visual) < 1e-12 &&
                       std::abs(got.event.audio_visual - want.event.audio_visual) < 1e-12 &&
                       std::abs(got.event.event_av - want.event.event_av) < 1e-12);
    for (const auto* s : {&got.segment, &got.event})
      type_gap = std::max(type_gap,
                          std::abs(s->type_av - (s->audio + s->visual + s->audio_visual) / 3.0));
  }
  using lsld::metrics::Counts;
  const bool iou_ok = lsld::metrics::event_counts({{0, 4}}, {{0, 5}}, 0.5) == Counts{1, 0, 0} &&
                      lsld::metrics::event_counts({{0, 1}}, {{0, 4}}, 0.5) == Counts{0, 1, 1};
  o.detail << "fixture " << (o.pass ? "exact" : "off") << ", oracle disagreements "
           << disagreements << "/1000, max Type@AV gap " << type_gap << ", IoU fixtures "
           << (iou_ok ? "hold" : "fail");
  o.require(disagreements == 0, "oracle disagreement");
  o.require(type_gap <= 1e-9, "Type@AV not the mean");
  o.require(iou_ok, "IoU fixtures");
}

void determinism(Outcome& o) {
  auto once = [](const fs::path& dir) {
    auto cfg = synth_config(0.1, 9);
    cfg.videos = 60;
    lsld::synth::gen_dataset(cfg, dir / "bank");
    const auto bank = lsld::load_bank(dir / "bank");
    const auto gt = lsld::read_annotations(dir / "bank/annotations.csv", bank);
    lsld::pipeline::PipelineConfig pc;
    pc.model = lsld::model::config_for(bank);
    pc.model.learning_rate = 2e-2;
    pc.model.epochs = 6;
    pc.threads = 3;
    const auto split = lsld::pipeline::split_videos(bank, pc.holdout);
    const auto cell = lsld::pipeline::run_condition(
        bank, gt, split, lsld::pipeline::Condition::denoise_reweight, pc);
    std::string trace;
    for (double l : cell.epoch_loss) {
      char buf[40];
      std::snprintf(buf, sizeof buf, "%.17g\n", l);
      trace += buf;
    }
    return std::make_tuple(lsld::testing::tree_contents(dir / "bank"), trace,
                           lsld::metrics::report_json(cell.report));
  };
  lsld::testing::TempDir a, b;
  const auto [bank_a, trace_a, report_a] = once(a.path());
  const auto [bank_b, trace_b, report_b] = once(b.path());
  o.detail << "bank files " << bank_a.size() << (bank_a == bank_b ? " identical" : " differ")
           << ", loss trace " << (trace_a == trace_b ? "identical" : "differs") << ", report "
           << (report_a == report_b ? "identical" : "differs");
  o.require(bank_a == bank_b, "bank bytes differ");
  o.require(trace_a == trace_b, "loss traces differ");
  o.require(report_a == report_b, "reports differ");
}

void format_round_trip(Outcome& o) {
  lsld::testing::TempDir dir;
  std::mt19937_64 rng(10);
  std::uniform_int_distribution<int> rank(0, 4);
  std::uniform_int_distribution<std::uint32_t> extent(0, 7);
  int exact = 0;
  for (int i = 0; i < 1000; ++i) {
    lsld::Array arr;
    arr.shape.resize(static_cast<std::size_t>(rank(rng)));
    for (auto& d : arr.shape) d = extent(rng);
    arr.data.resize(arr.element_count());
    for (auto& x : arr.data)
      do x = std::bit_cast<float>(static_cast<std::uint32_t>(rng()));
      while (!std::isfinite(x));
    lsld::write_array(dir / "a.bin", arr);
    const auto back = lsld::read_array(dir / "a.bin");
    exact += back.shape == arr.shape && back.data.size() == arr.data.size() &&
             (arr.data.empty() ||
              std::memcmp(back.data.data(), arr.data.data(), arr.data.size() * 4) == 0);
  }
  o.detail << exact << "/1000 arrays bit-exact";
  o.require(exact == 1000, "round trip lost bits");

  // Each mutation is applied to a fresh copy of a valid bank.
  auto cfg = synth_config(0.1, 3);
  cfg.videos = 10;
  lsld::synth::gen_dataset(cfg, dir / "clean");
  using Mutation = std::pair<const char*, std::function<void(const fs::path&)>>;
  const std::vector<Mutation> mutations = {
      {"truncated array",
       [](const fs::path& p) {
         const auto s = lsld::testing::slurp(p / "visual/synth_00001.bin");
         lsld::testing::spit(p / "visual/synth_00001.bin", s.substr(0, s.size() - 4));
       }},
      {"bad magic",
       [](const fs::path& p) {
         auto s = lsld::testing::slurp(p / "audio/synth_00002.bin");
         s[3] = 'Z';
         lsld::testing::spit(p / "audio/synth_00002.bin", s);
       }},
      {"segment count",
       [](const fs::path& p) {
         auto s = lsld::testing::slurp(p / "manifest.json");
         const auto at = s.find("\"T\": 10");
         s.replace(at, 7, "\"T\": 9");
         lsld::testing::spit(p / "manifest.json", s);
       }},
      {"missing prompt",
       [](const fs::path& p) {
         auto s = lsld::testing::slurp(p / "prompts_visual.json");
         const auto at = s.find("\"other\"");
         s.replace(at, 7, "\"otter\"");
         lsld::testing::spit(p / "prompts_visual.json", s);
       }},
      {"unknown class",
       [](const fs::path& p) {
         auto s = lsld::testing::slurp(p / "labels.csv");
         s += "synth_00003,\"Unicorn\"\n";
         lsld::testing::spit(p / "labels.csv", s);
       }},
      {"missing file", [](const fs::path& p) { fs::remove(p / "visual/synth_00004.bin"); }},
  };
  int rejected = 0;
  for (const auto& [name, mutate] : mutations) {
    const fs::path copy = dir / "mutated";
    fs::remove_all(copy);
    fs::copy(dir / "clean", copy, fs::copy_options::recursive);
    mutate(copy);
    try {
      lsld::load_bank(copy);
      o.require(false, std::string("accepted: ") + name);
    } catch (const lsld::Error&) {
      ++rejected;
    }
  }
  o.detail << ", " << rejected << "/" << mutations.size() << " mutated banks rejected";
}

}  // namespace

int main() {
  criterion(1, "oracle exact recovery at zero noise", oracle_recovery);
  criterion(2, "recovery accuracy non-increasing in noise", noise_monotonicity);
  criterion(3, "ablation direction on the synthetic benchmark", ablation_direction);
  criterion(4, "soft-label arithmetic and branch oracle", reweight_arithmetic);
  criterion(5, "argmax invariance under temperature", argmax_invariance);
  criterion(6, "pooling weights normalized", pooling_normalization);
  criterion(7, "gradient check, BCE and schedule", gradient_check);
  criterion(8, "metrics against hand fixture and brute-force oracle", metrics_oracle);
  criterion(9, "determinism of banks, loss traces and reports", determinism);
  criterion(10, "array round trip and bank rejection", format_round_trip);
  std::printf("%d of 10 criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
