#include <random>

#include <benchmark/benchmark.h>

#include "lsld/array_io.hpp"
#include "lsld/denoise.hpp"
#include "lsld/metrics.hpp"
#include "lsld/model.hpp"
#include "lsld/reweight.hpp"
#include "lsld/synth.hpp"

namespace {

const lsld::synth::SynthDataset& dataset() {
  static const auto ds = [] {
    lsld::synth::SynthConfig cfg;
    cfg.videos = 200;
    cfg.seed = 1;
    return lsld::synth::generate(cfg);
  }();
  return ds;
}

void BM_Similarity(benchmark::State& state) {
  const int prompts = static_cast<int>(state.range(0));
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n;
  const Eigen::MatrixXd text = Eigen::MatrixXd::NullaryExpr(prompts, 512, [&] { return n(rng); });
  const Eigen::MatrixXd seg = Eigen::MatrixXd::NullaryExpr(10, 512, [&] { return n(rng); });
  for (auto _ : state) benchmark::DoNotOptimize(lsld::denoise::similarity(text, seg));
  state.SetItemsProcessed(state.iterations() * prompts * 10);
}
BENCHMARK(BM_Similarity)->RangeMultiplier(2)->Range(2, 64);

void BM_DenoiseBank(benchmark::State& state) {
  const auto& ds = dataset();
  const auto threads = static_cast<unsigned>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(lsld::denoise::denoise_bank(ds.bank, lsld::Modality::visual,
                                                         100.0, {}, threads));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(ds.bank.videos.size()));
}
BENCHMARK(BM_DenoiseBank)->Arg(1)->Arg(4)->UseRealTime();

void BM_ReweightBank(benchmark::State& state) {
  const auto& ds = dataset();
  const auto denoised = lsld::denoise::denoise_bank(ds.bank, lsld::Modality::visual);
  for (auto _ : state) benchmark::DoNotOptimize(lsld::reweight::reweight_bank(ds.bank, denoised));
}
BENCHMARK(BM_ReweightBank);

lsld::model::ModelConfig model_config(int hidden) {
  lsld::model::ModelConfig cfg;
  cfg.d_audio = 128;
  cfg.d_visual = 512;
  cfg.hidden = hidden;
  cfg.num_classes = 25;
  return cfg;
}

void BM_Forward(benchmark::State& state) {
  const auto model = lsld::model::init_model(model_config(static_cast<int>(state.range(0))));
  const Eigen::MatrixXd a = Eigen::MatrixXd::Random(10, 128);
  const Eigen::MatrixXd v = Eigen::MatrixXd::Random(10, 512);
  for (auto _ : state) benchmark::DoNotOptimize(lsld::model::forward(model, a, v));
}
BENCHMARK(BM_Forward)->Arg(32)->Arg(128)->Arg(512);

void BM_ForwardBackward(benchmark::State& state) {
  const auto model = lsld::model::init_model(model_config(static_cast<int>(state.range(0))));
  const Eigen::MatrixXd a = Eigen::MatrixXd::Random(10, 128);
  const Eigen::MatrixXd v = Eigen::MatrixXd::Random(10, 512);
  lsld::model::VideoTargets t;
  t.weak = Eigen::RowVectorXd::Zero(25);
  t.weak(3) = 1.0;
  t.segment_level = true;
  t.audio = Eigen::MatrixXd::Zero(10, 25);
  t.visual = Eigen::MatrixXd::Zero(10, 25);
  t.visual.col(3).head(4).setOnes();
  auto grad = model.params.zeros_like();
  for (auto _ : state) {
    benchmark::DoNotOptimize(lsld::model::loss_and_gradient(model, a, v, t, grad));
  }
}
BENCHMARK(BM_ForwardBackward)->Arg(32)->Arg(128)->Arg(512);

void BM_Report(benchmark::State& state) {
  const auto& ds = dataset();
  const auto tracks = lsld::metrics::to_tracks(ds.ground_truth, 0.5);
  for (auto _ : state) benchmark::DoNotOptimize(lsld::metrics::report(tracks, tracks, 0.5));
  state.SetItemsProcessed(state.iterations() * static_cast<long>(tracks.size()));
}
BENCHMARK(BM_Report);

void BM_ArrayEncodeDecode(benchmark::State& state) {
  const std::vector<std::uint32_t> shape = {10, static_cast<std::uint32_t>(state.range(0))};
  const std::vector<float> data(10 * static_cast<std::size_t>(state.range(0)), 0.5f);
  for (auto _ : state) {
    auto bytes = lsld::encode_array(shape, data);
    benchmark::DoNotOptimize(lsld::decode_array(bytes));
  }
  state.SetBytesProcessed(state.iterations() * static_cast<long>(data.size() * 4));
}
BENCHMARK(BM_ArrayEncodeDecode)->Arg(128)->Arg(512);

}  // namespace
BENCHMARK_MAIN();
