#include <gtest/gtest.h>

#include "lsld/denoise.hpp"
#include "lsld/error.hpp"
#include "lsld/synth.hpp"
#include "test_util.hpp"

namespace {

using namespace lsld::synth;

TEST(Synth, PrototypesOrthonormal) {
  for (int C : {2, 8, 15}) {
    const auto P = make_prototypes(C, 32, 9);
    ASSERT_EQ(P.rows(), C + 1);
    EXPECT_TRUE((P * P.transpose()).isIdentity(1e-12)) << "C=" << C;
  }
  EXPECT_EQ(make_prototypes(8, 32, 1), make_prototypes(8, 32, 1));
  EXPECT_NE(make_prototypes(8, 32, 1), make_prototypes(8, 32, 2));
}

TEST(Synth, SubsetEmbeddingIsNormalizedSum) {
  const auto P = make_prototypes(4, 8, 3);
  const auto e = subset_embedding({1, 3}, P);
  EXPECT_NEAR(e.norm(), 1.0, 1e-12);
  EXPECT_TRUE(e.isApprox((P.row(1) + P.row(3)) / std::sqrt(2.0), 1e-12));
  EXPECT_TRUE(subset_embedding({}, P).isApprox(P.row(4), 1e-15));
}

TEST(Synth, PlantedEventsStayInsideWeakLabel) {
  SynthConfig cfg;
  cfg.videos = 100;
  cfg.seed = 12;
  const auto planted = plant_events(cfg);
  ASSERT_EQ(planted.size(), 100u);
  for (const auto& v : planted) {
    EXPECT_LE(static_cast<int>(v.label_set.size()), cfg.max_classes);
    for (int c = 0; c < cfg.classes; ++c) {
      const bool any = v.presence[0].col(c).sum() + v.presence[1].col(c).sum() > 0;
      const bool listed = std::binary_search(v.label_set.begin(), v.label_set.end(), c);
      EXPECT_EQ(any, listed) << v.id << " class " << c;
    }
  }
}

TEST(Synth, ChainOccupancyMatchesStationaryRate) {
  // A two-state chain with birth p_on and survival p_stay is on a fraction
  // p_on / (p_on + 1 - p_stay) of the time once mixed; the chain starts off,
  // so a long track should come close.
  SynthConfig cfg;
  cfg.videos = 400;
  cfg.segments = 60;
  cfg.classes = 3;
  cfg.max_classes = 3;
  cfg.d_audio = cfg.d_visual = 8;
  cfg.seed = 99;
  const auto planted = plant_events(cfg);
  double on = 0, total = 0;
  for (const auto& v : planted)
    for (int t = 20; t < cfg.segments; ++t)
      for (int c = 0; c < cfg.classes; ++c) {
        on += v.presence[0](t, c);
        total += 1;
      }
  const double expected = cfg.p_on / (cfg.p_on + 1.0 - cfg.p_stay);
  EXPECT_NEAR(on / total, expected, 0.02);
}

TEST(Synth, NoiselessDenoisingRecoversPlantedLabels) {
  SynthConfig cfg;
  cfg.videos = 60;
  cfg.noise = 0.0;
  cfg.seed = 77;
  const auto ds = generate(cfg);
  for (auto m : {lsld::Modality::audio, lsld::Modality::visual}) {
    const auto labels = lsld::denoise::denoise_bank(ds.bank, m);
    for (const auto& v : ds.bank.videos)
      EXPECT_EQ(labels.at(v.id).values, ds.ground_truth.track(m).at(v.id).values) << v.id;
  }
}

TEST(Synth, SameSeedSameBankBytes) {
  lsld::testing::TempDir a, b;
  SynthConfig cfg;
  cfg.videos = 20;
  cfg.seed = 5;
  gen_dataset(cfg, a.path());
  gen_dataset(cfg, b.path());
  EXPECT_EQ(lsld::testing::tree_contents(a.path()), lsld::testing::tree_contents(b.path()));
  lsld::testing::TempDir c;
  cfg.seed = 6;
  gen_dataset(cfg, c.path());
  EXPECT_NE(lsld::testing::tree_contents(a.path()), lsld::testing::tree_contents(c.path()));
}

TEST(Synth, NoneTokensShareBackgroundRow) {
  SynthConfig cfg;
  cfg.videos = 4;
  const auto ds = generate(cfg);
  const auto& table = ds.bank.prompt_table_visual;
  EXPECT_EQ(table.row_of("other"), table.row_of("none"));
}

TEST(Synth, RejectsDimensionBelowClassCount) {
  SynthConfig cfg;
  cfg.classes = 8;
  cfg.d_audio = 8;
  EXPECT_THROW(cfg.validate(), lsld::ValidationError);
  cfg = {};
  cfg.p_stay = 1.5;
  EXPECT_THROW(cfg.validate(), lsld::ValidationError);
}

}  // namespace
