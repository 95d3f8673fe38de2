#include <filesystem>

#include <gtest/gtest.h>
#include <json.hpp>

#include "lsld/array_io.hpp"
#include "lsld/bank.hpp"
#include "lsld/error.hpp"
#include "lsld/labels.hpp"
#include "lsld/synth.hpp"
#include "test_util.hpp"

namespace {

namespace fs = std::filesystem;
using lsld::testing::slurp;
using lsld::testing::spit;
using lsld::testing::TempDir;

class BankTest : public ::testing::Test {
 protected:
  void SetUp() override {
    lsld::synth::SynthConfig cfg;
    cfg.videos = 12;
    cfg.seed = 4;
    data_ = lsld::synth::gen_dataset(cfg, dir_.path());
  }

  nlohmann::json manifest() const { return nlohmann::json::parse(slurp(dir_ / "manifest.json")); }
  void set_manifest(const nlohmann::json& j) { spit(dir_ / "manifest.json", j.dump(1)); }

  template <class E = lsld::Error>
  std::string expect_rejected() {
    try {
      lsld::load_bank(dir_.path());
    } catch (const E& e) {
      return e.what();
    }
    ADD_FAILURE() << "bank was accepted";
    return {};
  }

  TempDir dir_;
  lsld::synth::SynthDataset data_;
};

TEST_F(BankTest, LoadsWhatWasSaved) {
  const auto bank = lsld::load_bank(dir_.path());
  EXPECT_TRUE(bank.warnings.empty());
  ASSERT_EQ(bank.videos.size(), data_.bank.videos.size());
  EXPECT_EQ(bank.vocabulary, data_.bank.vocabulary);
  for (std::size_t i = 0; i < bank.videos.size(); ++i) {
    EXPECT_EQ(bank.videos[i].id, data_.bank.videos[i].id);
    EXPECT_EQ(bank.videos[i].label_set, data_.bank.videos[i].label_set);
    EXPECT_EQ(bank.videos[i].visual, data_.bank.videos[i].visual);
  }
  EXPECT_EQ(bank.prompt_table_visual.matrix(), data_.bank.prompt_table_visual.matrix());
}

TEST_F(BankTest, AnnotationsRoundTrip) {
  const auto bank = lsld::load_bank(dir_.path());
  const auto gt = lsld::read_annotations(dir_ / "annotations.csv", bank);
  for (const auto& v : bank.videos) {
    EXPECT_EQ(gt.audio.at(v.id).values, data_.ground_truth.audio.at(v.id).values);
    EXPECT_EQ(gt.visual.at(v.id).values, data_.ground_truth.visual.at(v.id).values);
  }
}

TEST_F(BankTest, RejectsSegmentCountMismatch) {
  auto j = manifest();
  j["videos"][3]["T"] = 11;
  set_manifest(j);
  const auto msg = expect_rejected();
  EXPECT_NE(msg.find(data_.bank.videos[3].id), std::string::npos) << msg;
}

TEST_F(BankTest, RejectsWrongFeatureDim) {
  const auto& v = data_.bank.videos[2];
  const std::vector<std::uint32_t> shape = {10, 31};
  lsld::write_array(dir_ / v.visual_file, shape, std::vector<float>(310, 0.1f));
  const auto msg = expect_rejected();
  EXPECT_NE(msg.find(v.id), std::string::npos) << msg;
}

TEST_F(BankTest, RejectsTruncatedArray) {
  const auto path = dir_ / data_.bank.videos[0].audio_file;
  const auto bytes = slurp(path);
  spit(path, bytes.substr(0, bytes.size() - 3));
  expect_rejected<lsld::FormatError>();
}

TEST_F(BankTest, RejectsMissingPromptNamingIt) {
  auto index = nlohmann::json::parse(slurp(dir_ / "prompts_visual.json"));
  const auto& v = data_.bank.videos[0];
  const std::string name = data_.bank.vocabulary.name(v.label_set.front());
  index.erase(name);
  spit(dir_ / "prompts_visual.json", index.dump());
  const auto msg = expect_rejected();
  EXPECT_NE(msg.find(name), std::string::npos) << msg;
}

TEST_F(BankTest, RejectsUnknownClassInLabels) {
  auto text = slurp(dir_ / "labels.csv");
  const auto pos = text.find('\n');
  text.insert(pos + 1, "synth_00000,\"Unicorn\"\n");
  spit(dir_ / "labels.csv", text);
  expect_rejected();
}

TEST_F(BankTest, RejectsBadVersion) {
  auto j = manifest();
  j["version"] = 2;
  set_manifest(j);
  expect_rejected();
}

TEST_F(BankTest, RejectsDuplicateVideo) {
  auto j = manifest();
  j["videos"].push_back(j["videos"][0]);
  set_manifest(j);
  expect_rejected();
}

TEST_F(BankTest, RejectsMalformedManifest) {
  spit(dir_ / "manifest.json", "{\"version\": 1, \"videos\": [");
  expect_rejected<lsld::FormatError>();
}

TEST_F(BankTest, RejectsMissingFile) {
  fs::remove(dir_ / data_.bank.videos[5].visual_file);
  expect_rejected<lsld::FormatError>();
}

TEST(Labels, DenoisedOutsideWeakLabelIsInvalid) {
  lsld::SegmentLabelTensor t;
  t.video_id = "v";
  t.kind = lsld::LabelKind::denoised;
  t.values = Eigen::MatrixXd::Zero(2, 3);
  t.values(1, 2) = 1.0;
  EXPECT_EQ(lsld::check_label_tensor(t, {2}), "");
  EXPECT_NE(lsld::check_label_tensor(t, {0, 1}), "");
  t.values(0, 2) = 0.5;
  EXPECT_NE(lsld::check_label_tensor(t, {2}), "");  // denoised must be binary
  t.kind = lsld::LabelKind::reweighted;
  EXPECT_EQ(lsld::check_label_tensor(t, {2}), "");
}

}  // namespace
