// Copyright 2026 The utg Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "utg/data/house_sales.hpp"
#include "utg/pipeline/generate.hpp"
#include "utg/pipeline/records.hpp"
#include "utg/pipeline/sweep.hpp"
#include "utg/rare/stats.hpp"

namespace {

using namespace utg::pipeline;
using utg::models::VaeConfig;
using utg::rare::RarityParams;
using utg::rare::ThresholdParam;

double mean_novelty(const std::vector<LuRecord>& rs) {
  double s = 0.0;
  for (const auto& r : rs) s += r.novelty;
  return s / static_cast<double>(rs.size());
}

// ---------------------------------------------------------------- novelty

TEST(Novelty, HandCases) {
  const std::vector<std::vector<double>> ref{{1.0, 2.0}, {5.0, 5.0}};
  EXPECT_EQ(novelty_score(std::vector<double>{1.0, 2.0}, ref), 0.0);
  EXPECT_DOUBLE_EQ(novelty_score(std::vector<double>{2.0, 0.0}, {{0.0, 0.0}}), 2.0);
  EXPECT_DOUBLE_EQ(novelty_score(std::vector<double>{5.0, 9.0}, ref), 4.0);
  EXPECT_THROW(novelty_score(std::vector<double>{1.0}, {}), std::invalid_argument);
  EXPECT_THROW(novelty_score(std::vector<double>{1.0}, ref), std::invalid_argument);
}

TEST(Novelty, IndexAgreesWithFreeFunction) {
  const std::vector<std::vector<double>> ref{{0, 0, 0}, {1, 1, 1}, {-2, 0, 3}};
  const NoveltyIndex idx(ref);
  EXPECT_EQ(idx.size(), 3u);
  for (const auto& q : std::vector<std::vector<double>>{{0.4, 0.2, 0.9}, {-2, 0, 3}, {9, 9, 9}}) {
    EXPECT_DOUBLE_EQ(idx.score(q), novelty_score(q, ref));
  }
}

// ---------------------------------------------------------------- tabular fixture

class TabularPipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    fixture_ = new utg::testing::TwoClusters(utg::testing::two_cluster_dataset(600, 3));
    VaeConfig cfg;
    cfg.latent_dim = 2;
    cfg.epochs = 80;
    cfg.batch_size = 32;
    cfg.seed = 4;
    model_ = new utg::models::VaeModel(utg::models::train_vae(fixture_->ds, cfg).model);
    ref_ = new NoveltyIndex(NoveltyIndex::for_table(fixture_->ds, *model_->codec()));
  }
  static void TearDownTestSuite() {
    delete fixture_;
    delete model_;
    delete ref_;
  }
  static double normalized(std::size_t c, double v) {
    return (v - fixture_->ds.norm_stats.mean[c]) / fixture_->ds.norm_stats.stddev[c];
  }

  static utg::testing::TwoClusters* fixture_;
  static utg::models::VaeModel* model_;
  static NoveltyIndex* ref_;
};
utg::testing::TwoClusters* TabularPipeline::fixture_ = nullptr;
utg::models::VaeModel* TabularPipeline::model_ = nullptr;
NoveltyIndex* TabularPipeline::ref_ = nullptr;

TEST_F(TabularPipeline, EmptyBatch) {
  EXPECT_TRUE(generate_lu_tabular(*model_, *ref_, {5, 5}, 0, 1).empty());
}

TEST_F(TabularPipeline, RecordsCarryProvenance) {
  const auto rs = generate_lu_tabular(*model_, *ref_, {5, 5}, 20, 9, utg::rare::Sampler::kMetropolis, "m.utgm");
  ASSERT_EQ(rs.size(), 20u);
  for (std::size_t i = 0; i < rs.size(); ++i) {
    const auto& r = rs[i];
    EXPECT_EQ(r.id, i < 10 ? "r000" + std::to_string(i) : "r00" + std::to_string(i));
    EXPECT_EQ(std::get<RarityParams>(r.params), (RarityParams{5, 5}));
    EXPECT_EQ(r.seed, 9u);
    EXPECT_EQ(std::get<std::vector<double>>(r.latent).size(), 2u);
    EXPECT_EQ(r.values.size(), fixture_->ds.schema.size());
    EXPECT_GE(r.novelty, 0.0);
    EXPECT_EQ(r.label, Label::kUnlabeled);
    EXPECT_EQ(r.model_ref, "m.utgm");
    EXPECT_FALSE(r.is_image());
  }
}

TEST_F(TabularPipeline, FixedSeedReproducesBatch) {
  EXPECT_EQ(generate_lu_tabular(*model_, *ref_, {5, 5}, 30, 4), generate_lu_tabular(*model_, *ref_, {5, 5}, 30, 4));
}

// Property: re-decoding the stored latent reproduces the values exactly.
TEST_F(TabularPipeline, RecordsAreReconstructible) {
  for (const auto& r : generate_lu_tabular(*model_, *ref_, {2, 1}, 100, 12)) {
    ASSERT_EQ(redecode(r, *model_), r.values) << r.id;
  }
}

TEST_F(TabularPipeline, BaselineMatchesStandardGenerationMeans) {
  const auto lu = generate_lu_tabular(*model_, *ref_, {0, 1}, 1000, 21);
  const auto std_rows = utg::models::generate_standard(*model_, 1000, 21);
  for (std::size_t c = 0; c < fixture_->ds.schema.size(); ++c) {
    double a = 0.0, b = 0.0;
    for (const auto& r : lu) a += normalized(c, r.values[c]);
    for (const auto& r : std_rows) b += r[c];
    EXPECT_LT(std::abs(a - b) / 1000.0, 0.1) << "column " << c;
  }
}

// Per-column two-sample KS between the (0,1) path and standard generation,
// uncorrected alpha = 0.01 per column.
TEST_F(TabularPipeline, BaselineIsDistributionEquivalent) {
  const auto lu = generate_lu_tabular(*model_, *ref_, {0, 1}, 1000, 33);
  const auto std_rows = utg::models::generate_standard(*model_, 1000, 33);
  for (std::size_t c = 0; c < fixture_->ds.schema.size(); ++c) {
    std::vector<double> a, b;
    for (const auto& r : lu) a.push_back(normalized(c, r.values[c]));
    for (const auto& r : std_rows) b.push_back(r[c]);
    EXPECT_GE(utg::rare::ks_two_sample(a, b).p_value, 0.01) << "column " << c;
  }
}

TEST_F(TabularPipeline, RarityRaisesNovelty) {
  const auto base = generate_lu_tabular(*model_, *ref_, {0, 1}, 500, 5);
  const auto rare = generate_lu_tabular(*model_, *ref_, {5, 5}, 500, 5);
  EXPECT_GT(mean_novelty(rare), mean_novelty(base));
}

TEST_F(TabularPipeline, SweepNoveltyNonDecreasingAlongRay) {
  const auto rep = sweep_rarity(*model_, *ref_, {5, 5}, {0.0, 0.5, 1.0, 2.0}, 300, 8);
  ASSERT_EQ(rep.points.size(), 4u);
  EXPECT_EQ(std::get<RarityParams>(rep.points[0].params), (RarityParams{0, 1}));
  EXPECT_EQ(std::get<RarityParams>(rep.points[3].params), (RarityParams{10, 10}));
  for (std::size_t i = 1; i < rep.points.size(); ++i) {
    const auto& lo = rep.points[i - 1];
    const auto& hi = rep.points[i];
    const double pooled = std::sqrt(lo.novelty_stderr * lo.novelty_stderr + hi.novelty_stderr * hi.novelty_stderr);
    EXPECT_GE(hi.mean_novelty, lo.mean_novelty - pooled) << "s=" << hi.value;
    EXPECT_GT(hi.mean_abs_latent, lo.mean_abs_latent);
  }
  const auto summary = rep.summary();
  EXPECT_EQ(summary["parameter"], "s");
  EXPECT_EQ(summary["points"].size(), 4u);
}

TEST_F(TabularPipeline, SinglePointSweepEqualsPlainCall) {
  const auto rep = sweep_rarity(*model_, *ref_, {5, 5}, {1.0}, 40, 6);
  ASSERT_EQ(rep.points.size(), 1u);
  EXPECT_EQ(rep.points[0].records, generate_lu_tabular(*model_, *ref_, {5, 5}, 40, 6));
}

TEST(SweepGrid, MustBeStrictlyMonotone) {
  EXPECT_THROW(check_grid({}), std::invalid_argument);
  EXPECT_THROW(check_grid({1.0, 1.0}), std::invalid_argument);
  EXPECT_THROW(check_grid({1.0, 0.5, 0.8}), std::invalid_argument);
  EXPECT_NO_THROW(check_grid({1.0, 0.8, 0.6, 0.4, 0.2}));
  EXPECT_NO_THROW(check_grid({0.0, 0.5, 1.0, 2.0}));
  EXPECT_NO_THROW(check_grid({3.0}));
}

// ---------------------------------------------------------------- house sales

TEST(HouseSalesPipeline, RareRecordsAreSchemaValid) {
  const auto dir = std::filesystem::path(UTG_DATA_DIR);
  const auto schema = utg::data::load_schema(dir / "house_sales.schema.json");
  const auto ds = utg::data::load_csv(dir / "house_sales_standin.csv", schema);
  VaeConfig cfg;
  cfg.epochs = 5;
  cfg.seed = 1;
  const auto model = utg::models::train_vae(ds, cfg).model;
  const auto ref = NoveltyIndex::for_table(ds, *model.codec());
  const auto rs = generate_lu_tabular(model, ref, {5, 5}, 100, 1);
  ASSERT_EQ(rs.size(), 100u);
  for (const auto& r : rs) ASSERT_TRUE(utg::data::conforms(schema, r.values)) << r.id;

  utg::testing::TempDir tmp;
  write_csv_projection(tmp / "lu.csv", schema, rs);
  const auto back = utg::data::load_csv(tmp / "lu.csv", schema);
  EXPECT_EQ(back.schema.size(), 14u);
  EXPECT_EQ(back.rows.size(), 100u);
  const auto header = utg::testing::read_text(tmp / "lu.csv");
  EXPECT_EQ(header.substr(0, header.find('\n')),
            "bedrooms,bathrooms,sqft_living,sqft_lot,floors,waterfront,view,condition,grade,sqft_above,"
            "sqft_basement,yr_built,sqft_living15,sqft_lot15");
}

TEST(DecodeTabular, NeedsCodec) {
  utg::models::VaeModel bare(VaeConfig{}, 3);
  EXPECT_THROW(decode_tabular(bare, {std::vector<double>(8, 0.0)}), std::logic_error);
}

// ---------------------------------------------------------------- images

class ImagePipeline : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    images_ = new utg::data::ImageDataset(utg::testing::two_pattern_images(64, 1));
    vq_ = new utg::models::VqVaeModel(utg::models::train_vqvae(*images_, utg::testing::two_pattern_config()).model);
    const auto maps = utg::models::encode_dataset_maps(*vq_, *images_);
    utg::models::PriorConfig pc;
    pc.codebook_size = 8;
    pc.map_rows = 2;
    pc.map_cols = 2;
    pc.channels = 16;
    pc.hidden_layers = 1;
    pc.first_kernel = 3;
    pc.hidden_kernel = 3;
    pc.epochs = 30;
    pc.batch_size = 16;
    pc.learning_rate = 5e-3;
    pc.seed = 2;
    prior_ = new utg::models::PriorModel(utg::models::train_prior(maps, pc).model);
    ref_ = new NoveltyIndex(NoveltyIndex::for_images(*images_));
  }
  static void TearDownTestSuite() {
    delete images_;
    delete vq_;
    delete prior_;
    delete ref_;
  }
  static utg::data::ImageDataset* images_;
  static utg::models::VqVaeModel* vq_;
  static utg::models::PriorModel* prior_;
  static NoveltyIndex* ref_;
};
utg::data::ImageDataset* ImagePipeline::images_ = nullptr;
utg::models::VqVaeModel* ImagePipeline::vq_ = nullptr;
utg::models::PriorModel* ImagePipeline::prior_ = nullptr;
NoveltyIndex* ImagePipeline::ref_ = nullptr;

TEST_F(ImagePipeline, ThresholdOneMatchesUnmanipulated) {
  const auto plain = generate_image_batch(*vq_, *prior_, *ref_, std::nullopt, 100, 3);
  const auto one = generate_lu_images(*vq_, *prior_, *ref_, {1.0}, 100, 3);
  ASSERT_EQ(one.size(), 100u);
  for (std::size_t i = 0; i < 100; ++i) {
    EXPECT_EQ(one[i].latent, plain.records[i].latent);
    EXPECT_EQ(one[i].values, plain.records[i].values);
  }
}

TEST_F(ImagePipeline, BatchIsReproducibleAndShaped) {
  const auto a = generate_lu_images(*vq_, *prior_, *ref_, {0.6}, 100, 4);
  EXPECT_EQ(a, generate_lu_images(*vq_, *prior_, *ref_, {0.6}, 100, 4));
  for (const auto& r : a) {
    ASSERT_TRUE(r.is_image());
    EXPECT_EQ(*r.shape, std::make_pair(std::size_t{8}, std::size_t{8}));
    EXPECT_EQ(r.values.size(), 64u);
    EXPECT_GE(r.novelty, 0.0);
    EXPECT_EQ(std::get<ThresholdParam>(r.params).t, 0.6);
  }
}

TEST_F(ImagePipeline, ImagesAreReconstructible) {
  for (const auto& r : generate_lu_images(*vq_, *prior_, *ref_, {0.4}, 30, 5)) {
    const auto again = redecode(r, *vq_);
    ASSERT_EQ(again, r.values) << r.id;
  }
}

TEST_F(ImagePipeline, GeometryMismatchIsRejected) {
  utg::models::PriorConfig pc;
  pc.codebook_size = 8;
  pc.map_rows = 3;
  pc.map_cols = 2;
  EXPECT_THROW(check_compatible(*vq_, utg::models::PriorModel(pc)), std::invalid_argument);
  pc.map_rows = 2;
  pc.codebook_size = 9;
  EXPECT_THROW(check_compatible(*vq_, utg::models::PriorModel(pc)), std::invalid_argument);
  EXPECT_THROW(generate_lu_images(*vq_, utg::models::PriorModel(pc), *ref_, {0.6}, 1, 1), std::invalid_argument);
}

TEST_F(ImagePipeline, ThresholdSweepAndStrip) {
  const std::vector<double> grid{1.0, 0.8, 0.6, 0.4, 0.2};
  const auto rep = sweep_threshold(*vq_, *prior_, *ref_, grid, 12, 6);
  ASSERT_EQ(rep.points.size(), 5u);
  EXPECT_EQ(rep.parameter, "t");
  // Lower t flattens every cell distribution.
  EXPECT_GT(rep.points.back().mean_entropy, rep.points.front().mean_entropy);
  // One row per grid point, 8 samples each, 2 px gutters.
  const auto strip = sweep_strip(rep, 8);
  EXPECT_EQ(strip.width, 8u * 8u + 9u * 2u);
  EXPECT_EQ(strip.height, 5u * 8u + 6u * 2u);
  // Row 3 column 5 holds sample 5 of t = 0.4.
  const auto& r = rep.points[3].records[5];
  for (std::size_t y = 0; y < 8; ++y)
    for (std::size_t x = 0; x < 8; ++x) {
      const auto px = strip.pixels[(2 + 3 * 10 + y) * strip.width + 2 + 5 * 10 + x];
      ASSERT_EQ(px, static_cast<std::uint8_t>(std::lround(std::clamp(r.values[y * 8 + x], 0.0, 1.0) * 255.0)));
    }
}

TEST_F(ImagePipeline, ExportWritesPngsAndSidecar) {
  utg::testing::TempDir tmp;
  const auto rs = generate_lu_images(*vq_, *prior_, *ref_, {0.6}, 6, 7);
  write_image_records(tmp.path(), rs);
  for (const auto& r : rs) {
    const auto img = utg::data::decode_png(utg::testing::read_bytes(tmp / (r.id + ".png")));
    EXPECT_EQ(img.width, 8u);
    EXPECT_EQ(img.height, 8u);
  }
  EXPECT_EQ(read_jsonl(tmp / "records.jsonl"), rs);
  write_image_grid(tmp / "grid.png", rs, 3);
  const auto grid = utg::data::decode_png(utg::testing::read_bytes(tmp / "grid.png"));
  EXPECT_EQ(grid.width, 3u * 8u + 4u * 2u);
  EXPECT_EQ(grid.height, 2u * 8u + 3u * 2u);
}

// ---------------------------------------------------------------- records

TEST(Records, JsonlRoundTripIsExact) {
  LuRecord a;
  a.id = "r0000";
  a.params = RarityParams{5, 5};
  a.seed = 12345678901234ULL;
  a.latent = std::vector<double>{0.1, -7.25, 1e-300};
  a.values = {3, 2.25, 1180.0};
  a.novelty = 0.30000000000000004;
  a.label = Label::kUnsupposable;
  a.note = "odd \"quote\"\nline";
  a.model_ref = "vae.utgm";
  LuRecord b;
  b.id = "r0001";
  b.params = ThresholdParam{0.6};
  b.latent = utg::models::DiscreteLatentMap{2, 2, {0, 7, 3, 3}};
  b.values = {0.0, 0.5, 1.0, 0.25};
  b.shape = std::make_pair(std::size_t{2}, std::size_t{2});
  const std::vector<LuRecord> rs{a, b};
  EXPECT_EQ(from_jsonl(to_jsonl(rs)), rs);
  utg::testing::TempDir tmp;
  write_jsonl(tmp / "r.jsonl", rs);
  EXPECT_EQ(read_jsonl(tmp / "r.jsonl"), rs);
  // One compact object per line.
  const auto text = to_jsonl(rs);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 2);
}

TEST(Records, JsonCarriesDocumentedFields) {
  LuRecord a;
  a.id = "r0003";
  a.params = RarityParams{1, 2};
  a.latent = std::vector<double>{0.5};
  const auto j = record_to_json(a);
  for (const char* key : {"id", "params", "seed", "latent", "values", "novelty", "label", "note", "model_ref"}) {
    EXPECT_TRUE(j.contains(key)) << key;
  }
  EXPECT_EQ(j["label"], "unlabeled");
}

TEST(Records, LabelNames) {
  for (auto l : {Label::kUnlabeled, Label::kSupposable, Label::kUnsupposable, Label::kUnreal}) {
    EXPECT_EQ(label_from_string(to_string(l)), l);
  }
  EXPECT_THROW(label_from_string("maybe"), std::invalid_argument);
}

TEST(Records, UnwritablePathThrows) {
  EXPECT_THROW(write_jsonl("/nonexistent/dir/r.jsonl", {}), std::runtime_error);
}

}  // namespace
