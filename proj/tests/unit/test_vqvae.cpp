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

#include <array>
#include <cmath>
#include <map>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "grad_suite.hpp"
#include "utg/models/vqvae.hpp"
#include "utg/rng.hpp"

namespace {

using namespace utg::models;
using utg::nn::Var;

// Exhaustive scan written on the test side: strict < keeps the lowest index.
std::int32_t brute_nearest(std::span<const double> z, const std::vector<std::vector<double>>& rows) {
  std::int32_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < rows.size(); ++v) {
    double d = 0.0;
    for (std::size_t k = 0; k < z.size(); ++k) d += (z[k] - rows[v][k]) * (z[k] - rows[v][k]);
    if (d < best_d) {
      best_d = d;
      best = static_cast<std::int32_t>(v);
    }
  }
  return best;
}

// ---------------------------------------------------------------- quantizer

TEST(NearestCode, HandCases) {
  const auto cb = Codebook::from_rows({{0, 0}, {1, 1}});
  EXPECT_EQ(nearest_code(std::vector<double>{0.2, 0.1}, cb), 0);
  EXPECT_EQ(nearest_code(std::vector<double>{0.6, 0.6}, cb), 1);
  EXPECT_EQ(nearest_code(std::vector<double>{0.5, 0.5}, cb), 0);
}

TEST(NearestCode, DuplicateRowsResolveToLowestIndex) {
  const auto cb = Codebook::from_rows({{5, 5}, {1, 1}, {1, 1}, {0, 3}});
  EXPECT_EQ(nearest_code(std::vector<double>{1.2, 0.9}, cb), 1);
  EXPECT_FALSE(cb.degenerate());
  EXPECT_TRUE(Codebook::from_rows({{2, 2}, {2, 2}}).degenerate());
}

TEST(Codebook, Validation) {
  EXPECT_THROW(Codebook::from_rows({{1, 2}}), std::invalid_argument);
  EXPECT_THROW(Codebook::from_rows({{1, 2}, {3}}), std::invalid_argument);
  EXPECT_THROW(Codebook(2, 1, {0.0, std::nan("")}), std::invalid_argument);
  EXPECT_THROW(nearest_code(std::vector<double>{1, 2, 3}, Codebook::from_rows({{0, 0}, {1, 1}})),
               std::invalid_argument);
}

// Property: quantize_nearest equals the exhaustive scan on 10^4 cells. Half of
// the cells live on a coarse integer grid so exact ties are common.
TEST(QuantizerProperty, MatchesBruteForceIncludingTies) {
  utg::Rng rng(77);
  std::normal_distribution<double> n;
  std::uniform_int_distribution<int> grid(-2, 2);
  std::size_t ties = 0;
  for (int round = 0; round < 20; ++round) {
    const bool coarse = round % 2 == 0;
    const std::size_t v = 2 + static_cast<std::size_t>(round % 7) * 3, k = 1 + static_cast<std::size_t>(round % 4);
    std::vector<std::vector<double>> rows(v, std::vector<double>(k));
    for (auto& r : rows)
      for (auto& x : r) x = coarse ? grid(rng) : n(rng);
    const auto cb = Codebook::from_rows(rows);
    LatentMap z{25, 20, k, std::vector<double>(25 * 20 * k)};
    for (auto& x : z.values) x = coarse ? grid(rng) : n(rng);
    const auto dm = quantize_nearest(z, cb);
    ASSERT_EQ(dm.rows, 25u);
    ASSERT_EQ(dm.cols, 20u);
    for (std::size_t i = 0; i < 25; ++i)
      for (std::size_t j = 0; j < 20; ++j) {
        const auto want = brute_nearest(z.cell(i, j), rows);
        ASSERT_EQ(dm.at(i, j), want) << "round " << round << " cell " << i << "," << j;
        // Count cells where some later row is equally near.
        double best = 0.0;
        for (std::size_t c = 0; c < k; ++c) best += std::pow(z.cell(i, j)[c] - rows[want][c], 2);
        for (std::size_t o = static_cast<std::size_t>(want) + 1; o < v; ++o) {
          double d = 0.0;
          for (std::size_t c = 0; c < k; ++c) d += std::pow(z.cell(i, j)[c] - rows[o][c], 2);
          if (d == best) {
            ++ties;
            break;
          }
        }
      }
  }
  EXPECT_GT(ties, 100u);
}

TEST(Embed, ZeroMapGivesFirstCode) {
  const auto cb = Codebook::from_rows({{3, -1}, {0, 0}});
  const auto lm = embed(DiscreteLatentMap{2, 2, {0, 0, 0, 0}}, cb);
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j) EXPECT_EQ(std::vector<double>(lm.cell(i, j).begin(), lm.cell(i, j).end()),
                                                  (std::vector<double>{3, -1}));
}

TEST(Embed, OutOfRangeIndexThrows) {
  const auto cb = Codebook::from_rows({{0}, {1}});
  EXPECT_THROW(embed(DiscreteLatentMap{1, 1, {2}}, cb), std::out_of_range);
  EXPECT_THROW(embed(DiscreteLatentMap{1, 1, {-1}}, cb), std::out_of_range);
}

// Property: quantize, embed, quantize is a fixed point, and maps made of code
// vectors come back unchanged.
TEST(EmbedProperty, QuantizeEmbedIdempotent) {
  utg::Rng rng(5);
  std::normal_distribution<double> n;
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::vector<double>> rows(6, std::vector<double>(3));
    for (auto& r : rows)
      for (auto& x : r) x = n(rng);
    const auto cb = Codebook::from_rows(rows);
    LatentMap z{4, 4, 3, std::vector<double>(48)};
    for (auto& x : z.values) x = n(rng);
    const auto q1 = quantize_nearest(z, cb);
    const auto e1 = embed(q1, cb);
    ASSERT_EQ(quantize_nearest(e1, cb), q1);
    ASSERT_EQ(embed(quantize_nearest(e1, cb), cb).values, e1.values);
  }
}

// ---------------------------------------------------------------- losses

TEST(VqLosses, ZeroWhenQuantizationIsExact) {
  utg::nn::Graph<double> g;
  const utg::nn::Tensor<double> t({1, 2, 1, 1}, {0.5, -0.5});
  const utg::nn::Tensor<double> x({1, 1, 2, 2}, {0.1, 0.2, 0.3, 0.4});
  const auto l = vq_losses<double>(g, g.constant(x), g.constant(x), g.constant(t), g.constant(t), 0.25);
  EXPECT_EQ(g.value(l.codebook_loss).item(), 0.0);
  EXPECT_EQ(g.value(l.commitment_loss).item(), 0.0);
  EXPECT_EQ(g.value(l.recon).item(), 0.0);
}

TEST(VqLosses, MeanNormalisedValues) {
  utg::nn::Graph<double> g;
  const utg::nn::Tensor<double> z({1, 2, 1, 1}, {1.0, 0.0});
  const utg::nn::Tensor<double> q({1, 2, 1, 1}, {0.0, 2.0});
  const utg::nn::Tensor<double> x({1, 1, 1, 2}, {1.0, 0.0});
  const utg::nn::Tensor<double> xr({1, 1, 1, 2}, {0.5, 0.5});
  const auto l = vq_losses<double>(g, g.constant(x), g.constant(xr), g.constant(z), g.constant(q), 0.25);
  EXPECT_DOUBLE_EQ(g.value(l.recon).item(), 0.25);
  EXPECT_DOUBLE_EQ(g.value(l.codebook_loss).item(), 2.5);
  EXPECT_DOUBLE_EQ(g.value(l.commitment_loss).item(), 0.625);
  EXPECT_DOUBLE_EQ(g.value(l.total).item(), 0.25 + 2.5 + 0.625);
}

TEST(StraightThrough, ForwardValueIsQuantized) {
  utg::nn::Graph<double> g;
  Var z = g.variable(utg::nn::Tensor<double>({2}, {1.0, 2.0}));
  Var q = g.constant(utg::nn::Tensor<double>({2}, {5.0, 6.0}));
  Var s = straight_through<double>(g, z, q);
  EXPECT_EQ(g.value(s).storage(), (std::vector<double>{5.0, 6.0}));
  g.backward(utg::nn::sum(g, utg::nn::scale(g, s, 3.0)));
  EXPECT_EQ(g.grad(z).storage(), (std::vector<double>{3.0, 3.0}));
}

TEST(StraightThrough, GradientMatchesFiniteDifferencesAndFormula) {
  for (std::uint64_t seed : {1u, 2u, 3u, 4u, 5u}) {
    const auto r = utg::testing::straight_through_check(seed);
    EXPECT_TRUE(r.passed) << "seed " << seed;
    EXPECT_LE(r.max_relative_error, 1e-4) << "seed " << seed;
    EXPECT_LE(r.formula_gap, 1e-12) << "seed " << seed;
  }
}

// ---------------------------------------------------------------- config and model

TEST(VqVaeConfig, Validation) {
  EXPECT_NO_THROW(VqVaeConfig{}.validate());
  VqVaeConfig c;
  c.codebook_size = 1;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = VqVaeConfig{};
  c.image_height = 27;
  EXPECT_THROW(c.validate(), std::invalid_argument);
  c = VqVaeConfig{};
  c.decoder_channels = {8};
  EXPECT_THROW(c.validate(), std::invalid_argument);
  EXPECT_EQ(VqVaeConfig::from_json(VqVaeConfig{}.to_json()).to_json(), VqVaeConfig{}.to_json());
}

TEST(VqVaeModel, EmptyDatasetIsRejected) {
  EXPECT_THROW(train_vqvae(utg::data::ImageDataset{0, 8, 8, {}, {}}, utg::testing::two_pattern_config()),
               std::invalid_argument);
}

TEST(MapCache, RoundTripAndLayout) {
  utg::testing::TempDir dir;
  const std::vector<DiscreteLatentMap> maps{{2, 3, {0, 1, 2, 3, 4, 300}}, {2, 3, {5, 5, 5, 5, 5, 5}}};
  write_map_cache(dir / "c.bin", maps);
  EXPECT_EQ(read_map_cache(dir / "c.bin"), maps);
  const auto bytes = utg::testing::read_bytes(dir / "c.bin");
  ASSERT_EQ(bytes.size(), 12u + 2u * 6u * 2u);
  EXPECT_EQ(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 12),
            (std::vector<std::uint8_t>{2, 0, 0, 0, 3, 0, 0, 0, 2, 0, 0, 0}));
  // 300 = 0x012C, little-endian.
  EXPECT_EQ(bytes[12 + 10], 0x2C);
  EXPECT_EQ(bytes[12 + 11], 0x01);
}

TEST(MapCache, TruncatedFileThrows) {
  utg::testing::TempDir dir;
  write_map_cache(dir / "c.bin", {{1, 2, {1, 2}}});
  auto bytes = utg::testing::read_bytes(dir / "c.bin");
  bytes.pop_back();
  utg::testing::write_text(dir / "c.bin", std::string(bytes.begin(), bytes.end()));
  EXPECT_THROW(read_map_cache(dir / "c.bin"), std::runtime_error);
}

// Trained once on the two-pattern fixture and shared below.
class TwoPatternVq : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    images_ = new utg::data::ImageDataset(utg::testing::two_pattern_images(64, 1));
    result_ = new VqTrainResult(train_vqvae(*images_, utg::testing::two_pattern_config()));
    maps_ = new std::vector<DiscreteLatentMap>(encode_dataset_maps(result_->model, *images_));
  }
  static void TearDownTestSuite() {
    delete images_;
    delete result_;
    delete maps_;
  }
  static utg::data::ImageDataset* images_;
  static VqTrainResult* result_;
  static std::vector<DiscreteLatentMap>* maps_;
};
utg::data::ImageDataset* TwoPatternVq::images_ = nullptr;
VqTrainResult* TwoPatternVq::result_ = nullptr;
std::vector<DiscreteLatentMap>* TwoPatternVq::maps_ = nullptr;

TEST_F(TwoPatternVq, ReconstructionLossFallsBelowQuarter) {
  const auto& h = result_->loss_history;
  ASSERT_EQ(h.size(), utg::testing::two_pattern_config().epochs + 1);
  for (const auto& e : h) {
    ASSERT_TRUE(std::isfinite(e.total));
    ASSERT_GE(e.recon, 0.0);
    ASSERT_GE(e.codebook, 0.0);
    ASSERT_GE(e.commitment, 0.0);
  }
  EXPECT_LT(h.back().recon, 0.25 * h.front().recon) << "initial " << h.front().recon << " final " << h.back().recon;
}

TEST_F(TwoPatternVq, AtLeastTwoCodesInUse) {
  std::size_t used = 0;
  for (auto c : result_->usage) used += c > 0;
  EXPECT_GE(used, 2u);
}

TEST_F(TwoPatternVq, MapsHaveConfiguredShape) {
  ASSERT_EQ(maps_->size(), images_->count);
  for (const auto& m : *maps_) {
    ASSERT_EQ(m.rows, 2u);
    ASSERT_EQ(m.cols, 2u);
    ASSERT_EQ(m.indices.size(), 4u);
  }
}

TEST_F(TwoPatternVq, PatternClassesGetDistinctSignatures) {
  std::map<std::vector<std::int32_t>, std::array<int, 2>> seen;
  for (std::size_t i = 0; i < maps_->size(); ++i) ++seen[(*maps_)[i].indices][images_->labels[i]];
  // Most frequent signature per class.
  std::array<std::vector<std::int32_t>, 2> top;
  std::array<int, 2> best{-1, -1};
  for (const auto& [sig, counts] : seen)
    for (int c = 0; c < 2; ++c)
      if (counts[c] > best[c]) {
        best[c] = counts[c];
        top[c] = sig;
      }
  EXPECT_NE(top[0], top[1]);
}

TEST_F(TwoPatternVq, IdenticalImagesGiveIdenticalMaps) {
  utg::data::ImageDataset twin{2, 8, 8, {}, {}};
  const auto img = images_->image(3);
  twin.pixels.insert(twin.pixels.end(), img.begin(), img.end());
  twin.pixels.insert(twin.pixels.end(), img.begin(), img.end());
  const auto maps = encode_dataset_maps(result_->model, twin);
  EXPECT_EQ(maps[0], maps[1]);
  EXPECT_EQ(maps[0], (*maps_)[3]);
}

TEST_F(TwoPatternVq, DecodeOfEncodeIsClose) {
  for (std::size_t i = 0; i < 16; ++i) {
    const auto out = decode_map(result_->model, (*maps_)[i]);
    ASSERT_EQ(out.size(), 64u);
    double mae = 0.0;
    for (std::size_t p = 0; p < 64; ++p) {
      ASSERT_GE(out[p], 0.0f);
      ASSERT_LE(out[p], 1.0f);
      mae += std::abs(out[p] - images_->image(i)[p]);
    }
    EXPECT_LT(mae / 64.0, 0.15) << "image " << i;
  }
}

TEST_F(TwoPatternVq, DecodeIsDeterministicAndChecksIndices) {
  EXPECT_EQ(decode_map(result_->model, (*maps_)[0]), decode_map(result_->model, (*maps_)[0]));
  EXPECT_THROW(decode_map(result_->model, DiscreteLatentMap{2, 2, {0, 1, 8, 0}}), std::out_of_range);
}

TEST_F(TwoPatternVq, SaveLoadKeepsDecoderAndCodebook) {
  utg::testing::TempDir dir;
  result_->model.save(dir / "vq.utgm");
  const auto back = VqVaeModel::load(dir / "vq.utgm");
  EXPECT_EQ(back.codebook().vectors, result_->model.codebook().vectors);
  EXPECT_EQ(encode_dataset_maps(back, *images_), *maps_);
  EXPECT_EQ(decode_map(back, (*maps_)[5]), decode_map(result_->model, (*maps_)[5]));
}

TEST(TrainVqVae, FixedSeedIsBitIdentical) {
  const auto images = utg::testing::two_pattern_images(8, 2);
  auto cfg = utg::testing::two_pattern_config();
  cfg.epochs = 2;
  const auto a = train_vqvae(images, cfg), b = train_vqvae(images, cfg);
  EXPECT_EQ(utg::nn::encode_model_file(a.model.to_model_file()), utg::nn::encode_model_file(b.model.to_model_file()));
  EXPECT_EQ(a.usage, b.usage);
}

}  // namespace
