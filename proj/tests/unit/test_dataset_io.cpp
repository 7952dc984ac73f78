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

#include <cmath>
#include <fstream>
#include <functional>
#include <random>

#include <gtest/gtest.h>

#include "fixtures.hpp"
#include "utg/data/house_sales.hpp"
#include "utg/data/images.hpp"
#include "utg/data/tabular.hpp"
#include "utg/rng.hpp"

namespace {

using namespace utg::data;
using utg::testing::TempDir;
using utg::testing::write_text;

const char* kHouseHeader =
    "bedrooms,bathrooms,sqft_living,sqft_lot,floors,waterfront,view,condition,grade,sqft_above,"
    "sqft_basement,yr_built,sqft_living15,sqft_lot15\n";

void write_bytes(const std::filesystem::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

// Big-endian header built by hand rather than through the library writer.
std::vector<std::uint8_t> idx_header(std::uint32_t magic, std::vector<std::uint32_t> dims) {
  std::vector<std::uint8_t> out;
  auto put = [&](std::uint32_t v) {
    out.push_back(static_cast<std::uint8_t>(v >> 24));
    out.push_back(static_cast<std::uint8_t>(v >> 16));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
    out.push_back(static_cast<std::uint8_t>(v));
  };
  put(magic);
  for (auto d : dims) put(d);
  return out;
}

LoadError::Kind load_error_kind(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const LoadError& e) {
    return e.kind();
  }
  ADD_FAILURE() << "expected a LoadError";
  return LoadError::Kind::kEmpty;
}

// ---------------------------------------------------------------- schema

TEST(Schema, HouseSalesHasFourteenTypedColumns) {
  const auto s = house_sales_schema();
  ASSERT_EQ(s.size(), 14u);
  const auto& bath = s.columns[*s.index_of("bathrooms")];
  EXPECT_EQ(bath.kind, ColumnKind::kStepped);
  EXPECT_DOUBLE_EQ(*bath.step, 0.25);
  const auto& floors = s.columns[*s.index_of("floors")];
  EXPECT_EQ(floors.kind, ColumnKind::kStepped);
  EXPECT_DOUBLE_EQ(*floors.step, 0.5);
  EXPECT_NO_THROW(s.validate());
}

TEST(Schema, JsonRoundTripKeepsEveryField) {
  const auto s = house_sales_schema();
  const auto back = schema_from_json(schema_to_json(s));
  ASSERT_EQ(back.size(), s.size());
  for (std::size_t c = 0; c < s.size(); ++c) {
    EXPECT_EQ(back.columns[c].name, s.columns[c].name);
    EXPECT_EQ(back.columns[c].kind, s.columns[c].kind);
    EXPECT_EQ(back.columns[c].step, s.columns[c].step);
    EXPECT_EQ(back.columns[c].allowed_values, s.columns[c].allowed_values);
    EXPECT_EQ(back.columns[c].unit, s.columns[c].unit);
    EXPECT_EQ(back.columns[c].min, s.columns[c].min);
    EXPECT_EQ(back.columns[c].max, s.columns[c].max);
  }
}

TEST(Schema, RejectsBrokenInvariants) {
  Schema dup = utg::testing::continuous_schema(2);
  dup.columns[1].name = "c0";
  EXPECT_THROW(dup.validate(), std::invalid_argument);

  Schema no_step = utg::testing::continuous_schema(1);
  no_step.columns[0].kind = ColumnKind::kStepped;
  EXPECT_THROW(no_step.validate(), std::invalid_argument);
  no_step.columns[0].step = 0.0;
  EXPECT_THROW(no_step.validate(), std::invalid_argument);
  no_step.columns[0].step = -0.5;
  EXPECT_THROW(no_step.validate(), std::invalid_argument);

  Schema empty_levels = utg::testing::continuous_schema(1);
  empty_levels.columns[0].kind = ColumnKind::kCategorical;
  EXPECT_THROW(empty_levels.validate(), std::invalid_argument);

  Schema bounds = utg::testing::continuous_schema(1);
  bounds.columns[0].min = 2.0;
  bounds.columns[0].max = 1.0;
  EXPECT_THROW(bounds.validate(), std::invalid_argument);
}

TEST(Schema, BundledSchemaFileMatchesBuiltIn) {
  const auto file = load_schema(std::filesystem::path(UTG_DATA_DIR) / "house_sales.schema.json");
  EXPECT_EQ(file.names(), house_sales_schema().names());
}

// ---------------------------------------------------------------- load_csv

TEST(LoadCsv, OneRowGivesOneRecord) {
  TempDir dir;
  write_text(dir / "one.csv", "c0,c1\n1.5,2\n");
  const auto ds = load_csv(dir / "one.csv", utg::testing::continuous_schema(2));
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_DOUBLE_EQ(ds.rows[0][0], 1.5);
  EXPECT_DOUBLE_EQ(ds.rows[0][1], 2.0);
}

TEST(LoadCsv, TableRowWithFractionalCounts) {
  TempDir dir;
  write_text(dir / "h.csv", std::string(kHouseHeader) + "3,6.75,8468,51257,3.5,1,4,5,13,5673,2783,1995,2986,32233\n");
  const auto ds = load_csv(dir / "h.csv", house_sales_schema());
  ASSERT_EQ(ds.size(), 1u);
  EXPECT_DOUBLE_EQ(ds.rows[0][1], 6.75);
  EXPECT_DOUBLE_EQ(ds.rows[0][4], 3.5);
  EXPECT_DOUBLE_EQ(ds.rows[0][8], 13.0);
}

TEST(LoadCsv, UnparseableCellNamesRowAndColumn) {
  TempDir dir;
  write_text(dir / "bad.csv", std::string(kHouseHeader) + "abc,2,1000,5000,1,0,0,3,7,1000,0,1990,1000,5000\n");
  try {
    load_csv(dir / "bad.csv", house_sales_schema());
    FAIL() << "expected a LoadError";
  } catch (const LoadError& e) {
    EXPECT_EQ(e.kind(), LoadError::Kind::kUnparseableCell);
    EXPECT_EQ(e.row(), 1u);
    EXPECT_EQ(e.column(), "bedrooms");
    EXPECT_NE(std::string(e.what()).find("row 1"), std::string::npos);
    EXPECT_NE(std::string(e.what()).find("bedrooms"), std::string::npos);
  }
}

TEST(LoadCsv, MissingColumnIsTyped) {
  TempDir dir;
  write_text(dir / "m.csv", "c0\n1\n");
  EXPECT_EQ(load_error_kind([&] { load_csv(dir / "m.csv", utg::testing::continuous_schema(2)); }),
            LoadError::Kind::kMissingColumn);
}

TEST(LoadCsv, ConstantColumnIsRejected) {
  TempDir dir;
  write_text(dir / "k.csv", "c0,c1\n1,5\n2,5\n3,5\n");
  try {
    load_csv(dir / "k.csv", utg::testing::continuous_schema(2));
    FAIL() << "expected a LoadError";
  } catch (const LoadError& e) {
    EXPECT_EQ(e.kind(), LoadError::Kind::kConstantColumn);
    EXPECT_EQ(e.column(), "c1");
  }
}

TEST(LoadCsv, KindViolationReportsCoordinates) {
  TempDir dir;
  write_text(dir / "v.csv",
             std::string(kHouseHeader) + "3,2,1000,5000,1,0,0,3,7,1000,0,1990,1000,5000\n"
                                         "3,2.1,1000,5000,1,0,0,3,7,1000,0,1990,1000,5000\n");
  try {
    load_csv(dir / "v.csv", house_sales_schema());
    FAIL() << "expected a LoadError";
  } catch (const LoadError& e) {
    EXPECT_EQ(e.kind(), LoadError::Kind::kKindViolation);
    EXPECT_EQ(e.row(), 2u);
    EXPECT_EQ(e.column(), "bathrooms");
  }
}

TEST(LoadCsv, MissingFileIsTyped) {
  EXPECT_EQ(load_error_kind([] { load_csv("/nonexistent/x.csv", utg::testing::continuous_schema(1)); }),
            LoadError::Kind::kMissingFile);
}

TEST(LoadCsv, NormStatsArePopulationMoments) {
  TempDir dir;
  write_text(dir / "s.csv", "c0\n2\n4\n6\n");
  const auto ds = load_csv(dir / "s.csv", utg::testing::continuous_schema(1));
  EXPECT_DOUBLE_EQ(ds.norm_stats.mean[0], 4.0);
  EXPECT_NEAR(ds.norm_stats.stddev[0], std::sqrt(8.0 / 3.0), 1e-15);
}

TEST(LoadCsv, StandInConformsToSchema) {
  const auto dir = std::filesystem::path(UTG_DATA_DIR);
  const auto schema = load_schema(dir / "house_sales.schema.json");
  const auto ds = load_csv(dir / "house_sales_standin.csv", schema);
  EXPECT_EQ(ds.size(), 2000u);
  for (const auto& row : ds.rows) ASSERT_TRUE(conforms(schema, row));
}

TEST(LoadCsv, WriteThenLoadIsExact) {
  TempDir dir;
  const auto ds = synth_house_sales(50, 3);
  write_csv(dir / "w.csv", ds.schema, ds.rows);
  const auto back = load_csv(dir / "w.csv", ds.schema);
  EXPECT_EQ(back.rows, ds.rows);
}

// ---------------------------------------------------------------- normalize

TEST(Normalize, TwoPointZScore) {
  auto ds = make_dataset(utg::testing::continuous_schema(1), {{2.0}, {4.0}});
  const auto z = normalize(ds);
  EXPECT_DOUBLE_EQ(z[0][0], -1.0);
  EXPECT_DOUBLE_EQ(z[1][0], 1.0);
}

TEST(Normalize, ColumnsHaveZeroMeanUnitStd) {
  const auto ds = synth_house_sales(500, 11);
  const auto codec = FeatureCodec::fit(ds);
  const auto z = normalize(ds);
  std::size_t col = 0;
  for (const auto& spec : ds.schema.columns) {
    if (spec.kind == ColumnKind::kCategorical) {
      col += spec.allowed_values.size();
      continue;
    }
    double s = 0.0, ss = 0.0;
    for (const auto& r : z) s += r[col];
    const double m = s / static_cast<double>(z.size());
    for (const auto& r : z) ss += (r[col] - m) * (r[col] - m);
    EXPECT_NEAR(m, 0.0, 1e-9) << spec.name;
    EXPECT_NEAR(std::sqrt(ss / static_cast<double>(z.size())), 1.0, 1e-9) << spec.name;
    ++col;
  }
  EXPECT_EQ(col, codec.width());
}

TEST(Normalize, AlreadyNormalizedColumnIsUnchanged) {
  const std::vector<std::vector<double>> rows{{-1.5}, {-0.5}, {0.5}, {1.5}};
  // Population std of {-1.5,-0.5,0.5,1.5} is sqrt(5)/2; rescale to unit std.
  std::vector<std::vector<double>> unit;
  for (const auto& r : rows) unit.push_back({r[0] / (std::sqrt(5.0) / 2.0)});
  const auto z = normalize(make_dataset(utg::testing::continuous_schema(1), unit));
  for (std::size_t i = 0; i < unit.size(); ++i) EXPECT_NEAR(z[i][0], unit[i][0], 1e-9);
}

TEST(Normalize, CategoricalColumnsBecomeOneHot) {
  const auto ds = synth_house_sales(200, 2);
  const auto codec = FeatureCodec::fit(ds);
  // 12 scalar columns + 5 view levels + 5 condition levels.
  EXPECT_EQ(codec.width(), 12u + 5u + 5u);
  const auto f = codec.encode(ds.rows[0]);
  const auto view = ds.schema.columns[*ds.schema.index_of("view")];
  double hot = 0.0;
  for (std::size_t k = 0; k < 5; ++k) hot += f[6 + k];
  EXPECT_DOUBLE_EQ(hot, 1.0);
  EXPECT_DOUBLE_EQ(f[6 + static_cast<std::size_t>(ds.rows[0][6])], 1.0) << view.name;
}

// Property: denormalize(normalize(row)) == row for arbitrary finite rows.
TEST(NormalizeProperty, RoundTripIsIdentity) {
  const auto ds = synth_house_sales(300, 4);
  const auto codec = FeatureCodec::fit(ds);
  utg::Rng rng(99);
  std::uniform_real_distribution<double> wide(-1e6, 1e6);
  std::uniform_int_distribution<int> level(0, 4);
  for (int trial = 0; trial < 2000; ++trial) {
    std::vector<double> row(ds.schema.size());
    for (std::size_t c = 0; c < row.size(); ++c) {
      const auto& spec = ds.schema.columns[c];
      row[c] = spec.kind == ColumnKind::kCategorical ? spec.allowed_values[static_cast<std::size_t>(level(rng))]
                                                     : wide(rng);
    }
    const auto back = codec.decode(codec.encode(row));
    for (std::size_t c = 0; c < row.size(); ++c) {
      ASSERT_NEAR(back[c], row[c], 1e-9 * std::max(1.0, std::abs(row[c]))) << ds.schema.columns[c].name;
    }
  }
}

// ---------------------------------------------------------------- round_discrete

TEST(RoundDiscrete, HandCases) {
  const auto s = house_sales_schema();
  std::vector<double> raw{3.0, 6.8, 1000.4, 5000.5, 3.47, 0.7, 2.6, 3.2, 7.5, 900.5, 0.0, 1990.49, 1200.0, 4000.0};
  const auto r = round_discrete(raw, s);
  EXPECT_DOUBLE_EQ(r[0], 3.0);
  EXPECT_DOUBLE_EQ(r[1], 6.75);
  EXPECT_DOUBLE_EQ(r[2], 1000.0);
  EXPECT_DOUBLE_EQ(r[3], 5001.0);  // half away from zero
  EXPECT_DOUBLE_EQ(r[4], 3.5);
  EXPECT_DOUBLE_EQ(r[5], 1.0);
  EXPECT_DOUBLE_EQ(r[6], 3.0);
  EXPECT_DOUBLE_EQ(r[7], 3.0);
  EXPECT_DOUBLE_EQ(r[8], 8.0);
  EXPECT_DOUBLE_EQ(r[11], 1990.0);
}

TEST(RoundDiscrete, HalfAwayFromZeroOnNegatives) {
  Schema s = utg::testing::continuous_schema(2);
  s.columns[0].kind = ColumnKind::kInteger;
  s.columns[1].kind = ColumnKind::kInteger;
  const auto r = round_discrete(std::vector<double>{-2.5, 2.5}, s);
  EXPECT_DOUBLE_EQ(r[0], -3.0);
  EXPECT_DOUBLE_EQ(r[1], 3.0);
}

TEST(RoundDiscrete, NaturalRangeIsEnforced) {
  const auto s = house_sales_schema();
  std::vector<double> raw(14, -50.0);
  raw[11] = 1950.0;
  const auto r = round_discrete(raw, s);
  EXPECT_DOUBLE_EQ(r[0], 0.0);   // bedrooms
  EXPECT_DOUBLE_EQ(r[2], 0.0);   // sqft_living
  EXPECT_DOUBLE_EQ(r[8], 1.0);   // grade lower bound
  raw[8] = 40.0;
  EXPECT_DOUBLE_EQ(round_discrete(raw, s)[8], 13.0);
  EXPECT_TRUE(conforms(s, r));
}

TEST(RoundDiscrete, OffGridBoundStaysInside) {
  Schema s = utg::testing::continuous_schema(1);
  s.columns[0].kind = ColumnKind::kStepped;
  s.columns[0].step = 0.5;
  s.columns[0].min = 0.3;
  s.columns[0].max = 2.2;
  EXPECT_DOUBLE_EQ(round_discrete(std::vector<double>{-4.0}, s)[0], 0.5);
  EXPECT_DOUBLE_EQ(round_discrete(std::vector<double>{9.0}, s)[0], 2.0);
}

// Properties over random raw rows: output conforms and rounding is idempotent.
TEST(RoundDiscreteProperty, ConformsAndIdempotent) {
  const auto s = house_sales_schema();
  utg::Rng rng(7);
  std::uniform_real_distribution<double> wide(-1e5, 1e5);
  std::normal_distribution<double> near(0.0, 5.0);
  for (int trial = 0; trial < 10000; ++trial) {
    std::vector<double> raw(s.size());
    for (auto& v : raw) v = trial % 2 ? wide(rng) : near(rng);
    const auto once = round_discrete(raw, s);
    ASSERT_TRUE(conforms(s, once)) << "trial " << trial;
    ASSERT_EQ(round_discrete(once, s), once) << "trial " << trial;
  }
}

// ---------------------------------------------------------------- IDX

TEST(LoadIdx, HandBuiltTwoByTwo) {
  TempDir dir;
  auto bytes = idx_header(0x00000803, {1, 2, 2});
  for (std::uint8_t b : {0, 255, 128, 64}) bytes.push_back(b);
  write_bytes(dir / "img", bytes);
  auto lb = idx_header(0x00000801, {1});
  lb.push_back(7);
  write_bytes(dir / "lbl", lb);

  const auto ds = load_idx(dir / "img", dir / "lbl");
  ASSERT_EQ(ds.count, 1u);
  ASSERT_EQ(ds.height, 2u);
  ASSERT_EQ(ds.width, 2u);
  EXPECT_FLOAT_EQ(ds.pixels[0], 0.0f);
  EXPECT_FLOAT_EQ(ds.pixels[1], 1.0f);
  EXPECT_NEAR(ds.pixels[2], 0.50196, 1e-5);
  EXPECT_NEAR(ds.pixels[3], 0.25098, 1e-5);
  ASSERT_EQ(ds.labels.size(), 1u);
  EXPECT_EQ(ds.labels[0], 7);
}

TEST(LoadIdx, WrongMagicIsRejected) {
  TempDir dir;
  auto bytes = idx_header(0x00000801, {1, 2, 2});
  bytes.resize(bytes.size() + 4, 0);
  write_bytes(dir / "img", bytes);
  EXPECT_EQ(load_error_kind([&] { load_idx(dir / "img"); }), LoadError::Kind::kBadMagic);
}

// Property: every header/payload mismatch, short or long, is rejected.
TEST(LoadIdxProperty, AnyLengthMismatchIsRejected) {
  TempDir dir;
  for (std::uint32_t n = 1; n <= 3; ++n) {
    const std::size_t payload = n * 3 * 2;
    for (std::size_t actual = 0; actual <= payload + 3; ++actual) {
      auto bytes = idx_header(0x00000803, {n, 3, 2});
      bytes.resize(bytes.size() + actual, 9);
      write_bytes(dir / "img", bytes);
      if (actual == payload) {
        EXPECT_NO_THROW(load_idx(dir / "img"));
      } else {
        EXPECT_EQ(load_error_kind([&] { load_idx(dir / "img"); }), LoadError::Kind::kTruncated)
            << "n=" << n << " bytes=" << actual;
      }
    }
  }
}

TEST(LoadIdx, LabelCountMismatchIsRejected) {
  TempDir dir;
  auto bytes = idx_header(0x00000803, {2, 1, 1});
  bytes.push_back(0);
  bytes.push_back(1);
  write_bytes(dir / "img", bytes);
  auto lb = idx_header(0x00000801, {1});
  lb.push_back(3);
  write_bytes(dir / "lbl", lb);
  EXPECT_THROW(load_idx(dir / "img", dir / "lbl"), LoadError);
}

TEST(LoadIdx, BundledSubsetHasFiveThousandDigits) {
  const auto dir = std::filesystem::path(UTG_DATA_DIR) / "mnist5k";
  const auto ds = load_idx(dir / "images-idx3-ubyte", dir / "labels-idx1-ubyte");
  EXPECT_EQ(ds.count, 5000u);
  EXPECT_EQ(ds.height, 28u);
  EXPECT_EQ(ds.width, 28u);
  for (float p : ds.pixels) ASSERT_TRUE(p >= 0.0f && p <= 1.0f);
  for (auto l : ds.labels) ASSERT_TRUE(l >= 0 && l <= 9);
}

TEST(Png, EncodeDecodeRoundTrip) {
  GrayImage img{3, 2, {0, 10, 20, 200, 250, 255}};
  const auto back = decode_png(encode_png(img));
  EXPECT_EQ(back.width, 3u);
  EXPECT_EQ(back.height, 2u);
  EXPECT_EQ(back.pixels, img.pixels);
}

TEST(Png, ByteConversionClampsAndRounds) {
  EXPECT_EQ(to_byte(-0.2f), 0);
  EXPECT_EQ(to_byte(1.7f), 255);
  EXPECT_EQ(to_byte(0.5f), 128);
}

}  // namespace
