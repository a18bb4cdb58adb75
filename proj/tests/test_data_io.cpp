#include <gtest/gtest.h>

#include "support.hpp"

namespace {

using namespace derc;
using derc::testing::TempDir;

TEST(LoadCsv, MeanImputesMissingCells) {
  TempDir dir;
  text::write_file(dir.file("d.csv"), "sample_id,f0,f1,label\na,0.2,0.5,0\nb,NA,0.6,1\nc,0.4,,1\n");
  const auto d = load_csv(dir.file("d.csv"), true);
  EXPECT_DOUBLE_EQ(d.values(1, 0), 0.3);
  EXPECT_DOUBLE_EQ(d.values(2, 1), 0.55);
  EXPECT_EQ(*d.labels, (Labels{0, 1, 1}));
  EXPECT_EQ(d.sample_ids, (std::vector<std::string>{"a", "b", "c"}));
}

TEST(LoadCsv, DropPolicyRemovesIncompleteFeatures) {
  TempDir dir;
  text::write_file(dir.file("d.csv"), "f0,f1\n0.2,0.5\nNA,0.6\n");
  const auto d = load_csv(dir.file("d.csv"), false, MissingPolicy::drop_feature);
  EXPECT_EQ(d.feature_ids, (std::vector<std::string>{"f1"}));
  EXPECT_EQ(d.dropped_feature_ids, (std::vector<std::string>{"f0"}));
}

TEST(LoadCsv, AllMissingFeatureIsDroppedAndRecorded) {
  TempDir dir;
  text::write_file(dir.file("d.csv"), "f0,f1\nNA,0.5\nNA,0.6\n");
  const auto d = load_csv(dir.file("d.csv"), false);
  EXPECT_EQ(d.n_features(), 1u);
  EXPECT_EQ(d.dropped_feature_ids, (std::vector<std::string>{"f0"}));
}

TEST(LoadCsv, OutOfRangeValueIsValidationError) {
  TempDir dir;
  text::write_file(dir.file("d.csv"), "f0\n0.5\n1.2\n");
  EXPECT_THROW(load_csv(dir.file("d.csv"), false), ValidationError);
}

TEST(LoadCsv, RaggedRowIsParseError) {
  TempDir dir;
  text::write_file(dir.file("d.csv"), "f0,f1\n0.5,0.1\n0.2\n");
  try {
    load_csv(dir.file("d.csv"), false);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 3"), std::string::npos);
  }
}

TEST(LoadCsv, NonNumericCellIsParseError) {
  TempDir dir;
  text::write_file(dir.file("d.csv"), "f0\nabc\n");
  EXPECT_THROW(load_csv(dir.file("d.csv"), false), ParseError);
}

TEST(LoadCsv, MissingLabelColumnWhenRequired) {
  TempDir dir;
  text::write_file(dir.file("d.csv"), "f0\n0.5\n");
  EXPECT_THROW(load_csv(dir.file("d.csv"), true), ValidationError);
}

TEST(LoadCsv, NonBinaryLabelRejected) {
  TempDir dir;
  text::write_file(dir.file("d.csv"), "f0,label\n0.5,2\n");
  EXPECT_THROW(load_csv(dir.file("d.csv"), true), ValidationError);
}

TEST(LoadCsv, MissingFileIsArgumentError) {
  EXPECT_THROW(load_csv("/nonexistent/file.csv", false), ArgumentError);
}

TEST(LoadCsv, RoundTripIsExact) {
  TempDir dir;
  SynthSpec spec;
  spec.n_samples = 6;
  spec.n_features = 5;
  spec.n_informative = 2;
  const auto d = generate_synthetic(spec);
  save_csv(d, dir.file("d.csv"));
  const auto back = load_csv(dir.file("d.csv"), true);
  EXPECT_EQ(back.values, d.values);
  EXPECT_EQ(*back.labels, *d.labels);
  EXPECT_EQ(back.feature_ids, d.feature_ids);
}

TEST(SeriesMatrix, TransposesProbesToColumns) {
  TempDir dir;
  text::write_file(dir.file("s.txt"),
                   "!Series_title\t\"x\"\n"
                   "!series_matrix_table_begin\n"
                   "\"ID_REF\"\t\"GSM1\"\t\"GSM2\"\t\"GSM3\"\n"
                   "\"cg1\"\t0.1\t0.2\t0.3\n"
                   "\"cg2\"\t0.9\tnull\t0.7\n"
                   "!series_matrix_table_end\n");
  const auto d = load_series_matrix(dir.file("s.txt"));
  ASSERT_EQ(d.n_samples(), 3u);
  ASSERT_EQ(d.n_features(), 2u);
  EXPECT_EQ(d.sample_ids, (std::vector<std::string>{"GSM1", "GSM2", "GSM3"}));
  EXPECT_EQ(d.feature_ids, (std::vector<std::string>{"cg1", "cg2"}));
  EXPECT_DOUBLE_EQ(d.values(2, 0), 0.3);
  EXPECT_DOUBLE_EQ(d.values(1, 1), 0.8);
  EXPECT_FALSE(d.labels);
}

TEST(SeriesMatrix, MissingEndMarkerNamesLine) {
  TempDir dir;
  text::write_file(dir.file("s.txt"), "!series_matrix_table_begin\nID\tA\ncg1\t0.1\n");
  try {
    load_series_matrix(dir.file("s.txt"));
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 1"), std::string::npos);
  }
}

TEST(SeriesMatrix, MissingBeginMarker) {
  TempDir dir;
  text::write_file(dir.file("s.txt"), "!Series_title\tx\n");
  EXPECT_THROW(load_series_matrix(dir.file("s.txt")), ParseError);
}

TEST(AttachLabels, MatchesBySampleId) {
  TempDir dir;
  text::write_file(dir.file("d.csv"), "sample_id,f0\na,0.1\nb,0.2\n");
  text::write_file(dir.file("l.csv"), "sample_id,label\nb,1\na,0\n");
  auto d = load_csv(dir.file("d.csv"), false);
  attach_labels(d, dir.file("l.csv"));
  EXPECT_EQ(*d.labels, (Labels{0, 1}));
}

TEST(AttachLabels, UnknownSampleRejected) {
  TempDir dir;
  text::write_file(dir.file("d.csv"), "sample_id,f0\na,0.1\nc,0.2\n");
  text::write_file(dir.file("l.csv"), "sample_id,label\na,0\nb,1\n");
  auto d = load_csv(dir.file("d.csv"), false);
  EXPECT_THROW(attach_labels(d, dir.file("l.csv")), ValidationError);
}

TEST(Validate, DuplicateFeatureIdRejected) {
  EXPECT_THROW(assemble({{0.1}, {0.2}}, {"a", "a"}, {"s"}, std::nullopt, MissingPolicy::mean_impute),
               ValidationError);
}

TEST(Synthetic, DeterministicForSeed) {
  SynthSpec spec;
  spec.n_samples = 20;
  spec.n_features = 30;
  spec.n_informative = 5;
  const auto a = generate_synthetic(spec);
  const auto b = generate_synthetic(spec);
  EXPECT_EQ(a.values, b.values);
  EXPECT_EQ(*a.labels, *b.labels);
  spec.seed += 1;
  EXPECT_NE(generate_synthetic(spec).values, a.values);
}

TEST(Synthetic, ShapeAndClassBalance) {
  SynthSpec spec;
  spec.class_ratio = 0.3;
  const auto d = generate_synthetic(spec);
  EXPECT_EQ(d.n_samples(), 100u);
  EXPECT_EQ(d.n_features(), 500u);
  EXPECT_EQ(std::count(d.labels->begin(), d.labels->end(), 1), 30);
  EXPECT_GE(d.values.minCoeff(), 0.0);
  EXPECT_LE(d.values.maxCoeff(), 1.0);
}

TEST(Synthetic, NoInformativeFeaturesMeansNoSignal) {
  SynthSpec spec;
  spec.n_informative = 0;
  spec.seed = 11;
  const auto d = generate_synthetic(spec);
  std::size_t quiet = 0;
  std::vector<double> g0, g1;
  for (Eigen::Index j = 0; j < d.values.cols(); ++j) {
    g0.clear();
    g1.clear();
    for (Eigen::Index i = 0; i < d.values.rows(); ++i)
      ((*d.labels)[static_cast<std::size_t>(i)] ? g1 : g0).push_back(d.values(i, j));
    quiet += stats::welch_t_test(g0, g1) > 0.001;
  }
  EXPECT_GE(static_cast<double>(quiet) / static_cast<double>(d.n_features()), 0.99);
}

TEST(Synthetic, InvalidSpecRejected) {
  SynthSpec spec;
  spec.n_informative = spec.n_features + 1;
  EXPECT_THROW(generate_synthetic(spec), ArgumentError);
  spec = SynthSpec{};
  spec.class_ratio = 1.0;
  EXPECT_THROW(generate_synthetic(spec), ArgumentError);
}

}  // namespace
