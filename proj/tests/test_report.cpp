#include <gtest/gtest.h>

#include <filesystem>
#include <unistd.h>

#include "csshap/attribution.hpp"
#include "csshap/io.hpp"
#include "csshap/report.hpp"
#include "oracles.hpp"

namespace {

using namespace csshap;
namespace fs = std::filesystem;

constexpr double kFs = 10000.0;

class HalfEnergyModel final : public ProbabilityModel {
 public:
  std::size_t class_count() const override { return 3; }
  std::size_t input_length() const override { return 2000; }
  Matrix<double> predict_batch(std::span<const TimeSeries> xs) const override {
    Matrix<double> p(xs.size(), 3);
    for (std::size_t i = 0; i < xs.size(); ++i) {
      const auto& v = xs[i].values();
      double e = 0.0;
      for (std::size_t t = 0; t < 1000; ++t) e += v[t] * v[t] / 1000.0;
      std::vector<double> z{e, 0.0, -e};
      softmax_inplace(z);
      for (std::size_t k = 0; k < 3; ++k) p(i, k) = z[k];
    }
    return p;
  }
};

class Report : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() / ("csshap_report_" + std::to_string(getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    schema_ = Json::parse(io::read_text(schema_path("attribution_summary.schema.json")));
  }
  void TearDown() override { fs::remove_all(dir_); }

  void attribute_into(DomainKind kind, PartitionShape shape) {
    const std::optional<WindowSpec> w = WindowSpec::default_window();
    const TimeSeries x(oracle::white_noise(2000, 1), kFs);
    std::vector<TimeSeries> refs{TimeSeries(oracle::white_noise(2000, 2), kFs)};
    AttributionConfig cfg;
    cfg.domain = kind;
    cfg.partition = shape;
    cfg.num_permutations = 4;
    const auto map = attribute(model_, x, make_background(kind, refs, w), cfg, {"Health", "Fault #1", "Fault #2"});
    write_attribution_outputs(map, domain_forward(kind, x, w), dir_ / "attribution" / to_string(kind),
                              R"({"sample_index": 0})");
  }

  fs::path dir_;
  Json schema_;
  HalfEnergyModel model_;
};

TEST_F(Report, AttributionOutputsAreComplete) {
  attribute_into(DomainKind::kCyclicSpectral, {4, 4});
  const auto d = dir_ / "attribution" / "cyclic_spectral";
  for (const char* f : {"summary.json", "class_0.csv", "class_1.csv", "class_2.csv", "class_0.png", "class_2.png",
                        "representation.png"}) {
    EXPECT_TRUE(fs::exists(d / f)) << f;
  }
  const auto csv = parse_attribution_csv(io::read_text(d / "class_1.csv"));
  EXPECT_EQ(csv.values.rows(), 4u);
  EXPECT_EQ(csv.values.cols(), 4u);
}

TEST_F(Report, SummaryValidatesAgainstSchema) {
  attribute_into(DomainKind::kTime, {1, 10});
  const Json summary = Json::parse(io::read_text(dir_ / "attribution" / "time" / "summary.json"));
  EXPECT_TRUE(validate_json_schema(summary, schema_).empty());
  EXPECT_EQ(summary["context"]["sample_index"], 0);
  EXPECT_EQ(summary["cell_count"], 10);

  auto missing = summary;
  missing.erase("efficiency");
  EXPECT_FALSE(validate_json_schema(missing, schema_).empty());
  auto bad_enum = summary;
  bad_enum["domain"] = "wavelet";
  EXPECT_FALSE(validate_json_schema(bad_enum, schema_).empty());
  auto extra = summary;
  extra["surprise"] = 1;
  EXPECT_FALSE(validate_json_schema(extra, schema_).empty());
  auto negative = summary;
  negative["efficiency"][0]["residual"] = -1.0;
  const auto errors = validate_json_schema(negative, schema_);
  ASSERT_EQ(errors.size(), 1u);
  EXPECT_NE(errors[0].find("/efficiency/0/residual"), std::string::npos) << errors[0];
}

TEST_F(Report, StudyReportHasPanelsAndPlaceholders) {
  attribute_into(DomainKind::kTime, {1, 10});
  attribute_into(DomainKind::kCyclicSpectral, {4, 4});
  const auto path = write_study_report(dir_);
  EXPECT_EQ(path, dir_ / "report.md");
  const std::string md = io::read_text(path);
  std::size_t panels = 0;
  for (std::size_t at = md.find("class_"); at != std::string::npos; at = md.find("class_", at + 1)) ++panels;
  EXPECT_EQ(panels, 2u * 3u);
  std::size_t missing = 0;
  for (std::size_t at = md.find("not computed"); at != std::string::npos; at = md.find("not computed", at + 1)) {
    ++missing;
  }
  // training plus the frequency, envelope and time-frequency domains
  EXPECT_EQ(missing, 4u);
  EXPECT_NE(md.find("Summary schema check: valid"), std::string::npos);
  EXPECT_EQ(md.find("INVALID"), std::string::npos);
}

TEST_F(Report, EmptyRunDirectoryStillReports) {
  const std::string md = io::read_text(write_study_report(dir_));
  std::size_t missing = 0;
  for (std::size_t at = md.find("not computed"); at != std::string::npos; at = md.find("not computed", at + 1)) {
    ++missing;
  }
  EXPECT_EQ(missing, 6u);
  EXPECT_THROW(write_study_report(dir_ / "absent"), IoError);
}

TEST_F(Report, RepresentationPanelsForEveryDomain) {
  const std::optional<WindowSpec> w = WindowSpec::default_window();
  const TimeSeries x(oracle::white_noise(2000, 5), kFs);
  for (DomainKind kind : kAllDomains) {
    const Image img = render_representation(domain_forward(kind, x, w));
    EXPECT_EQ(img.width, kPanelWidth) << to_string(kind);
    EXPECT_EQ(img.height, kPanelHeight);
  }
}

}  // namespace
