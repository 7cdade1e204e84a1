#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "csshap/domains.hpp"
#include "csshap/matrix.hpp"
#include "csshap/model.hpp"
#include "csshap/parallel.hpp"
#include "csshap/shapley.hpp"

namespace csshap {

enum class AttributionTarget { kProbability, kLogit };
std::string to_string(AttributionTarget t);
AttributionTarget target_from_string(const std::string& name);

// kPerPermutation: permutation p scores its whole chain against background
// p mod B and per-player means are averaged per background stratum.
// kFull: every coalition value averages all B backgrounds.
enum class BackgroundEstimator { kPerPermutation, kFull };
std::string to_string(BackgroundEstimator e);
BackgroundEstimator estimator_from_string(const std::string& name);

enum class ShapleyMode { kSampled, kExact };
std::string to_string(ShapleyMode m);
ShapleyMode shapley_mode_from_string(const std::string& name);

struct AttributionConfig {
  DomainKind domain = DomainKind::kCyclicSpectral;
  std::optional<PartitionShape> partition;  // default_partition_shape(domain) when empty
  WindowSpec window = WindowSpec::default_window();
  std::size_t num_permutations = 200;
  std::uint64_t seed = 0;
  AttributionTarget target = AttributionTarget::kProbability;
  BackgroundEstimator estimator = BackgroundEstimator::kPerPermutation;
  ShapleyMode mode = ShapleyMode::kSampled;
  Execution exec = Execution::kParallel;
};

struct EfficiencyAudit {
  double residual = 0.0;          // |sum values - (model_output - base_rate)|
  double aggregate_stderr = 0.0;  // sqrt(sum stderr^2)
  double tolerance = 0.0;         // 3 aggregate_stderr + 1e-12
  bool pass = false;
};

struct AttributionMap {
  DomainKind domain;
  CoalitionPartition partition;
  Matrix<double> values;                   // K x d
  std::optional<Matrix<double>> stderrs;   // K x d, sampled mode
  std::vector<std::string> class_labels;
  AttributionTarget target = AttributionTarget::kProbability;
  std::vector<double> base_rate;
  std::vector<double> model_output;
  std::vector<EfficiencyAudit> efficiency;
  std::size_t num_evaluations = 0;
  std::size_t background_used = 0;
  std::uint64_t seed = 0;
  double runtime_s = 0.0;
  AttributionConfig config;

  std::size_t class_count() const { return values.rows(); }
  std::size_t cell_count() const { return values.cols(); }
  double max_abs() const;
};

double apply_target(AttributionTarget target, double probability);

// Scalar masking game for one class under the kFull estimator; keeps
// references to model and masker.
// value(S) = mean_b target(model(reconstruct(S, b)))[k] - base_rate[k],
// base_rate[k] = mean_b target(model(reconstruct(empty, b)))[k].
CooperativeGame build_masking_game(const ProbabilityModel& model, std::size_t class_index,
                                   const Masker& masker, AttributionTarget target = AttributionTarget::kProbability);

// Picks count training samples uniformly without replacement (all of them
// when count exceeds the set).
std::vector<TimeSeries> select_background(const LabeledSet& pool, std::size_t count, std::uint64_t seed);

// Attributes all classes of model at x; one model call yields every class.
AttributionMap attribute(const ProbabilityModel& model, const TimeSeries& x, const BackgroundSet& background,
                         const AttributionConfig& config, std::vector<std::string> class_labels = {});

// Same, with a caller-built masker (partition and background already bound).
AttributionMap attribute(const ProbabilityModel& model, const Masker& masker, const AttributionConfig& config,
                         std::vector<std::string> class_labels = {});

// CSV per class. Grid domains: header "<row axis>\<col axis>" then column cell
// centres, each row starts with its row cell centre. Vector domains: header
// "<axis>,value" and one row per cell.
std::string attribution_csv(const AttributionMap& map, std::size_t class_index);

struct AttributionCsv {
  std::vector<double> row_centers;  // empty for vector domains
  std::vector<double> col_centers;
  Matrix<double> values;
};
AttributionCsv parse_attribution_csv(const std::string& text);

std::string attribution_summary_json(const AttributionMap& map, const std::string& extra_json = "{}");
std::string attribution_config_json(const AttributionConfig& config);

// Cell containing the representation coordinate nearest (row_value, col_value).
std::size_t cell_near(const AttributionMap& map, double row_value, double col_value);

}  // namespace csshap
