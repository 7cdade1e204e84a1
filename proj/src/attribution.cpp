#include "csshap/attribution.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

#include "csshap/error.hpp"
#include "csshap/io.hpp"
#include "csshap/json_util.hpp"
#include "csshap/random.hpp"

namespace csshap {

namespace {

constexpr double kEfficiencyFloor = 1e-12;
constexpr double kLogitClamp = 1e-15;
constexpr std::uint64_t kBackgroundSalt = 0x4247ULL;

// Running mean and second moment per (player, class).
struct Moments {
  std::vector<double> mean;
  std::vector<double> m2;
  std::vector<std::size_t> count;

  explicit Moments(std::size_t n) : mean(n, 0.0), m2(n, 0.0), count(n, 0) {}

  void add(std::size_t i, double x) {
    ++count[i];
    const double delta = x - mean[i];
    mean[i] += delta / static_cast<double>(count[i]);
    m2[i] += delta * (x - mean[i]);
  }
};

// Target-transformed outputs of the model for each reconstruction, row b.
Matrix<double> score_batch(const ProbabilityModel& model, std::span<const TimeSeries> xs, AttributionTarget target) {
  Matrix<double> p = model.predict_batch(xs);
  for (double& v : p.data()) v = apply_target(target, v);
  return p;
}

// Mean over backgrounds of the target for one coalition, accumulated in index order.
void mean_over_background(const ProbabilityModel& model, const Masker& masker, const Coalition& keep,
                          AttributionTarget target, std::span<double> out) {
  std::vector<TimeSeries> recon;
  recon.reserve(masker.background_size());
  for (std::size_t b = 0; b < masker.background_size(); ++b) recon.push_back(masker.reconstruct(keep, b));
  const Matrix<double> s = score_batch(model, recon, target);
  for (std::size_t k = 0; k < out.size(); ++k) {
    double sum = 0.0;
    for (std::size_t b = 0; b < s.rows(); ++b) sum += s(b, k);
    out[k] = sum / static_cast<double>(s.rows());
  }
}

Coalition prefix(std::size_t players, const std::vector<std::size_t>& order, std::size_t j) {
  Coalition c(players);
  for (std::size_t q = 0; q <= j; ++q) c.set(order[q]);
  return c;
}

}  // namespace

std::string to_string(AttributionTarget t) { return t == AttributionTarget::kProbability ? "probability" : "logit"; }

AttributionTarget target_from_string(const std::string& name) {
  if (name == "probability") return AttributionTarget::kProbability;
  if (name == "logit") return AttributionTarget::kLogit;
  throw ConfigurationError("unknown attribution target '" + name + "'");
}

std::string to_string(BackgroundEstimator e) {
  return e == BackgroundEstimator::kPerPermutation ? "per_permutation" : "full";
}

BackgroundEstimator estimator_from_string(const std::string& name) {
  if (name == "per_permutation") return BackgroundEstimator::kPerPermutation;
  if (name == "full") return BackgroundEstimator::kFull;
  throw ConfigurationError("unknown background estimator '" + name + "'");
}

std::string to_string(ShapleyMode m) { return m == ShapleyMode::kSampled ? "sampled" : "exact"; }

ShapleyMode shapley_mode_from_string(const std::string& name) {
  if (name == "sampled") return ShapleyMode::kSampled;
  if (name == "exact") return ShapleyMode::kExact;
  throw ConfigurationError("unknown shapley mode '" + name + "'");
}

double apply_target(AttributionTarget target, double p) {
  if (target == AttributionTarget::kProbability) return p;
  const double q = std::clamp(p, kLogitClamp, 1.0 - kLogitClamp);
  return std::log(q) - std::log1p(-q);
}

double AttributionMap::max_abs() const {
  double m = 0.0;
  for (double v : values.data()) m = std::max(m, std::abs(v));
  return m;
}

CooperativeGame build_masking_game(const ProbabilityModel& model, std::size_t class_index, const Masker& masker,
                                   AttributionTarget target) {
  const std::size_t k = model.class_count();
  if (class_index >= k) throw InvalidInputError("class index out of range");
  if (masker.representation().grid_cols() == 0) throw InvalidInputError("empty representation");
  std::vector<double> base(k);
  mean_over_background(model, masker, Coalition(masker.cell_count()), target, base);
  const double base_k = base[class_index];
  return {masker.cell_count(), [&model, &masker, class_index, target, base_k, k](const Coalition& c) {
            std::vector<double> out(k);
            mean_over_background(model, masker, c, target, out);
            return out[class_index] - base_k;
          }};
}

std::vector<TimeSeries> select_background(const LabeledSet& pool, std::size_t count, std::uint64_t seed) {
  if (pool.size() == 0) throw InvalidInputError("background pool is empty");
  if (count == 0) throw ConfigurationError("background size must be >= 1");
  std::vector<std::size_t> idx(pool.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(derive_seed(seed, kBackgroundSalt));
  std::shuffle(idx.begin(), idx.end(), rng);
  idx.resize(std::min(count, idx.size()));
  std::vector<TimeSeries> out;
  for (std::size_t i : idx) out.push_back(pool.samples[i]);
  return out;
}

AttributionMap attribute(const ProbabilityModel& model, const TimeSeries& x, const BackgroundSet& background,
                         const AttributionConfig& config, std::vector<std::string> class_labels) {
  if (background.domain != config.domain) throw InvalidInputError("background domain does not match config");
  const std::optional<WindowSpec> w = config.window;
  DomainRepresentation rep = domain_forward(config.domain, x, w);
  CoalitionPartition partition =
      make_partition(rep, config.partition.value_or(default_partition_shape(config.domain)), w);
  const Masker masker(std::move(rep), std::move(partition), background, w);
  return attribute(model, masker, config, std::move(class_labels));
}

AttributionMap attribute(const ProbabilityModel& model, const Masker& masker, const AttributionConfig& config,
                         std::vector<std::string> class_labels) {
  const auto start = std::chrono::steady_clock::now();
  const std::size_t k = model.class_count();
  const std::size_t d = masker.cell_count();
  const std::size_t n_bg = masker.background_size();
  if (masker.representation().kind() != config.domain) throw InvalidInputError("masker domain does not match config");
  if (class_labels.empty()) {
    for (std::size_t c = 0; c < k; ++c) class_labels.push_back("class" + std::to_string(c));
  }
  if (class_labels.size() != k) throw InvalidInputError("class label count does not match model outputs");

  AttributionMap map;
  map.domain = config.domain;
  map.partition = masker.partition();
  map.class_labels = std::move(class_labels);
  map.target = config.target;
  map.seed = config.seed;
  map.config = config;
  map.values = Matrix<double>(k, d, 0.0);
  map.base_rate.assign(k, 0.0);
  map.model_output.assign(k, 0.0);

  const Coalition full = Coalition::full(d);
  {
    const TimeSeries recon = masker.reconstruct(full, 0);
    const Matrix<double> s = score_batch(model, std::span<const TimeSeries>(&recon, 1), config.target);
    std::copy(s.row(0).begin(), s.row(0).end(), map.model_output.begin());
  }
  std::size_t evaluations = 1;

  if (config.mode == ShapleyMode::kExact) {
    if (d > kMaxExactPlayers) {
      throw CapacityError("exact attribution supports at most " + std::to_string(kMaxExactPlayers) +
                          " cells (got " + std::to_string(d) + "); use sampled mode");
    }
    const std::size_t subsets = std::size_t{1} << d;
    Matrix<double> table(subsets, k);
    parallel::for_each(subsets, config.exec, [&](std::size_t mask) {
      Coalition c(d);
      for (std::size_t i = 0; i < d; ++i) {
        if ((mask >> i) & 1U) c.set(i);
      }
      mean_over_background(model, masker, c, config.target, table.row(mask));
    });
    evaluations += subsets * n_bg;
    std::copy(table.row(0).begin(), table.row(0).end(), map.base_rate.begin());
    for (std::size_t cls = 0; cls < k; ++cls) {
      const double base = map.base_rate[cls];
      const CooperativeGame game{d, [&, cls, base](const Coalition& c) {
                                   return table(static_cast<std::size_t>(c.words()[0]), cls) - base;
                                 }};
      const ShapleyResult r = exact_shapley(game);
      std::copy(r.values.begin(), r.values.end(), map.values.row(cls).begin());
    }
    map.background_used = n_bg;
  } else {
    const std::size_t perms = config.num_permutations;
    if (perms < 2) throw ConfigurationError("num_permutations must be >= 2");
    Matrix<double> se(k, d, 0.0);
    Matrix<double> chain(d, k);

    if (config.estimator == BackgroundEstimator::kFull) {
      mean_over_background(model, masker, Coalition(d), config.target, map.base_rate);
      evaluations += n_bg;
      Moments mom(d * k);
      for (std::size_t p = 0; p < perms; ++p) {
        const auto order = schedule_permutation(d, config.seed, p);
        parallel::for_each(d, config.exec, [&](std::size_t j) {
          mean_over_background(model, masker, prefix(d, order, j), config.target, chain.row(j));
          for (std::size_t cls = 0; cls < k; ++cls) chain(j, cls) -= map.base_rate[cls];
        });
        for (std::size_t cls = 0; cls < k; ++cls) {
          // value(empty) is exactly zero by construction of base_rate
          double previous = 0.0;
          for (std::size_t j = 0; j < d; ++j) {
            mom.add(order[j] * k + cls, chain(j, cls) - previous);
            previous = chain(j, cls);
          }
        }
      }
      evaluations += perms * d * n_bg;
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t cls = 0; cls < k; ++cls) {
          const std::size_t idx = i * k + cls;
          map.values(cls, i) = mom.mean[idx];
          const double var = std::max(0.0, mom.m2[idx] / static_cast<double>(perms - 1));
          se(cls, i) = std::sqrt(var / static_cast<double>(perms));
        }
      }
      map.background_used = n_bg;
    } else {
      const std::size_t strata = std::min(n_bg, perms);
      std::vector<std::vector<double>> empty(strata, std::vector<double>(k));
      parallel::for_each(strata, config.exec, [&](std::size_t b) {
        const TimeSeries recon = masker.reconstruct(Coalition(d), b);
        const Matrix<double> s = score_batch(model, std::span<const TimeSeries>(&recon, 1), config.target);
        std::copy(s.row(0).begin(), s.row(0).end(), empty[b].begin());
      });
      evaluations += strata;
      for (std::size_t cls = 0; cls < k; ++cls) {
        double sum = 0.0;
        for (std::size_t b = 0; b < strata; ++b) sum += empty[b][cls];
        map.base_rate[cls] = sum / static_cast<double>(strata);
      }

      std::vector<Moments> per_stratum(strata, Moments(d * k));
      Moments pooled(d * k);
      for (std::size_t p = 0; p < perms; ++p) {
        const std::size_t b = p % strata;
        const auto order = schedule_permutation(d, config.seed, p);
        parallel::for_each(d, config.exec, [&](std::size_t j) {
          const TimeSeries recon = masker.reconstruct(prefix(d, order, j), b);
          const Matrix<double> s = score_batch(model, std::span<const TimeSeries>(&recon, 1), config.target);
          std::copy(s.row(0).begin(), s.row(0).end(), chain.row(j).begin());
        });
        for (std::size_t cls = 0; cls < k; ++cls) {
          double previous = empty[b][cls];
          for (std::size_t j = 0; j < d; ++j) {
            const double marginal = chain(j, cls) - previous;
            per_stratum[b].add(order[j] * k + cls, marginal);
            pooled.add(order[j] * k + cls, marginal);
            previous = chain(j, cls);
          }
        }
      }
      evaluations += perms * d;

      // Stratified estimate: equal weight per background, within-stratum variance.
      double inv_counts = 0.0;
      for (std::size_t b = 0; b < strata; ++b) {
        inv_counts += 1.0 / static_cast<double>(per_stratum[b].count[0]);
      }
      for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t cls = 0; cls < k; ++cls) {
          const std::size_t idx = i * k + cls;
          double mean = 0.0;
          double within = 0.0;
          for (std::size_t b = 0; b < strata; ++b) {
            mean += per_stratum[b].mean[idx];
            within += per_stratum[b].m2[idx];
          }
          map.values(cls, i) = mean / static_cast<double>(strata);
          double var_est = 0.0;
          if (perms > strata) {
            const double s2 = within / static_cast<double>(perms - strata);
            var_est = s2 * inv_counts / static_cast<double>(strata * strata);
          } else {
            var_est = pooled.m2[idx] / static_cast<double>(perms - 1) / static_cast<double>(perms);
          }
          se(cls, i) = std::sqrt(std::max(0.0, var_est));
        }
      }
      map.background_used = strata;
    }
    map.stderrs = std::move(se);
  }
  map.num_evaluations = evaluations;

  for (std::size_t cls = 0; cls < k; ++cls) {
    EfficiencyAudit audit;
    double sum = 0.0;
    double var = 0.0;
    for (std::size_t i = 0; i < d; ++i) {
      sum += map.values(cls, i);
      if (map.stderrs) var += (*map.stderrs)(cls, i) * (*map.stderrs)(cls, i);
    }
    audit.residual = std::abs(sum - (map.model_output[cls] - map.base_rate[cls]));
    audit.aggregate_stderr = std::sqrt(var);
    audit.tolerance = 3.0 * audit.aggregate_stderr + kEfficiencyFloor;
    audit.pass = audit.residual <= audit.tolerance;
    map.efficiency.push_back(audit);
  }
  for (double v : map.values.data()) {
    if (!std::isfinite(v)) throw Error(ErrorKind::kTraining, "attribution produced a non-finite value");
  }
  map.runtime_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return map;
}

std::string attribution_csv(const AttributionMap& map, std::size_t class_index) {
  if (class_index >= map.class_count()) throw InvalidInputError("class index out of range");
  const auto& part = map.partition;
  std::ostringstream out;
  if (part.is_grid()) {
    out << part.row_axis_name << '\\' << part.col_axis_name;
    for (std::size_t cc = 0; cc < part.col_cells(); ++cc) out << ',' << io::format_double(part.col_cell_center(cc));
    out << '\n';
    for (std::size_t rc = 0; rc < part.row_cells(); ++rc) {
      out << io::format_double(part.row_cell_center(rc));
      for (std::size_t cc = 0; cc < part.col_cells(); ++cc) {
        out << ',' << io::format_double(map.values(class_index, rc * part.col_cells() + cc));
      }
      out << '\n';
    }
  } else {
    out << part.col_axis_name << ",value\n";
    for (std::size_t cc = 0; cc < part.col_cells(); ++cc) {
      out << io::format_double(part.col_cell_center(cc)) << ',' << io::format_double(map.values(class_index, cc))
          << '\n';
    }
  }
  return out.str();
}

namespace {

double parse_cell(const std::string& cell, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(cell, &used);
    if (used != cell.size()) throw std::invalid_argument(cell);
    return v;
  } catch (const std::exception&) {
    throw FormatError("attribution CSV line " + std::to_string(line) + ": bad number '" + cell + "'");
  }
}

}  // namespace

AttributionCsv parse_attribution_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw FormatError("attribution CSV is empty");
  const auto header = io::split(line, ',');
  AttributionCsv out;
  const bool grid = header[0].find('\\') != std::string::npos;
  std::vector<std::vector<double>> rows;
  std::size_t line_no = 1;
  if (grid) {
    for (std::size_t i = 1; i < header.size(); ++i) out.col_centers.push_back(parse_cell(header[i], line_no));
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto cells = io::split(line, ',');
    if (cells.size() != header.size()) {
      throw FormatError("attribution CSV line " + std::to_string(line_no) + ": wrong column count");
    }
    if (grid) {
      out.row_centers.push_back(parse_cell(cells[0], line_no));
      std::vector<double> r;
      for (std::size_t i = 1; i < cells.size(); ++i) r.push_back(parse_cell(cells[i], line_no));
      rows.push_back(std::move(r));
    } else {
      out.col_centers.push_back(parse_cell(cells[0], line_no));
      if (rows.empty()) rows.emplace_back();
      rows[0].push_back(parse_cell(cells[1], line_no));
    }
  }
  if (rows.empty()) throw FormatError("attribution CSV has no data rows");
  out.values = Matrix<double>(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r) std::copy(rows[r].begin(), rows[r].end(), out.values.row(r).begin());
  return out;
}

std::string attribution_config_json(const AttributionConfig& c) {
  const PartitionShape shape = c.partition.value_or(default_partition_shape(c.domain));
  Json j{{"domain", to_string(c.domain)},
         {"partition", {shape.row_cells, shape.col_cells}},
         {"window", {{"kind", to_string(c.window.kind())}, {"length", c.window.length()}, {"hop", c.window.hop()}}},
         {"num_permutations", c.num_permutations},
         {"seed", c.seed},
         {"target", to_string(c.target)},
         {"estimator", to_string(c.estimator)},
         {"mode", to_string(c.mode)}};
  return j.dump();
}

std::string attribution_summary_json(const AttributionMap& map, const std::string& extra_json) {
  Json eff = Json::array();
  for (std::size_t cls = 0; cls < map.class_count(); ++cls) {
    const auto& a = map.efficiency[cls];
    double sum = 0.0;
    for (std::size_t i = 0; i < map.cell_count(); ++i) sum += map.values(cls, i);
    eff.push_back({{"class", map.class_labels[cls]},
                   {"sum_values", sum},
                   {"model_output", map.model_output[cls]},
                   {"base_rate", map.base_rate[cls]},
                   {"residual", a.residual},
                   {"aggregate_stderr", a.aggregate_stderr},
                   {"tolerance", a.tolerance},
                   {"pass", a.pass}});
  }
  Json j{{"domain", to_string(map.domain)},
         {"class_labels", map.class_labels},
         {"target", to_string(map.target)},
         {"cell_count", map.cell_count()},
         {"partition", Json::parse(map.partition.describe())},
         {"base_rate", map.base_rate},
         {"model_output", map.model_output},
         {"efficiency", eff},
         {"num_evaluations", map.num_evaluations},
         {"background_size", map.background_used},
         {"seed", map.seed},
         {"runtime_s", map.runtime_s},
         {"config", Json::parse(attribution_config_json(map.config))},
         {"context", Json::parse(extra_json)}};
  return j.dump(2);
}

std::size_t cell_near(const AttributionMap& map, double row_value, double col_value) {
  return map.partition.cell_containing(row_value, col_value);
}

}  // namespace csshap
