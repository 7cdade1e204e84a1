// Acceptance run. Prints one PASS/FAIL line per criterion and exits 0 unless
// --strict is given and a criterion failed, or the run itself errors.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <exception>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "csshap/attribution.hpp"
#include "csshap/config.hpp"
#include "csshap/cs_transform.hpp"
#include "csshap/io.hpp"
#include "csshap/json_util.hpp"
#include "csshap/model.hpp"
#include "csshap/network.hpp"
#include "csshap/random.hpp"
#include "csshap/report.hpp"
#include "csshap/shapley.hpp"
#include "csshap/simulation.hpp"
#include "oracles.hpp"

namespace {

using namespace csshap;
using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

int failures = 0;

void report(int id, bool pass, const std::string& detail) {
  if (!pass) ++failures;
  std::printf("%s criterion %d: %s\n", pass ? "PASS" : "FAIL", id, detail.c_str());
  std::fflush(stdout);
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

constexpr double kFs = 10000.0;
constexpr std::size_t kLength = 2000;

void criterion_sine_localization() {
  const auto t0 = Clock::now();
  const WindowSpec w = WindowSpec::default_window();
  std::mt19937_64 rng(11);
  // interior bins: at bin 1 and N/2-1 the Hann main lobe meets the mirrored image
  std::uniform_int_distribution<int> bin(2, w.length() / 2 - 2);
  std::uniform_real_distribution<double> amp(0.1, 10.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * M_PI);
  double worst = 1.0;
  for (int trial = 0; trial < 20; ++trial) {
    const int b = bin(rng);
    const double f1 = b * kFs / w.length();
    const auto rep = cs_forward(TimeSeries(oracle::sine(kLength, kFs, f1, amp(rng), phase(rng)), kFs), w);
    double total = 0.0;
    double near = 0.0;
    for (std::size_t f = 0; f < rep.bins(); ++f) {
      for (std::size_t j = 0; j < rep.cyclic_bins(); ++j) {
        const double e = std::norm(rep.cs(f, j));
        total += e;
        if (j <= 1 && std::abs(static_cast<long>(f) - b) <= 1) near += e;
      }
    }
    worst = std::min(worst, near / total);
  }
  const double rt = seconds_since(t0);
  report(1, worst >= 0.99 && rt < 10.0,
         fmt("sine localisation, min energy fraction %.6f (need >= 0.99), %.2f s (need < 10 s)", worst, rt));
}

void criterion_round_trip() {
  const auto t0 = Clock::now();
  std::vector<TimeSeries> signals;
  for (unsigned s = 0; s < 50; ++s) signals.emplace_back(oracle::white_noise(kLength, 1000 + s), kFs);
  const DatasetSpec spec = default_dataset_spec();
  Rng rng(5);
  for (int i = 0; i < 10; ++i) {
    signals.push_back(synthesize_sample(spec.classes[static_cast<std::size_t>(i) % spec.classes.size()], kFs,
                                        kLength, rng));
  }
  double worst = 0.0;
  for (const auto& [len, hop] : {std::pair{128, 32}, std::pair{256, 64}, std::pair{512, 128}}) {
    const WindowSpec w(WindowKind::kHann, len, hop);
    for (const auto& x : signals) {
      worst = std::max(worst, oracle::rel_l2(cs_inverse(cs_forward(x, w), w).values(), x.values()));
    }
  }
  const double rt = seconds_since(t0);
  report(2, worst < 1e-6 && rt < 30.0,
         fmt("CS round trip, max relative L2 error %.3e (need < 1e-6), %.2f s (need < 30 s)", worst, rt));
}

CooperativeGame cubic_game(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> g;
  std::vector<double> w(n);
  for (auto& v : w) v = g(rng);
  return {n, [w](const Coalition& c) {
            double s = 0.0;
            double pair = 0.0;
            for (std::size_t i = 0; i < w.size(); ++i) {
              if (!c.test(i)) continue;
              s += w[i];
              if (i + 1 < w.size() && c.test(i + 1)) pair += w[i] * w[i + 1];
            }
            return s * s * s / 4.0 + pair;
          }};
}

void criterion_shapley() {
  const auto t0 = Clock::now();
  double hand = 0.0;
  const CooperativeGame majority{3, [](const Coalition& c) { return c.count() >= 2 ? 1.0 : 0.0; }};
  for (double v : exact_shapley(majority).values) hand = std::max(hand, std::abs(v - 1.0 / 3.0));
  const std::vector<double> w{0.5, -2.0, 3.25, 0.0};
  const CooperativeGame additive{4, [&](const Coalition& c) {
                                   double s = 0.0;
                                   for (std::size_t i = 0; i < 4; ++i) s += c.test(i) ? w[i] : 0.0;
                                   return s;
                                 }};
  const auto add = exact_shapley(additive).values;
  for (std::size_t i = 0; i < 4; ++i) hand = std::max(hand, std::abs(add[i] - w[i]));
  const CooperativeGame null_player{4, [](const Coalition& c) {
                                      return c.test(0) && c.test(1) ? 2.0 : (c.test(2) ? 0.5 : 0.0);
                                    }};
  hand = std::max(hand, std::abs(exact_shapley(null_player).values[3]));

  std::size_t within = 0;
  std::size_t pairs = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto game = cubic_game(10, 100 + seed);
    const auto exact = exact_shapley(game);
    const auto sampled = sampled_shapley(game, 5000, seed);
    for (std::size_t i = 0; i < 10; ++i) {
      ++pairs;
      if (std::abs(sampled.values[i] - exact.values[i]) <= 3.0 * (*sampled.standard_errors)[i]) ++within;
    }
  }
  const double frac = static_cast<double>(within) / static_cast<double>(pairs);
  const double rt = seconds_since(t0);
  report(3, hand <= 1e-12 && frac >= 0.95 && rt < 60.0,
         fmt("Shapley exactness, hand-game error %.2e (need <= 1e-12), sampled within 3 se %.3f (need >= 0.95), "
             "%.2f s (need < 60 s)",
             hand, frac, rt));
}

struct TrainedModel {
  Dataset dataset;
  Classifier model;
};

TrainedModel criterion_training(const RunConfig& cfg) {
  const auto t0 = Clock::now();
  Dataset ds = build_dataset(cfg.dataset, Execution::kParallel);
  Classifier model = build_model(cfg.model);
  const TrainReport rep = train(model, ds.train_set(), ds.test_set(), cfg.train);
  const double rt = seconds_since(t0);
  const double acc = rep.final_test_accuracy();

  Classifier again = build_model(cfg.model);
  train(again, ds.train_set(), ds.test_set(), cfg.train);
  const bool deterministic =
      again.network().params() == model.network().params() && again.network().buffers() == model.network().buffers();
  report(5, acc >= 0.95 && rt < 600.0 && deterministic,
         fmt("simulation study, %.0f samples/class, test accuracy %.4f (need >= 0.95), ", static_cast<double>(cfg.dataset.samples_per_class),
             acc) +
             fmt("build and train %.1f s (need < 600 s), ", rt) +
             (deterministic ? "repeat training bit-identical" : "repeat training DIFFERS"));
  return {std::move(ds), std::move(model)};
}

struct GroupResult {
  Matrix<double> mean_map;            // K x d
  std::vector<double> mean_abs_p0;    // per class
  std::vector<AttributionMap> maps;
};

GroupResult attribute_group(const TrainedModel& tm, const BackgroundSet& bg, const AttributionConfig& ac, int label,
                            std::size_t count, std::optional<double> snr_db) {
  const auto idx = tm.dataset.test_indices(label);
  if (idx.size() < count) throw InvalidInputError("too few test samples of class " + std::to_string(label));
  GroupResult g;
  for (std::size_t s = 0; s < count; ++s) {
    TimeSeries x = tm.dataset.samples[idx[s]];
    if (snr_db) x = normalize_meanstd(add_noise(x, *snr_db, derive_seed(ac.seed, idx[s])));
    g.maps.push_back(attribute(tm.model, x, bg, ac, tm.dataset.class_names));
  }
  const auto& first = g.maps.front();
  g.mean_map = Matrix<double>(first.class_count(), first.cell_count(), 0.0);
  g.mean_abs_p0.assign(first.class_count(), 0.0);
  const std::size_t p0 = cell_near(first, 1500.0, 50.0);
  for (const auto& m : g.maps) {
    for (std::size_t i = 0; i < m.values.size(); ++i) g.mean_map.data()[i] += m.values.data()[i] / count;
    for (std::size_t k = 0; k < m.class_count(); ++k) g.mean_abs_p0[k] += std::abs(m.values(k, p0)) / count;
  }
  return g;
}

double row_max_abs(const Matrix<double>& m, std::size_t k) {
  double mx = 0.0;
  for (std::size_t c = 0; c < m.cols(); ++c) mx = std::max(mx, std::abs(m(k, c)));
  return mx;
}

std::size_t row_argmax(const Matrix<double>& m, std::size_t k) {
  std::size_t best = 0;
  for (std::size_t c = 1; c < m.cols(); ++c) {
    if (m(k, c) > m(k, best)) best = c;
  }
  return best;
}

std::string cell_name(const AttributionMap& m, std::size_t cell) {
  const std::size_t cols = m.partition.col_cells();
  return "(" + std::to_string(cell / cols) + "," + std::to_string(cell % cols) + ")";
}

// Checks the target cell is the most positive for its own class and strictly
// negative for the others. Returns the pass flag and a description.
std::pair<bool, std::string> ground_truth(const GroupResult& g, std::size_t own, std::size_t cell) {
  const auto& m = g.maps.front();
  const std::size_t top = row_argmax(g.mean_map, own);
  bool pass = top == cell;
  std::string d = "argmax " + cell_name(m, top) + fmt(" = %.4g", g.mean_map(own, top)) + ", target " +
                  cell_name(m, cell) + fmt(" = %.4g", g.mean_map(own, cell));
  for (std::size_t k = 0; k < g.mean_map.rows(); ++k) {
    if (k == own) continue;
    pass = pass && g.mean_map(k, cell) < 0.0;
    d += ", class " + std::to_string(k) + fmt(" %.4g", g.mean_map(k, cell));
  }
  return {pass, d};
}

std::vector<AttributionMap> criteria_attribution(const TrainedModel& tm, const RunConfig& cfg) {
  const auto t0 = Clock::now();
  const AttributionConfig ac = cfg.attribution;
  const auto refs = select_background(tm.dataset.train_set(), cfg.background_size, ac.seed);
  const BackgroundSet bg = make_background(ac.domain, refs, ac.window);

  std::vector<GroupResult> groups;
  for (int label = 0; label < 3; ++label) groups.push_back(attribute_group(tm, bg, ac, label, 10, std::nullopt));
  const double rt = seconds_since(t0);

  const auto& m = groups.front().maps.front();
  const std::size_t p0 = cell_near(m, 1500.0, 50.0);
  const std::size_t p1 = cell_near(m, 2500.0, 100.0);
  const std::size_t p2 = cell_near(m, 3500.0, 125.0);

  bool a_pass = true;
  double worst_ratio = 0.0;
  for (const auto& g : groups) {
    for (std::size_t k = 0; k < g.mean_map.rows(); ++k) {
      const double ratio = g.mean_abs_p0[k] / row_max_abs(g.mean_map, k);
      worst_ratio = std::max(worst_ratio, ratio);
      a_pass = a_pass && ratio <= 0.10;
    }
  }
  double worst_signed = 0.0;
  for (const auto& g : groups) {
    for (std::size_t k = 0; k < g.mean_map.rows(); ++k) {
      worst_signed = std::max(worst_signed, std::abs(g.mean_map(k, p0)) / row_max_abs(g.mean_map, k));
    }
  }
  const std::string cells = " [cells P0 " + cell_name(m, p0) + " P1 " + cell_name(m, p1) + " P2 " +
                            cell_name(m, p2) + ", " + std::to_string(m.cell_count()) + " cells, " +
                            std::to_string(ac.num_permutations) + " permutations, B=" +
                            std::to_string(refs.size()) + fmt(", %.1f s (need < 900 s)]", rt);
  report(6, a_pass && rt < 900.0,
         fmt("(a) P0 mean |attribution| / map max, worst %.3f over groups and classes (need <= 0.10); "
             "|mean P0| / map max worst %.3f",
             worst_ratio, worst_signed) +
             cells);
  const auto [b_pass, b_detail] = ground_truth(groups[1], 1, p1);
  report(6, b_pass && rt < 900.0, "(b) Fault #1 samples, P1 cell: " + b_detail);
  const auto [c_pass, c_detail] = ground_truth(groups[2], 2, p2);
  report(6, c_pass && rt < 900.0, "(c) Fault #2 samples, P2 cell: " + c_detail);

  std::vector<AttributionMap> all;
  for (auto& g : groups) std::move(g.maps.begin(), g.maps.end(), std::back_inserter(all));

  const GroupResult noisy = attribute_group(tm, bg, ac, 1, 10, 0.0);
  int correct = 0;
  for (const auto& map : noisy.maps) correct += map.values(1, p1) > 0.0 ? 1 : 0;
  report(7, correct >= 8,
         fmt("SNR 0 dB Fault #1 samples with positive P1 attribution for Fault #1: %.0f/10 (need >= 8); "
             "mean P1 %.4g",
             correct, noisy.mean_map(1, p1)));
  std::move(noisy.maps.begin(), noisy.maps.end(), std::back_inserter(all));
  return all;
}

void criterion_efficiency(const std::vector<AttributionMap>& maps) {
  std::size_t audited = 0;
  std::size_t ok = 0;
  double worst = 0.0;
  bool json_ok = true;
  const Json schema = Json::parse(io::read_text(schema_path("attribution_summary.schema.json")));
  for (const auto& m : maps) {
    const Json summary = Json::parse(attribution_summary_json(m));
    json_ok = json_ok && validate_json_schema(summary, schema).empty();
    for (std::size_t k = 0; k < m.class_count(); ++k) {
      double sum = 0.0;
      for (std::size_t c = 0; c < m.cell_count(); ++c) sum += m.values(k, c);
      const double residual = std::abs(sum - (m.model_output[k] - m.base_rate[k]));
      double var = 0.0;
      for (std::size_t c = 0; c < m.cell_count(); ++c) var += (*m.stderrs)(k, c) * (*m.stderrs)(k, c);
      const double bound = 3.0 * std::sqrt(var);
      ++audited;
      if (residual <= bound) ++ok;
      worst = std::max(worst, residual);
      const Json& entry = summary["efficiency"][k];
      json_ok = json_ok && entry.contains("residual") &&
                std::abs(entry["residual"].get<double>() - m.efficiency[k].residual) <= 1e-15;
    }
  }
  report(4, ok == audited && json_ok,
         fmt("efficiency audit, %.0f/%.0f class maps with residual <= 3 aggregate se, max residual %.3e, ", ok,
             audited, worst) +
             (json_ok ? "residuals reported in schema-valid JSON" : "JSON residual check FAILED"));
}

void criterion_gradient() {
  const auto t0 = Clock::now();
  ModelConfig c;
  c.input_length = 40;
  c.class_count = 3;
  c.channels = {4, 6};
  c.kernel_sizes = {5, 3};
  c.head_widths = {8};
  Network<double> net(Architecture::from_config(c));
  net.initialize(3);
  const std::size_t batch = 5;
  const auto x = oracle::white_noise(batch * c.input_length, 17);
  const std::vector<int> labels{0, 1, 2, 0, 1};
  std::vector<double> grad;
  net.train_loss(x, labels, &grad, false);
  const double eps = 1e-5;
  double worst = 0.0;
  for (std::size_t p = 0; p < grad.size(); ++p) {
    const double keep = net.params()[p];
    net.params()[p] = keep + eps;
    const double up = net.train_loss(x, labels, nullptr, false);
    net.params()[p] = keep - eps;
    const double down = net.train_loss(x, labels, nullptr, false);
    net.params()[p] = keep;
    const double numeric = (up - down) / (2.0 * eps);
    worst = std::max(worst, std::abs(numeric - grad[p]) / std::max({std::abs(numeric), std::abs(grad[p]), 1e-3}));
  }
  const double rt = seconds_since(t0);
  report(8, worst < 1e-4 && rt < 10.0,
         fmt("gradient check, %.0f parameters, max relative error %.3e (need < 1e-4), %.2f s (need < 10 s)",
             static_cast<double>(grad.size()), worst, rt));
}

}  // namespace

int main(int argc, char** argv) {
  bool strict = false;
  bool quick = false;
  for (int i = 1; i < argc; ++i) {
    if (std::strcmp(argv[i], "--strict") == 0) strict = true;
    else if (std::strcmp(argv[i], "--quick") == 0) quick = true;
    else {
      std::fprintf(stderr, "usage: acceptance [--strict] [--quick]\n");
      return 2;
    }
  }
  try {
    criterion_sine_localization();
    criterion_round_trip();
    criterion_shapley();
    criterion_gradient();
    if (!quick) {
      const RunConfig cfg;
      const TrainedModel tm = criterion_training(cfg);
      criterion_efficiency(criteria_attribution(tm, cfg));
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "acceptance run aborted: %s\n", e.what());
    return 1;
  }
  std::printf("%d failing criterion line(s)\n", failures);
  return strict && failures > 0 ? 1 : 0;
}
