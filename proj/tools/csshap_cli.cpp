// csshap command-line front end: simulate, ingest, train, attribute, report.

#include <CLI11.hpp>

#include <cmath>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "csshap/attribution.hpp"
#include "csshap/config.hpp"
#include "csshap/error.hpp"
#include "csshap/ingest.hpp"
#include "csshap/io.hpp"
#include "csshap/json_util.hpp"
#include "csshap/model.hpp"
#include "csshap/parallel.hpp"
#include "csshap/report.hpp"
#include "csshap/simulation.hpp"

namespace fs = std::filesystem;
using namespace csshap;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;
constexpr int kExitIo = 4;

struct Globals {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  int jobs = 0;
  bool verbose = false;
};

struct SimulateArgs {
  std::optional<std::size_t> samples_per_class;
  std::optional<double> snr_db;
  std::optional<double> train_fraction;
};

struct IngestArgs {
  std::vector<std::string> sources;
  std::string label_map;
  std::string format = "csv";
  std::size_t segment_length = 2000;
  double sample_rate_hz = 12000.0;
  std::size_t column = 0;
  bool has_header = false;
  bool no_normalize = false;
  double train_fraction = 0.7;
};

struct TrainArgs {
  std::string dataset;
  std::optional<int> epochs;
  std::string model_kind;
};

struct AttributeArgs {
  std::string model;
  std::string dataset;
  std::optional<std::size_t> sample;
  std::string class_name;
  std::size_t nth = 0;
  std::string domain;
  std::optional<std::size_t> permutations;
  std::optional<std::size_t> background_size;
  std::optional<double> snr_db;
  std::string estimator;
};

struct ReportArgs {
  std::string run_dir;
};

RunConfig resolve_config(const Globals& g) {
  RunConfig cfg = g.config.empty() ? RunConfig{} : load_run_config(g.config);
  if (!g.out.empty()) cfg.out = g.out;
  if (g.seed) apply_seed(cfg, *g.seed);
  if (g.jobs != 0) cfg.jobs = g.jobs;
  if (cfg.jobs < 0) throw ConfigurationError("--jobs must be >= 0");
  if (cfg.jobs > 0) parallel::set_threads(cfg.jobs);
  return cfg;
}

void log(const Globals& g, const std::string& msg) {
  if (g.verbose) std::cerr << "[csshap] " << msg << "\n";
}

int run_simulate(const Globals& g, const SimulateArgs& a) {
  RunConfig cfg = resolve_config(g);
  if (a.samples_per_class) cfg.dataset.samples_per_class = *a.samples_per_class;
  if (a.train_fraction) cfg.dataset.train_fraction = *a.train_fraction;
  if (a.snr_db) {
    for (auto& c : cfg.dataset.classes) c.snr_db = *a.snr_db;
  }
  log(g, "building dataset");
  const Dataset ds = build_dataset(cfg.dataset, Execution::kParallel);
  const fs::path dir = cfg.out / "dataset";
  write_dataset(ds, dir);
  io::write_text(cfg.out / "config.json", run_config_json(cfg) + "\n");
  std::size_t n_train = 0;
  for (bool t : ds.is_train) n_train += t ? 1 : 0;
  std::cout << "simulate: " << ds.size() << " samples (" << n_train << " train, " << ds.size() - n_train
            << " test) in " << dir.string() << "\n";
  return kExitOk;
}

int run_ingest(const Globals& g, const IngestArgs& a) {
  RunConfig cfg = resolve_config(g);
  std::vector<IngestSource> sources;
  if (!a.label_map.empty()) sources = read_label_map(a.label_map);
  for (const auto& s : a.sources) sources.push_back(parse_ingest_source(s));
  IngestOptions opt;
  opt.format = ingest_format_from_string(a.format);
  opt.segment_length = a.segment_length;
  opt.sample_rate_hz = a.sample_rate_hz;
  opt.column = a.column;
  opt.has_header = a.has_header;
  opt.normalize = !a.no_normalize;
  opt.train_fraction = a.train_fraction;
  opt.seed = cfg.dataset.seed;
  const Dataset ds = ingest(sources, opt);
  const fs::path dir = cfg.out / "dataset";
  write_dataset(ds, dir);
  std::cout << "ingest: " << ds.size() << " segments of " << ds.sample_length << " samples, "
            << ds.class_names.size() << " labels, in " << dir.string() << "\n";
  return kExitOk;
}

int run_train(const Globals& g, const TrainArgs& a) {
  RunConfig cfg = resolve_config(g);
  if (a.epochs) cfg.train.epochs = *a.epochs;
  if (!a.model_kind.empty()) {
    const ModelKind kind = model_kind_from_string(a.model_kind);
    if (kind != cfg.model.kind) {
      const std::uint64_t seed = cfg.model.seed;
      cfg.model = kind == ModelKind::kMlp ? default_mlp_config() : default_cnn_config();
      cfg.model.seed = seed;
    }
  }
  const fs::path dataset_dir = a.dataset.empty() ? cfg.out / "dataset" : fs::path(a.dataset);
  const Dataset ds = load_dataset(dataset_dir);
  cfg.model.input_length = ds.sample_length;
  cfg.model.class_count = ds.class_names.size();
  Classifier model = build_model(cfg.model);
  log(g, "architecture: " + model.network().architecture().describe());
  const TrainReport report = train(model, ds.train_set(), ds.test_set(), cfg.train);
  if (g.verbose) {
    for (const auto& e : report.epochs) {
      std::cerr << "[csshap] epoch " << e.epoch << " loss " << e.train_loss << " train " << e.train_accuracy
                << " test " << e.test_accuracy << "\n";
    }
  }
  save_model(model, cfg.out / "model.bin");
  io::write_text(cfg.out / "train_report.json", report.to_json() + "\n");
  io::write_text(cfg.out / "train_report.csv", report.to_csv());
  io::write_text(cfg.out / "config.json", run_config_json(cfg) + "\n");
  std::cout << "train: test accuracy " << report.final_test_accuracy() << " after " << report.epochs.size()
            << " epochs (" << report.wall_clock_s << " s); model in " << (cfg.out / "model.bin").string() << "\n";
  return kExitOk;
}

std::size_t select_sample(const Dataset& ds, const AttributeArgs& a) {
  if (a.sample) {
    if (*a.sample >= ds.size()) throw InvalidInputError("--sample index out of range");
    return *a.sample;
  }
  int label = 0;
  if (!a.class_name.empty()) {
    auto it = std::find(ds.class_names.begin(), ds.class_names.end(), a.class_name);
    if (it != ds.class_names.end()) {
      label = static_cast<int>(it - ds.class_names.begin());
    } else {
      try {
        label = std::stoi(a.class_name);
      } catch (const std::exception&) {
        throw InvalidInputError("unknown class '" + a.class_name + "'");
      }
      if (label < 0 || static_cast<std::size_t>(label) >= ds.class_names.size()) {
        throw InvalidInputError("class index out of range");
      }
    }
  }
  const auto idx = ds.test_indices(label);
  if (a.nth >= idx.size()) throw InvalidInputError("--nth exceeds the test samples of the selected class");
  return idx[a.nth];
}

int run_attribute(const Globals& g, const AttributeArgs& a) {
  RunConfig cfg = resolve_config(g);
  if (a.permutations) cfg.attribution.num_permutations = *a.permutations;
  if (a.background_size) cfg.background_size = *a.background_size;
  if (!a.estimator.empty()) cfg.attribution.estimator = estimator_from_string(a.estimator);
  const fs::path model_path = a.model.empty() ? cfg.out / "model.bin" : fs::path(a.model);
  const fs::path dataset_dir = a.dataset.empty() ? cfg.out / "dataset" : fs::path(a.dataset);
  const Classifier model = load_model(model_path);
  const Dataset ds = load_dataset(dataset_dir);
  if (model.class_count() != ds.class_names.size()) {
    throw InvalidInputError("model has " + std::to_string(model.class_count()) + " classes, dataset has " +
                            std::to_string(ds.class_names.size()));
  }
  const std::size_t index = select_sample(ds, a);
  TimeSeries x = ds.samples[index];
  if (a.snr_db) {
    x = normalize_meanstd(add_noise(x, *a.snr_db, derive_seed(cfg.attribution.seed, index)));
  }

  std::vector<DomainKind> domains;
  if (a.domain == "all") {
    domains.assign(std::begin(kAllDomains), std::end(kAllDomains));
  } else {
    domains.push_back(a.domain.empty() ? cfg.attribution.domain : domain_from_string(a.domain));
  }
  const std::vector<TimeSeries> refs =
      cfg.background == BackgroundSource::kTraining
          ? select_background(ds.train_set(), cfg.background_size, cfg.attribution.seed)
          : std::vector<TimeSeries>{};
  for (DomainKind kind : domains) {
    AttributionConfig ac = cfg.attribution;
    ac.domain = kind;
    if (kind != cfg.attribution.domain) ac.partition.reset();
    const std::optional<WindowSpec> w = ac.window;
    const BackgroundSet bg = cfg.background == BackgroundSource::kTraining
                                 ? make_background(kind, refs, w)
                                 : zero_background(kind, x.size(), x.sample_rate_hz(), w);
    DomainRepresentation rep = domain_forward(kind, x, w);
    CoalitionPartition part = make_partition(rep, ac.partition.value_or(default_partition_shape(kind)), w);
    const Masker masker(rep, std::move(part), bg, w);
    log(g, "attributing domain " + to_string(kind) + " with " + std::to_string(masker.cell_count()) + " cells");
    const AttributionMap map = attribute(model, masker, ac, ds.class_names);
    Json context{{"sample_index", index},
                 {"sample_label", ds.class_names[static_cast<std::size_t>(ds.labels[index])]},
                 {"injected_snr_db", a.snr_db ? Json(*a.snr_db) : Json(nullptr)},
                 {"model", model_path.string()},
                 {"dataset", dataset_dir.string()},
                 {"background", to_string(cfg.background)}};
    const fs::path dir = cfg.out / "attribution" / to_string(kind);
    write_attribution_outputs(map, rep, dir, context.dump());
    bool pass = true;
    for (const auto& e : map.efficiency) pass = pass && e.pass;
    std::cout << "attribute: " << to_string(kind) << " (" << map.cell_count() << " cells, " << map.num_evaluations
              << " evaluations, " << map.runtime_s << " s, efficiency " << (pass ? "ok" : "FAILED") << ") in "
              << dir.string() << "\n";
  }
  return kExitOk;
}

int run_report(const Globals& g, const ReportArgs& a) {
  const RunConfig cfg = resolve_config(g);
  const fs::path dir = a.run_dir.empty() ? cfg.out : fs::path(a.run_dir);
  std::cout << "report: " << write_study_report(dir).string() << "\n";
  return kExitOk;
}

int exit_code(const Error& e) {
  switch (e.kind()) {
    case ErrorKind::kInvalidInput:
    case ErrorKind::kConfiguration:
    case ErrorKind::kCapacity:
    case ErrorKind::kFormat: return kExitValidation;
    case ErrorKind::kTraining: return kExitRuntime;
    case ErrorKind::kIo: return kExitIo;
  }
  return kExitRuntime;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cyclic-spectral Shapley attribution toolkit"};
  app.require_subcommand(1, 1);
  app.fallthrough();
  Globals g;
  app.add_option("--config", g.config, "JSON run configuration");
  app.add_option("--out", g.out, "Output/run directory (overrides config 'out')");
  app.add_option("--seed", g.seed, "Seed for dataset, model, training and attribution");
  app.add_option("--jobs", g.jobs, "Worker threads (0: all cores)");
  app.add_flag("--verbose,-v", g.verbose, "Progress on stderr");

  SimulateArgs sim;
  auto* simulate = app.add_subcommand("simulate", "Generate the synthetic three-class dataset");
  simulate->add_option("--samples-per-class", sim.samples_per_class);
  simulate->add_option("--snr", sim.snr_db, "SNR in dB for every class");
  simulate->add_option("--train-fraction", sim.train_fraction);

  IngestArgs ing;
  auto* ingest_cmd = app.add_subcommand("ingest", "Segment external recordings into a dataset");
  ingest_cmd->add_option("sources", ing.sources, "Recordings as path=label");
  ingest_cmd->add_option("--label-map", ing.label_map, "File with one path=label per line");
  ingest_cmd->add_option("--format", ing.format, "csv or raw_f32");
  ingest_cmd->add_option("--segment-length", ing.segment_length);
  ingest_cmd->add_option("--sample-rate", ing.sample_rate_hz);
  ingest_cmd->add_option("--column", ing.column, "CSV column holding the signal");
  ingest_cmd->add_flag("--has-header", ing.has_header);
  ingest_cmd->add_flag("--no-normalize", ing.no_normalize);
  ingest_cmd->add_option("--train-fraction", ing.train_fraction);

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "Train a classifier on a dataset directory");
  train_cmd->add_option("--dataset", tr.dataset, "Dataset directory (default <out>/dataset)");
  train_cmd->add_option("--epochs", tr.epochs);
  train_cmd->add_option("--model", tr.model_kind, "cnn1d or mlp");

  AttributeArgs at;
  auto* attribute_cmd = app.add_subcommand("attribute", "Explain one sample in one or all domains");
  attribute_cmd->add_option("--model", at.model, "Model file (default <out>/model.bin)");
  attribute_cmd->add_option("--dataset", at.dataset, "Dataset directory (default <out>/dataset)");
  attribute_cmd->add_option("--sample", at.sample, "Dataset index of the sample");
  attribute_cmd->add_option("--class", at.class_name, "Class name or index (test split)");
  attribute_cmd->add_option("--nth", at.nth, "Which test sample of --class");
  attribute_cmd->add_option("--domain", at.domain, "time, frequency, envelope, time_frequency, cyclic_spectral or all");
  attribute_cmd->add_option("--permutations", at.permutations);
  attribute_cmd->add_option("--background-size", at.background_size);
  attribute_cmd->add_option("--snr", at.snr_db, "Inject noise at this SNR before explaining");
  attribute_cmd->add_option("--estimator", at.estimator, "per_permutation or full");

  ReportArgs rep;
  auto* report_cmd = app.add_subcommand("report", "Collate a run directory into report.md");
  report_cmd->add_option("--run-dir", rep.run_dir, "Run directory (default <out>)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (*simulate) return run_simulate(g, sim);
    if (*ingest_cmd) return run_ingest(g, ing);
    if (*train_cmd) return run_train(g, tr);
    if (*attribute_cmd) return run_attribute(g, at);
    if (*report_cmd) return run_report(g, rep);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code(e);
  } catch (const fs::filesystem_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitValidation;
}
