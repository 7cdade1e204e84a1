#include "csshap/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <numbers>
#include <numeric>
#include <sstream>

#include "csshap/error.hpp"
#include "csshap/io.hpp"
#include "csshap/json_util.hpp"

namespace csshap {

namespace {

// Impulse tails beyond exp(-50) are below double resolution of the peak.
constexpr double kTailCutoff = 50.0;
constexpr std::uint64_t kSplitSalt = 0x53504C4954ULL;

}  // namespace

double Range::draw(Rng& rng) const {
  if (is_fixed()) return lo;
  return std::uniform_real_distribution<double>(lo, hi)(rng);
}

ImpulseComponentSpec component_p0() { return {"P0", Range::fixed(1500.0), Range::fixed(50.0), 0.04, false}; }
ImpulseComponentSpec component_ph() { return {"PH", {1000.0, 4000.0}, {20.0, 200.0}, 0.04, false}; }
ImpulseComponentSpec component_p1() { return {"P1", Range::fixed(2500.0), Range::fixed(100.0), 0.04, false}; }
ImpulseComponentSpec component_p2() { return {"P2", Range::fixed(3500.0), Range::fixed(125.0), 0.04, false}; }

DatasetSpec default_dataset_spec() {
  DatasetSpec spec;
  spec.classes = {
      {"Health", {component_p0(), component_ph()}},
      {"Fault #1", {component_p0(), component_p1()}},
      {"Fault #2", {component_p0(), component_p2()}},
  };
  return spec;
}

void validate(const ImpulseComponentSpec& spec, double fs) {
  const std::string ctx = "component '" + spec.name + "'";
  if (spec.carrier_hz.lo > spec.carrier_hz.hi || spec.modulation_hz.lo > spec.modulation_hz.hi) {
    throw InvalidInputError(ctx + ": range lower bound exceeds upper bound");
  }
  if (!(spec.carrier_hz.lo > 0.0)) throw InvalidInputError(ctx + ": carrier must be positive");
  if (!(spec.carrier_hz.hi < fs / 2.0)) throw InvalidInputError(ctx + ": carrier at or above Nyquist");
  if (!(spec.modulation_hz.lo > 0.0)) throw InvalidInputError(ctx + ": modulation must be positive");
  if (!(spec.damping > 0.0) || !std::isfinite(spec.damping)) throw InvalidInputError(ctx + ": damping must be positive");
}

void validate(const DatasetSpec& spec) {
  if (spec.classes.size() < 2) throw InvalidInputError("dataset needs at least 2 classes");
  if (!(spec.sample_rate_hz > 0.0)) throw InvalidInputError("sample_rate_hz must be positive");
  if (spec.samples_per_class < 1) throw InvalidInputError("samples_per_class must be >= 1");
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw InvalidInputError("train_fraction must lie in (0, 1)");
  }
  if (spec.sample_length < 2) throw InvalidInputError("sample_length must be >= 2");
  for (const auto& cls : spec.classes) {
    if (cls.components.empty()) throw InvalidInputError("class '" + cls.name + "' has no components");
    if (!(cls.amplitude.lo > 0.0) || cls.amplitude.lo > cls.amplitude.hi || !std::isfinite(cls.amplitude.hi)) {
      throw InvalidInputError("class '" + cls.name + "': amplitude range must lie in (0, inf)");
    }
    if (std::isnan(cls.snr_db)) throw InvalidInputError("class '" + cls.name + "': snr_db is NaN");
    for (const auto& c : cls.components) {
      validate(c, spec.sample_rate_hz);
      if (static_cast<double>(spec.sample_length) < spec.sample_rate_hz / c.modulation_hz.lo) {
        throw InvalidInputError("class '" + cls.name + "': sample shorter than one modulation period");
      }
    }
  }
}

std::vector<double> impulse_onsets(double modulation_hz, double onset_s, double fs, std::size_t n) {
  std::vector<double> onsets;
  const double duration = static_cast<double>(n) / fs;
  for (std::size_t k = 0;; ++k) {
    const double t = onset_s + static_cast<double>(k) / modulation_hz;
    if (t >= duration) break;
    onsets.push_back(t);
  }
  return onsets;
}

TimeSeries periodic_impulse(const ImpulseComponentSpec& spec, double fs, std::size_t n, const ImpulseDraw& d) {
  validate(spec, fs);
  if (!(d.carrier_hz < fs / 2.0)) throw InvalidInputError("carrier at or above Nyquist");
  if (static_cast<double>(n) < fs / d.modulation_hz) {
    throw InvalidInputError("periodic_impulse needs at least one modulation period");
  }
  std::vector<double> x(n, 0.0);
  const double decay = spec.damping * fs;
  const double omega = 2.0 * std::numbers::pi * d.carrier_hz;
  for (double onset : impulse_onsets(d.modulation_hz, d.onset_s, fs, n)) {
    const auto first = static_cast<std::size_t>(std::ceil(onset * fs - 1e-9));
    for (std::size_t i = first; i < n; ++i) {
      const double dt = static_cast<double>(i) / fs - onset;
      if (decay * dt > kTailCutoff) break;
      x[i] += std::exp(-decay * dt) * std::sin(omega * dt + d.phase);
    }
  }
  return TimeSeries(std::move(x), fs);
}

TimeSeries periodic_impulse(const ImpulseComponentSpec& spec, double fs, std::size_t n, Rng& rng,
                            ImpulseDraw* draw) {
  validate(spec, fs);
  ImpulseDraw d;
  d.carrier_hz = spec.carrier_hz.draw(rng);
  d.modulation_hz = spec.modulation_hz.draw(rng);
  d.phase = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng);
  d.onset_s = spec.onset_jitter ? std::uniform_real_distribution<double>(0.0, 1.0 / d.modulation_hz)(rng) : 0.0;
  if (draw != nullptr) *draw = d;
  return periodic_impulse(spec, fs, n, d);
}

TimeSeries synthesize_sample(const ClassSpec& cls, double fs, std::size_t n, Rng& rng) {
  if (cls.components.empty()) throw InvalidInputError("class '" + cls.name + "' has no components");
  std::vector<double> sum(n, 0.0);
  for (const auto& c : cls.components) {
    const double amplitude = cls.amplitude.draw(rng);
    const TimeSeries part = periodic_impulse(c, fs, n, rng);
    for (std::size_t i = 0; i < n; ++i) sum[i] += amplitude * part.values()[i];
  }
  const std::uint64_t noise_seed = rng();
  TimeSeries clean(std::move(sum), fs);
  if (std::isinf(cls.snr_db) && cls.snr_db > 0) return clean;
  return add_noise(clean, cls.snr_db, noise_seed);
}

std::size_t train_count(std::size_t n, double train_fraction) {
  return static_cast<std::size_t>(std::floor(train_fraction * static_cast<double>(n) + 1e-9));
}

std::vector<bool> stratified_split(const std::vector<int>& labels, std::size_t class_count,
                                   double train_fraction, std::uint64_t seed) {
  std::vector<bool> is_train(labels.size(), false);
  for (std::size_t c = 0; c < class_count; ++c) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == static_cast<int>(c)) members.push_back(i);
    }
    Rng rng(derive_seed(seed ^ kSplitSalt, c));
    std::shuffle(members.begin(), members.end(), rng);
    const std::size_t n_train = train_count(members.size(), train_fraction);
    for (std::size_t j = 0; j < n_train; ++j) is_train[members[j]] = true;
  }
  return is_train;
}

Dataset build_dataset(const DatasetSpec& spec, Execution exec) {
  validate(spec);
  const std::size_t k = spec.classes.size();
  const std::size_t total = k * spec.samples_per_class;
  Dataset ds;
  for (const auto& c : spec.classes) ds.class_names.push_back(c.name);
  ds.sample_rate_hz = spec.sample_rate_hz;
  ds.sample_length = spec.sample_length;
  ds.labels.resize(total);
  ds.seeds.resize(total);
  std::vector<std::vector<double>> values(total);
  for (std::size_t i = 0; i < total; ++i) {
    ds.labels[i] = static_cast<int>(i / spec.samples_per_class);
    ds.seeds[i] = derive_seed(spec.seed, i);
  }
  parallel::for_each(total, exec, [&](std::size_t i) {
    Rng rng(ds.seeds[i]);
    const auto& cls = spec.classes[static_cast<std::size_t>(ds.labels[i])];
    values[i] = normalize_meanstd(synthesize_sample(cls, spec.sample_rate_hz, spec.sample_length, rng)).values();
  });
  ds.samples.reserve(total);
  for (auto& v : values) ds.samples.emplace_back(std::move(v), spec.sample_rate_hz);
  ds.is_train = stratified_split(ds.labels, k, spec.train_fraction, spec.seed);
  ds.source_json = dataset_spec_json(spec);
  return ds;
}

LabeledSet Dataset::train_set() const {
  LabeledSet s;
  for (std::size_t i = 0; i < size(); ++i) {
    if (is_train[i]) {
      s.samples.push_back(samples[i]);
      s.labels.push_back(labels[i]);
    }
  }
  return s;
}

LabeledSet Dataset::test_set() const {
  LabeledSet s;
  for (std::size_t i = 0; i < size(); ++i) {
    if (!is_train[i]) {
      s.samples.push_back(samples[i]);
      s.labels.push_back(labels[i]);
    }
  }
  return s;
}

std::vector<std::size_t> Dataset::test_indices(int label) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < size(); ++i) {
    if (!is_train[i] && labels[i] == label) out.push_back(i);
  }
  return out;
}

namespace {

Json range_json(const Range& r) {
  if (r.is_fixed()) return r.lo;
  return Json::array({r.lo, r.hi});
}

Range range_from_json(const Json& j, const std::string& ctx) {
  if (j.is_number()) return Range::fixed(j.get<double>());
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number()) {
    return {j[0].get<double>(), j[1].get<double>()};
  }
  throw ConfigurationError(ctx + ": expected a number or [lo, hi]");
}

Json snr_json(double snr) {
  if (std::isinf(snr) && snr > 0) return "inf";
  return snr;
}

double snr_from_json(const Json& j, const std::string& ctx) {
  if (j.is_number()) return j.get<double>();
  if (j.is_string() && j.get<std::string>() == "inf") return std::numeric_limits<double>::infinity();
  throw ConfigurationError(ctx + ": snr_db must be a number or \"inf\"");
}

}  // namespace

std::string dataset_spec_json(const DatasetSpec& spec) {
  Json classes = Json::array();
  for (const auto& cls : spec.classes) {
    Json comps = Json::array();
    for (const auto& c : cls.components) {
      comps.push_back({{"name", c.name},
                       {"carrier_hz", range_json(c.carrier_hz)},
                       {"modulation_hz", range_json(c.modulation_hz)},
                       {"damping", c.damping},
                       {"onset_jitter", c.onset_jitter}});
    }
    classes.push_back({{"name", cls.name},
                       {"components", comps},
                       {"amplitude", range_json(cls.amplitude)},
                       {"snr_db", snr_json(cls.snr_db)}});
  }
  Json j{{"classes", classes},
         {"samples_per_class", spec.samples_per_class},
         {"sample_length", spec.sample_length},
         {"sample_rate_hz", spec.sample_rate_hz},
         {"train_fraction", spec.train_fraction},
         {"seed", spec.seed}};
  return j.dump();
}

DatasetSpec dataset_spec_from_json(const std::string& text) {
  const Json j = parse_json(text, "dataset");
  const std::string ctx = "dataset";
  reject_unknown_keys(j, {"classes", "samples_per_class", "sample_length", "sample_rate_hz", "train_fraction", "seed"},
                      ctx);
  DatasetSpec spec = default_dataset_spec();
  read_key(j, "samples_per_class", spec.samples_per_class, ctx);
  read_key(j, "sample_length", spec.sample_length, ctx);
  read_key(j, "sample_rate_hz", spec.sample_rate_hz, ctx);
  read_key(j, "train_fraction", spec.train_fraction, ctx);
  read_key(j, "seed", spec.seed, ctx);
  if (j.contains("classes")) {
    if (!j["classes"].is_array()) throw ConfigurationError("dataset.classes must be an array");
    spec.classes.clear();
    for (const auto& cj : j["classes"]) {
      const std::string cctx = "dataset.classes[" + std::to_string(spec.classes.size()) + "]";
      reject_unknown_keys(cj, {"name", "components", "amplitude", "snr_db"}, cctx);
      ClassSpec cls;
      read_key(cj, "name", cls.name, cctx);
      if (cj.contains("amplitude")) cls.amplitude = range_from_json(cj["amplitude"], cctx + ".amplitude");
      if (cj.contains("snr_db")) cls.snr_db = snr_from_json(cj["snr_db"], cctx);
      if (!cj.contains("components") || !cj["components"].is_array()) {
        throw ConfigurationError(cctx + ": components array required");
      }
      for (const auto& pj : cj["components"]) {
        const std::string pctx = cctx + ".components[" + std::to_string(cls.components.size()) + "]";
        reject_unknown_keys(pj, {"name", "carrier_hz", "modulation_hz", "damping", "onset_jitter"}, pctx);
        ImpulseComponentSpec c;
        read_key(pj, "name", c.name, pctx);
        if (!pj.contains("carrier_hz") || !pj.contains("modulation_hz")) {
          throw ConfigurationError(pctx + ": carrier_hz and modulation_hz are required");
        }
        c.carrier_hz = range_from_json(pj["carrier_hz"], pctx + ".carrier_hz");
        c.modulation_hz = range_from_json(pj["modulation_hz"], pctx + ".modulation_hz");
        read_key(pj, "damping", c.damping, pctx);
        read_key(pj, "onset_jitter", c.onset_jitter, pctx);
        cls.components.push_back(c);
      }
      spec.classes.push_back(cls);
    }
  }
  return spec;
}

namespace {

std::string sample_file_name(std::size_t i) {
  std::ostringstream name;
  name << "samples/" << std::setw(6) << std::setfill('0') << i << ".f32";
  return name.str();
}

}  // namespace

void write_dataset(const Dataset& ds, const std::filesystem::path& dir) {
  Json samples = Json::array();
  std::ostringstream csv;
  csv << "label,split";
  for (std::size_t t = 0; t < ds.sample_length; ++t) csv << ",x" << t;
  csv << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const std::string file = sample_file_name(i);
    io::write_f32(dir / file, ds.samples[i].values());
    const auto label = static_cast<std::size_t>(ds.labels[i]);
    samples.push_back({{"index", i},
                       {"file", file},
                       {"label", ds.labels[i]},
                       {"class", ds.class_names.at(label)},
                       {"split", ds.is_train[i] ? "train" : "test"},
                       {"seed", ds.seeds[i]}});
    csv << ds.labels[i] << ',' << (ds.is_train[i] ? "train" : "test");
    for (double v : ds.samples[i].values()) csv << ',' << io::format_double(v);
    csv << '\n';
  }
  Json manifest{{"format", "csshap-dataset"},
                {"version", 1},
                {"class_names", ds.class_names},
                {"sample_rate_hz", ds.sample_rate_hz},
                {"sample_length", ds.sample_length},
                {"sample_count", ds.size()},
                {"source", ds.source_json.empty() ? Json::object() : Json::parse(ds.source_json)},
                {"samples", samples}};
  io::write_text(dir / "manifest.json", manifest.dump(2) + "\n");
  io::write_text(dir / "dataset.csv", csv.str());
}

Dataset load_dataset(const std::filesystem::path& dir) {
  const std::filesystem::path manifest_path = dir / "manifest.json";
  Json m;
  try {
    m = Json::parse(io::read_text(manifest_path));
  } catch (const Json::parse_error& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
  try {
    if (m.at("format") != "csshap-dataset") throw FormatError(manifest_path.string() + ": not a dataset manifest");
    if (m.at("version") != 1) throw FormatError(manifest_path.string() + ": unsupported version");
    Dataset ds;
    ds.class_names = m.at("class_names").get<std::vector<std::string>>();
    ds.sample_rate_hz = m.at("sample_rate_hz").get<double>();
    ds.sample_length = m.at("sample_length").get<std::size_t>();
    ds.source_json = m.at("source").dump();
    for (const auto& s : m.at("samples")) {
      std::vector<double> values = io::read_f32(dir / s.at("file").get<std::string>());
      if (values.size() != ds.sample_length) {
        throw FormatError("sample " + s.at("file").get<std::string>() + " has " + std::to_string(values.size()) +
                          " values, manifest says " + std::to_string(ds.sample_length));
      }
      const int label = s.at("label").get<int>();
      if (label < 0 || static_cast<std::size_t>(label) >= ds.class_names.size()) {
        throw FormatError("sample label out of range in manifest");
      }
      ds.samples.emplace_back(std::move(values), ds.sample_rate_hz);
      ds.labels.push_back(label);
      ds.is_train.push_back(s.at("split").get<std::string>() == "train");
      ds.seeds.push_back(s.at("seed").get<std::uint64_t>());
    }
    return ds;
  } catch (const Json::exception& e) {
    throw FormatError(manifest_path.string() + ": " + e.what());
  }
}

}  // namespace csshap
