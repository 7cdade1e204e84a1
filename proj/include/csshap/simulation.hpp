#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "csshap/model.hpp"
#include "csshap/parallel.hpp"
#include "csshap/random.hpp"
#include "csshap/signal.hpp"

namespace csshap {

// Closed interval; lo == hi is a fixed value.
struct Range {
  double lo = 0.0;
  double hi = 0.0;

  static Range fixed(double v) { return {v, v}; }
  bool is_fixed() const { return lo == hi; }
  double draw(Rng& rng) const;
  bool operator==(const Range&) const = default;
};

// Damped periodic impulse train
//   sum_k exp(-beta fs (t - t_k)) sin(2 pi f_c (t - t_k) + phi),  t >= t_k,
// with onsets t_k = k / f_m (+ optional offset). beta is the decay per sample.
struct ImpulseComponentSpec {
  std::string name;
  Range carrier_hz;
  Range modulation_hz;
  double damping = 0.04;
  bool onset_jitter = false;  // random first onset in [0, 1/f_m)

  bool operator==(const ImpulseComponentSpec&) const = default;
};

struct ClassSpec {
  std::string name;
  std::vector<ImpulseComponentSpec> components;
  Range amplitude{0.8, 1.0};
  double snr_db = 0.0;  // +inf disables noise

  bool operator==(const ClassSpec&) const = default;
};

struct DatasetSpec {
  std::vector<ClassSpec> classes;
  std::size_t samples_per_class = 300;
  std::size_t sample_length = 2000;
  double sample_rate_hz = 10000.0;
  double train_fraction = 0.7;
  std::uint64_t seed = 0;

  bool operator==(const DatasetSpec&) const = default;
};

// Health: P0 + random PH; Fault #1: P0 + P1; Fault #2: P0 + P2.
ImpulseComponentSpec component_p0();
ImpulseComponentSpec component_ph();
ImpulseComponentSpec component_p1();
ImpulseComponentSpec component_p2();
DatasetSpec default_dataset_spec();

void validate(const ImpulseComponentSpec& spec, double sample_rate_hz);
void validate(const DatasetSpec& spec);

struct ImpulseDraw {
  double carrier_hz;
  double modulation_hz;
  double phase;
  double onset_s;
};

// Onset times t_k = onset + k / f_m inside [0, n / fs).
std::vector<double> impulse_onsets(double modulation_hz, double onset_s, double sample_rate_hz,
                                   std::size_t n_samples);

// Draws the random parameters (f_c, f_m, phi, onset) then synthesises.
TimeSeries periodic_impulse(const ImpulseComponentSpec& spec, double sample_rate_hz,
                            std::size_t n_samples, Rng& rng, ImpulseDraw* draw = nullptr);
TimeSeries periodic_impulse(const ImpulseComponentSpec& spec, double sample_rate_hz,
                            std::size_t n_samples, const ImpulseDraw& draw);

// Sum of amplitude-weighted components plus Gaussian noise at snr_db.
// Not normalised.
TimeSeries synthesize_sample(const ClassSpec& cls, double sample_rate_hz, std::size_t n_samples, Rng& rng);

struct Dataset {
  std::vector<std::string> class_names;
  double sample_rate_hz = 0.0;
  std::size_t sample_length = 0;
  std::vector<TimeSeries> samples;
  std::vector<int> labels;
  std::vector<bool> is_train;
  std::vector<std::uint64_t> seeds;  // per-sample stream seed (0 for ingested data)
  std::string source_json;           // generator spec or ingest echo

  std::size_t size() const { return samples.size(); }
  LabeledSet train_set() const;
  LabeledSet test_set() const;
  // Test-split indices of the given class, in dataset order.
  std::vector<std::size_t> test_indices(int label) const;
};

// Per-class train count: floor(train_fraction * n + 1e-9).
std::size_t train_count(std::size_t n, double train_fraction);

// Marks train/test membership per class with a shuffle seeded from seed.
std::vector<bool> stratified_split(const std::vector<int>& labels, std::size_t class_count,
                                   double train_fraction, std::uint64_t seed);

// Sample i uses the stream derive_seed(spec.seed, i); each sample is
// mean-std normalised after noise injection.
Dataset build_dataset(const DatasetSpec& spec, Execution exec = Execution::kSerial);

std::string dataset_spec_json(const DatasetSpec& spec);
DatasetSpec dataset_spec_from_json(const std::string& text);

// Layout: manifest.json, samples/NNNNNN.f32 (little-endian float32) and
// dataset.csv (label, split, samples...).
void write_dataset(const Dataset& ds, const std::filesystem::path& dir);
Dataset load_dataset(const std::filesystem::path& dir);

}  // namespace csshap
