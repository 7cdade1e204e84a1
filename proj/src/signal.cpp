#include "csshap/signal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>

#include "csshap/error.hpp"
#include "csshap/fft.hpp"
#include "csshap/random.hpp"

namespace csshap {

TimeSeries::TimeSeries(std::vector<double> samples, double sample_rate_hz)
    : samples_(std::move(samples)), sample_rate_hz_(sample_rate_hz) {
  if (samples_.empty()) throw InvalidInputError("TimeSeries: empty signal");
  if (!(sample_rate_hz_ > 0.0) || !std::isfinite(sample_rate_hz_)) {
    throw InvalidInputError("TimeSeries: sample rate must be positive");
  }
  for (std::size_t i = 0; i < samples_.size(); ++i) {
    if (!std::isfinite(samples_[i])) {
      throw InvalidInputError("TimeSeries: non-finite sample at index " + std::to_string(i));
    }
  }
}

std::string to_string(WindowKind kind) {
  return kind == WindowKind::kHann ? "hann" : "rectangular";
}

WindowKind window_kind_from_string(const std::string& name) {
  if (name == "hann") return WindowKind::kHann;
  if (name == "rectangular") return WindowKind::kRectangular;
  throw ConfigurationError("unknown window kind '" + name + "'");
}

namespace {

bool overlap_adds_to_constant(const std::vector<double>& w, int hop) {
  const int length = static_cast<int>(w.size());
  std::vector<double> sum(static_cast<std::size_t>(hop), 0.0);
  for (int n = 0; n < length; ++n) sum[static_cast<std::size_t>(n % hop)] += w[static_cast<std::size_t>(n)];
  const auto [lo, hi] = std::minmax_element(sum.begin(), sum.end());
  return *hi > 0.0 && (*hi - *lo) <= 1e-10 * *hi;
}

}  // namespace

WindowSpec::WindowSpec(WindowKind kind, int length, int hop)
    : kind_(kind), length_(length), hop_(hop), cola_(false) {
  if (length < 2) throw ConfigurationError("window length must be >= 2");
  if (hop < 1 || hop > length) throw ConfigurationError("window hop must be in [1, length]");
  coeffs_.resize(static_cast<std::size_t>(length));
  for (int n = 0; n < length; ++n) {
    double v = 1.0;
    if (kind == WindowKind::kHann) {
      const double s = std::sin(std::numbers::pi * (n + 0.5) / length);
      v = s * s;
    }
    coeffs_[static_cast<std::size_t>(n)] = v;
  }
  cola_ = overlap_adds_to_constant(coeffs_, hop);
}

WindowSpec WindowSpec::default_window() { return WindowSpec(WindowKind::kHann, 64, 16); }

void WindowSpec::require_cola() const {
  if (!cola_) {
    throw ConfigurationError("window " + to_string(kind_) + "(" + std::to_string(length_) + "," +
                             std::to_string(hop_) + ") does not satisfy constant overlap-add");
  }
}

std::size_t frame_count(std::size_t n, const WindowSpec& w) {
  const auto length = static_cast<std::size_t>(w.length());
  const auto hop = static_cast<std::size_t>(w.hop());
  if (n < length) throw InvalidInputError("signal shorter than window");
  return (n - length + hop - 1) / hop + 1;
}

STFTGrid stft(const TimeSeries& x, const WindowSpec& w) {
  const std::size_t n = x.size();
  const std::size_t frames = frame_count(n, w);
  const auto length = static_cast<std::size_t>(w.length());
  const auto hop = static_cast<std::size_t>(w.hop());
  const std::size_t bins = length / 2 + 1;
  const double fs = x.sample_rate_hz();
  const auto& coeffs = w.coefficients();
  const auto samples = x.samples();

  STFTGrid grid{Matrix<Complex>(bins, frames), {}, {}, w, n, fs};
  grid.freq_axis_hz.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) grid.freq_axis_hz[k] = static_cast<double>(k) * fs / static_cast<double>(length);
  grid.frame_times_s.resize(frames);

  std::vector<double> segment(length);
  for (std::size_t t = 0; t < frames; ++t) {
    const std::size_t start = t * hop;
    for (std::size_t i = 0; i < length; ++i) {
      const std::size_t idx = start + i;
      segment[i] = idx < n ? samples[idx] * coeffs[i] : 0.0;
    }
    const auto spec = fft::rfft(segment);
    for (std::size_t k = 0; k < bins; ++k) grid.values(k, t) = spec[k];
    grid.frame_times_s[t] = (static_cast<double>(start) + 0.5 * static_cast<double>(length)) / fs;
  }
  return grid;
}

TimeSeries istft(const STFTGrid& grid, const WindowSpec& w) {
  w.require_cola();
  if (!(grid.window == w)) throw InvalidInputError("istft: grid was produced with a different window");
  const auto length = static_cast<std::size_t>(w.length());
  const auto hop = static_cast<std::size_t>(w.hop());
  if (grid.bins() != length / 2 + 1) throw InvalidInputError("istft: bin count does not match window");
  if (grid.frames() != frame_count(grid.source_length, w)) {
    throw InvalidInputError("istft: frame count does not match source length");
  }

  const std::size_t frames = grid.frames();
  const std::size_t span = (frames - 1) * hop + length;
  std::vector<double> out(span, 0.0);
  std::vector<double> norm(span, 0.0);
  const auto& coeffs = w.coefficients();
  std::vector<Complex> column(grid.bins());
  for (std::size_t t = 0; t < frames; ++t) {
    for (std::size_t k = 0; k < grid.bins(); ++k) column[k] = grid.values(k, t);
    const auto frame = fft::irfft(column, length);
    const std::size_t start = t * hop;
    for (std::size_t i = 0; i < length; ++i) {
      out[start + i] += frame[i] * coeffs[i];
      norm[start + i] += coeffs[i] * coeffs[i];
    }
  }
  std::vector<double> result(grid.source_length);
  for (std::size_t i = 0; i < grid.source_length; ++i) {
    result[i] = norm[i] > 1e-300 ? out[i] / norm[i] : 0.0;
  }
  return TimeSeries(std::move(result), grid.sample_rate_hz);
}

Spectrum spectrum(const TimeSeries& x) {
  Spectrum s{fft::rfft(x.samples()), {}, x.size(), x.sample_rate_hz()};
  s.freq_axis_hz.resize(s.values.size());
  for (std::size_t k = 0; k < s.values.size(); ++k) {
    s.freq_axis_hz[k] = static_cast<double>(k) * x.sample_rate_hz() / static_cast<double>(x.size());
  }
  return s;
}

TimeSeries inverse_spectrum(const Spectrum& s) {
  return TimeSeries(fft::irfft(s.values, s.source_length), s.sample_rate_hz);
}

std::vector<Complex> analytic_signal(const TimeSeries& x) {
  std::vector<Complex> data(x.samples().begin(), x.samples().end());
  if (data.size() % 2 == 1) data.emplace_back(0.0, 0.0);
  const std::size_t n = data.size();
  fft::transform(data, false);
  // Keep DC and Nyquist, double positive frequencies, drop negative ones.
  for (std::size_t k = 1; k < n / 2; ++k) data[k] *= 2.0;
  for (std::size_t k = n / 2 + 1; k < n; ++k) data[k] = 0.0;
  fft::transform(data, true);
  return data;
}

Spectrum envelope_spectrum(const TimeSeries& x) {
  const auto analytic = analytic_signal(x);
  std::vector<double> envelope(analytic.size());
  std::transform(analytic.begin(), analytic.end(), envelope.begin(),
                 [](const Complex& c) { return std::abs(c); });
  return spectrum(TimeSeries(std::move(envelope), x.sample_rate_hz()));
}

double signal_energy(std::span<const double> x) {
  return std::inner_product(x.begin(), x.end(), x.begin(), 0.0);
}

double relative_l2_error(std::span<const double> estimate, std::span<const double> reference) {
  if (estimate.size() != reference.size()) throw InvalidInputError("relative_l2_error: length mismatch");
  double diff = 0.0;
  for (std::size_t i = 0; i < estimate.size(); ++i) {
    const double d = estimate[i] - reference[i];
    diff += d * d;
  }
  const double ref = signal_energy(reference);
  return ref > 0.0 ? std::sqrt(diff / ref) : std::sqrt(diff);
}

TimeSeries add_noise(const TimeSeries& x, double snr_db, std::uint64_t seed) {
  if (std::isinf(snr_db) && snr_db > 0) return x;
  if (std::isnan(snr_db)) throw InvalidInputError("add_noise: SNR is NaN");
  const double px = signal_energy(x.samples()) / static_cast<double>(x.size());
  if (!(px > 0.0)) throw InvalidInputError("add_noise: input has zero energy");

  Rng rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<double> noise(x.size());
  for (double& v : noise) v = gauss(rng);
  const double pn_raw = signal_energy(noise) / static_cast<double>(noise.size());
  // Scale the realised noise so the achieved SNR equals the request.
  const double target_pn = px / std::pow(10.0, snr_db / 10.0);
  const double scale = std::sqrt(target_pn / pn_raw);

  std::vector<double> out(x.size());
  const auto s = x.samples();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = s[i] + scale * noise[i];
  return TimeSeries(std::move(out), x.sample_rate_hz());
}

TimeSeries normalize_meanstd(const TimeSeries& x) {
  const auto s = x.samples();
  const double n = static_cast<double>(s.size());
  const double mean = std::accumulate(s.begin(), s.end(), 0.0) / n;
  double var = 0.0;
  for (double v : s) var += (v - mean) * (v - mean);
  var /= n;
  const double sd = std::sqrt(var);
  if (!(sd > 0.0) || sd < 1e-300) throw InvalidInputError("normalize_meanstd: constant signal");
  std::vector<double> out(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) out[i] = (s[i] - mean) / sd;
  return TimeSeries(std::move(out), x.sample_rate_hz());
}

}  // namespace csshap
