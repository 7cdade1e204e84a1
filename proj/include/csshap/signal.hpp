#pragma once

#include <complex>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "csshap/matrix.hpp"

namespace csshap {

using Complex = std::complex<double>;

// Uniformly sampled, finite, non-empty real signal.
class TimeSeries {
 public:
  TimeSeries(std::vector<double> samples, double sample_rate_hz);

  std::span<const double> samples() const noexcept { return samples_; }
  const std::vector<double>& values() const noexcept { return samples_; }
  std::size_t size() const noexcept { return samples_.size(); }
  double sample_rate_hz() const noexcept { return sample_rate_hz_; }

  bool operator==(const TimeSeries&) const = default;

 private:
  std::vector<double> samples_;
  double sample_rate_hz_;
};

enum class WindowKind { kHann, kRectangular };

std::string to_string(WindowKind kind);
WindowKind window_kind_from_string(const std::string& name);

// Analysis/synthesis window. Hann is sampled at half-sample offsets,
// w[n] = sin^2(pi (n + 1/2) / L), so every sample in a frame carries weight.
class WindowSpec {
 public:
  WindowSpec(WindowKind kind, int length, int hop);

  // Hann, 64 samples, hop 16.
  static WindowSpec default_window();

  WindowKind kind() const noexcept { return kind_; }
  int length() const noexcept { return length_; }
  int hop() const noexcept { return hop_; }
  bool is_cola() const noexcept { return cola_; }
  const std::vector<double>& coefficients() const noexcept { return coeffs_; }

  // Throws ConfigurationError when the window does not overlap-add to a constant.
  void require_cola() const;

  bool operator==(const WindowSpec& other) const {
    return kind_ == other.kind_ && length_ == other.length_ && hop_ == other.hop_;
  }

 private:
  WindowKind kind_;
  int length_;
  int hop_;
  bool cola_;
  std::vector<double> coeffs_;
};

struct STFTGrid {
  Matrix<Complex> values;  // F bins x T frames
  std::vector<double> freq_axis_hz;
  std::vector<double> frame_times_s;  // frame centres
  WindowSpec window;
  std::size_t source_length;
  double sample_rate_hz;

  std::size_t bins() const { return values.rows(); }
  std::size_t frames() const { return values.cols(); }
};

struct Spectrum {
  std::vector<Complex> values;
  std::vector<double> freq_axis_hz;
  std::size_t source_length;  // length of the transformed sequence
  double sample_rate_hz;
};

// Number of frames for a signal of n samples; a trailing partial frame is
// zero-padded so every sample is covered.
std::size_t frame_count(std::size_t n, const WindowSpec& w);

STFTGrid stft(const TimeSeries& x, const WindowSpec& w);

// Weighted overlap-add inverse normalised by the summed squared window.
// Exact for unmodified grids; least-squares for modified ones.
TimeSeries istft(const STFTGrid& grid, const WindowSpec& w);

Spectrum spectrum(const TimeSeries& x);
TimeSeries inverse_spectrum(const Spectrum& s);

// Analytic signal via one-sided spectral doubling. Odd-length input is padded
// with a single trailing zero, so the result may be one sample longer.
std::vector<Complex> analytic_signal(const TimeSeries& x);
Spectrum envelope_spectrum(const TimeSeries& x);

// snr_db = +infinity returns x unchanged.
TimeSeries add_noise(const TimeSeries& x, double snr_db, std::uint64_t seed);

TimeSeries normalize_meanstd(const TimeSeries& x);

double signal_energy(std::span<const double> x);
double relative_l2_error(std::span<const double> estimate, std::span<const double> reference);

}  // namespace csshap
