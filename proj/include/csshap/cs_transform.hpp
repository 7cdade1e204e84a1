#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

#include "csshap/matrix.hpp"
#include "csshap/signal.hpp"

namespace csshap {

// Cyclic-spectral representation of a deterministic signal: the DFT along the
// frame axis of the framewise STFT power, plus the STFT phase needed to invert.
//
// The cyclic axis is one-sided. cs(f, j) = sum_t |STFT(f, t)|^2 e^{-2 pi i j t / T},
// j = 0 .. floor(T/2), so the alpha = 0 column is the summed framewise power.
struct CSRepresentation {
  Matrix<Complex> cs;     // F spectral bins x A cyclic bins
  Matrix<double> phase;   // F x T, in (-pi, pi]; zero where the STFT vanishes
  std::vector<double> freq_axis_hz;
  std::vector<double> cyclic_axis_hz;
  WindowSpec window;
  std::size_t source_length;
  double sample_rate_hz;

  std::size_t bins() const { return cs.rows(); }
  std::size_t cyclic_bins() const { return cs.cols(); }
  std::size_t frames() const { return phase.cols(); }
};

std::size_t cyclic_bin_count(std::size_t frames);

CSRepresentation cs_forward(const TimeSeries& x, const WindowSpec& w);

struct CSInverseStats {
  std::size_t clamped_cells = 0;  // reconstructed power entries < 0 set to 0
};

// Inverse DFT along alpha, clamp negative power, square root, reattach the
// stored phase, inverse STFT.
TimeSeries cs_inverse(const CSRepresentation& rep, const WindowSpec& w,
                      CSInverseStats* stats = nullptr);

// Framewise power |STFT|^2 recovered from the cyclic axis (before clamping).
Matrix<double> cs_power(const CSRepresentation& rep);

Matrix<double> cs_magnitude(const CSRepresentation& rep);

// Binary container: header then float32 little-endian cs (interleaved re/im)
// followed by float32 phase.
void write_cs_binary(const CSRepresentation& rep, const std::filesystem::path& path);
CSRepresentation read_cs_binary(const std::filesystem::path& path);

// Magnitude grid: first column spectral frequency, header row cyclic frequency.
void write_cs_magnitude_csv(const CSRepresentation& rep, const std::filesystem::path& path,
                            bool log_scale = false);

}  // namespace csshap
