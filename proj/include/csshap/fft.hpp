#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace csshap::fft {

using Complex = std::complex<double>;

// One-sided forward DFT of a real sequence, unnormalised: n/2 + 1 bins.
std::vector<Complex> rfft(std::span<const double> x);

// Inverse of rfft for a length-n real sequence (includes the 1/n factor).
// Only the real parts of the DC and (for even n) Nyquist bins are used.
std::vector<double> irfft(std::span<const Complex> spectrum, std::size_t n);

// Complex DFT in place. The inverse includes the 1/n factor.
void transform(std::span<Complex> data, bool inverse);

}  // namespace csshap::fft
