#include "csshap/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <tuple>

#include "csshap/error.hpp"

namespace csshap::fft {

namespace {

enum class PlanKind { kR2C, kC2R, kForward, kBackward };

// FFTW planning is not thread-safe; execution through the new-array interface
// is. Plans are created once per (kind, n) and never destroyed.
class PlanCache {
 public:
  fftw_plan get(PlanKind kind, int n) {
    std::lock_guard lock(mutex_);
    auto key = std::make_pair(kind, n);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second;

    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    double* real = fftw_alloc_real(static_cast<std::size_t>(n));
    fftw_complex* cplx = fftw_alloc_complex(static_cast<std::size_t>(n));
    fftw_complex* cplx2 = fftw_alloc_complex(static_cast<std::size_t>(n));
    fftw_plan plan = nullptr;
    switch (kind) {
      case PlanKind::kR2C:
        plan = fftw_plan_dft_r2c_1d(n, real, cplx, flags);
        break;
      case PlanKind::kC2R:
        plan = fftw_plan_dft_c2r_1d(n, cplx, real, flags);
        break;
      case PlanKind::kForward:
        plan = fftw_plan_dft_1d(n, cplx, cplx2, FFTW_FORWARD, flags);
        break;
      case PlanKind::kBackward:
        plan = fftw_plan_dft_1d(n, cplx, cplx2, FFTW_BACKWARD, flags);
        break;
    }
    fftw_free(real);
    fftw_free(cplx);
    fftw_free(cplx2);
    if (plan == nullptr) throw Error(ErrorKind::kConfiguration, "FFTW planning failed");
    plans_.emplace(key, plan);
    return plan;
  }

 private:
  std::mutex mutex_;
  std::map<std::pair<PlanKind, int>, fftw_plan> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

fftw_complex* as_fftw(Complex* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace

std::vector<Complex> rfft(std::span<const double> x) {
  const int n = static_cast<int>(x.size());
  if (n == 0) throw InvalidInputError("rfft: empty input");
  std::vector<double> in(x.begin(), x.end());
  std::vector<Complex> out(static_cast<std::size_t>(n / 2 + 1));
  fftw_execute_dft_r2c(cache().get(PlanKind::kR2C, n), in.data(), as_fftw(out.data()));
  return out;
}

std::vector<double> irfft(std::span<const Complex> spectrum, std::size_t n) {
  if (n == 0) throw InvalidInputError("irfft: empty output length");
  if (spectrum.size() != n / 2 + 1) {
    throw InvalidInputError("irfft: spectrum length does not match n/2+1");
  }
  // c2r overwrites its input.
  std::vector<Complex> in(spectrum.begin(), spectrum.end());
  in.front().imag(0.0);
  if (n % 2 == 0) in.back().imag(0.0);
  std::vector<double> out(n);
  fftw_execute_dft_c2r(cache().get(PlanKind::kC2R, static_cast<int>(n)),
                       as_fftw(in.data()), out.data());
  const double scale = 1.0 / static_cast<double>(n);
  for (double& v : out) v *= scale;
  return out;
}

void transform(std::span<Complex> data, bool inverse) {
  const int n = static_cast<int>(data.size());
  if (n == 0) return;
  std::vector<Complex> out(data.size());
  fftw_execute_dft(cache().get(inverse ? PlanKind::kBackward : PlanKind::kForward, n),
                   as_fftw(data.data()), as_fftw(out.data()));
  const double scale = inverse ? 1.0 / static_cast<double>(n) : 1.0;
  for (int i = 0; i < n; ++i) data[static_cast<std::size_t>(i)] = out[static_cast<std::size_t>(i)] * scale;
}

}  // namespace csshap::fft
