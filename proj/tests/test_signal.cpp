#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <vector>

#include "csshap/error.hpp"
#include "csshap/signal.hpp"
#include "csshap/simulation.hpp"
#include "oracles.hpp"

namespace {

using namespace csshap;

constexpr double kFs = 10000.0;

TimeSeries ts(std::vector<double> v, double fs = kFs) { return TimeSeries(std::move(v), fs); }

std::vector<double> vec(const TimeSeries& x) { return x.values(); }

TEST(TimeSeries, RejectsInvalidConstruction) {
  EXPECT_THROW(TimeSeries({}, kFs), InvalidInputError);
  EXPECT_THROW(TimeSeries({1.0}, 0.0), InvalidInputError);
  EXPECT_THROW(TimeSeries({1.0, std::nan("")}, kFs), InvalidInputError);
  EXPECT_THROW(TimeSeries({std::numeric_limits<double>::infinity()}, kFs), InvalidInputError);
  EXPECT_NO_THROW(TimeSeries({0.0}, 1.0));
}

TEST(Window, ValidatesShapeAndCola) {
  EXPECT_THROW(WindowSpec(WindowKind::kHann, 64, 65), ConfigurationError);
  EXPECT_THROW(WindowSpec(WindowKind::kHann, 64, 0), ConfigurationError);
  EXPECT_TRUE(WindowSpec(WindowKind::kHann, 64, 16).is_cola());
  EXPECT_TRUE(WindowSpec(WindowKind::kHann, 256, 64).is_cola());
  EXPECT_TRUE(WindowSpec(WindowKind::kRectangular, 32, 32).is_cola());
  const WindowSpec bad(WindowKind::kHann, 64, 48);
  EXPECT_FALSE(bad.is_cola());
  EXPECT_THROW(bad.require_cola(), ConfigurationError);
  const auto w = WindowSpec::default_window();
  EXPECT_EQ(w.kind(), WindowKind::kHann);
  EXPECT_EQ(w.length(), 64);
  EXPECT_EQ(w.hop(), 16);
}

TEST(Window, HannCoefficientsMatchOracle) {
  const WindowSpec w(WindowKind::kHann, 128, 32);
  const auto ref = oracle::hann(128);
  for (std::size_t i = 0; i < ref.size(); ++i) EXPECT_NEAR(w.coefficients()[i], ref[i], 1e-15);
}

TEST(Stft, FrameCount) {
  const WindowSpec w(WindowKind::kHann, 256, 64);
  EXPECT_EQ(frame_count(256, w), 1u);
  EXPECT_EQ(frame_count(256 + 64 * 5, w), 6u);
  // trailing partial frame is zero-padded
  EXPECT_EQ(frame_count(2000, w), 29u);
  EXPECT_EQ(frame_count(2000, WindowSpec::default_window()), 122u);
}

TEST(Stft, EveryFrameMatchesDirectDft) {
  const auto x = oracle::white_noise(700, 9);
  const WindowSpec w(WindowKind::kHann, 128, 32);
  const STFTGrid g = stft(ts(x), w);
  const auto ref = oracle::stft(x, 128, 32);
  ASSERT_EQ(g.bins(), 65u);
  ASSERT_EQ(g.frames(), ref[0].size());
  for (std::size_t f = 0; f < g.bins(); ++f) {
    for (std::size_t t = 0; t < g.frames(); ++t) {
      EXPECT_LT(std::abs(g.values(f, t) - ref[f][t]), 1e-10) << f << "," << t;
    }
  }
  EXPECT_DOUBLE_EQ(g.freq_axis_hz[1] - g.freq_axis_hz[0], kFs / 128.0);
  EXPECT_TRUE(std::is_sorted(g.freq_axis_hz.begin(), g.freq_axis_hz.end()));
}

TEST(Stft, SineFramesPeakAtNearestBin) {
  const auto x = oracle::sine(4000, kFs, 1000.0);
  const STFTGrid g = stft(ts(x), WindowSpec(WindowKind::kHann, 256, 64));
  const std::size_t expected = static_cast<std::size_t>(std::lround(1000.0 / (kFs / 256.0)));
  for (std::size_t t = 0; t < g.frames(); ++t) {
    // the zero-padded tail frame is excluded when it holds less than half a window
    if (t * 64 + 128 > x.size()) continue;
    std::size_t best = 0;
    for (std::size_t f = 0; f < g.bins(); ++f) {
      if (std::abs(g.values(f, t)) > std::abs(g.values(best, t))) best = f;
    }
    EXPECT_EQ(best, expected) << "frame " << t;
  }
}

TEST(Stft, ZeroAndLinearity) {
  const WindowSpec w(WindowKind::kHann, 64, 16);
  const STFTGrid z = stft(ts(std::vector<double>(500, 0.0)), w);
  for (const auto& v : z.values.data()) EXPECT_EQ(std::abs(v), 0.0);

  const auto x = oracle::white_noise(500, 1);
  const auto y = oracle::white_noise(500, 2);
  std::vector<double> mix(500);
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = 2.5 * x[i] - 0.75 * y[i];
  const auto gx = stft(ts(x), w);
  const auto gy = stft(ts(y), w);
  const auto gm = stft(ts(mix), w);
  for (std::size_t i = 0; i < gm.values.size(); ++i) {
    EXPECT_LT(std::abs(gm.values.data()[i] - (2.5 * gx.values.data()[i] - 0.75 * gy.values.data()[i])), 1e-10);
  }
}

TEST(Stft, ShortSignalRejected) {
  EXPECT_THROW(stft(ts(std::vector<double>(100, 1.0)), WindowSpec(WindowKind::kHann, 256, 64)), InvalidInputError);
}

struct WindowCase {
  WindowKind kind;
  int length;
  int hop;
};

class IstftRoundTrip : public ::testing::TestWithParam<WindowCase> {};

TEST_P(IstftRoundTrip, WhiteNoise) {
  const auto c = GetParam();
  const WindowSpec w(c.kind, c.length, c.hop);
  for (std::size_t n : {2000u, 2001u, 1037u}) {
    const auto x = oracle::white_noise(n, static_cast<unsigned>(n));
    const TimeSeries back = istft(stft(ts(x), w), w);
    ASSERT_EQ(back.size(), n);
    EXPECT_LT(oracle::rel_l2(vec(back), x), 1e-10) << "n=" << n;
  }
}

INSTANTIATE_TEST_SUITE_P(ColaWindows, IstftRoundTrip,
                         ::testing::Values(WindowCase{WindowKind::kHann, 64, 16}, WindowCase{WindowKind::kHann, 128, 32},
                                           WindowCase{WindowKind::kHann, 256, 64}, WindowCase{WindowKind::kHann, 256, 128},
                                           WindowCase{WindowKind::kRectangular, 64, 64},
                                           WindowCase{WindowKind::kRectangular, 64, 32}));

TEST(Istft, ZeroGridAndLinearity) {
  const WindowSpec w(WindowKind::kHann, 256, 64);
  const auto x = oracle::white_noise(2000, 4);
  const auto y = oracle::white_noise(2000, 5);
  STFTGrid g = stft(ts(x), w);
  const STFTGrid gy = stft(ts(y), w);
  for (std::size_t i = 0; i < g.values.size(); ++i) g.values.data()[i] += gy.values.data()[i];
  const auto sum = istft(g, w);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(sum.values()[i], x[i] + y[i], 1e-10);

  for (auto& v : g.values.data()) v = 0.0;
  const auto zero = istft(g, w);
  for (double v : zero.values()) EXPECT_EQ(v, 0.0);
}

TEST(Istft, NonColaWindowRejected) {
  const auto x = oracle::white_noise(1000, 4);
  const WindowSpec bad(WindowKind::kHann, 64, 48);
  const STFTGrid g = stft(ts(x), bad);
  EXPECT_THROW(istft(g, bad), ConfigurationError);
}

TEST(Spectrum, SineSingleDominantBin) {
  // 2000 samples at 10 kHz hold exactly 20 periods of 100 Hz
  const auto s = spectrum(ts(oracle::sine(2000, kFs, 100.0)));
  ASSERT_EQ(s.values.size(), 1001u);
  EXPECT_DOUBLE_EQ(s.freq_axis_hz[20], 100.0);
  EXPECT_EQ(s.freq_axis_hz[0], 0.0);
  std::vector<double> mag;
  for (const auto& v : s.values) mag.push_back(std::abs(v));
  const auto peak = static_cast<std::size_t>(std::max_element(mag.begin(), mag.end()) - mag.begin());
  EXPECT_EQ(peak, 20u);
  double next = 0.0;
  for (std::size_t k = 0; k < mag.size(); ++k) {
    if (k != peak) next = std::max(next, mag[k]);
  }
  EXPECT_GT(mag[peak], 100.0 * next);
}

TEST(Spectrum, DcSignalOnlyInBinZero) {
  const auto s = spectrum(ts(std::vector<double>(256, 3.0)));
  EXPECT_NEAR(std::abs(s.values[0]), 3.0 * 256, 1e-9);
  for (std::size_t k = 1; k < s.values.size(); ++k) EXPECT_LT(std::abs(s.values[k]), 1e-9);
}

TEST(Spectrum, ParsevalAndRoundTrip) {
  for (std::size_t n : {2000u, 1999u}) {
    const auto x = oracle::white_noise(n, 8);
    const auto s = spectrum(ts(x));
    double two_sided = 0.0;
    for (std::size_t k = 0; k < s.values.size(); ++k) {
      const bool single = k == 0 || (n % 2 == 0 && k == n / 2);
      two_sided += (single ? 1.0 : 2.0) * std::norm(s.values[k]);
    }
    EXPECT_NEAR(two_sided / static_cast<double>(n) / oracle::energy(x), 1.0, 1e-10);
    const auto back = inverse_spectrum(s);
    EXPECT_LT(oracle::rel_l2(vec(back), x), 1e-10);
  }
}

TEST(Spectrum, Linearity) {
  const auto x = oracle::white_noise(300, 1);
  const auto y = oracle::white_noise(300, 2);
  std::vector<double> mix(300);
  for (std::size_t i = 0; i < mix.size(); ++i) mix[i] = -1.5 * x[i] + 4.0 * y[i];
  const auto sx = spectrum(ts(x));
  const auto sy = spectrum(ts(y));
  const auto sm = spectrum(ts(mix));
  for (std::size_t k = 0; k < sm.values.size(); ++k) {
    EXPECT_LT(std::abs(sm.values[k] - (-1.5 * sx.values[k] + 4.0 * sy.values[k])), 1e-10);
  }
}

TEST(Envelope, ImpulseTrainPeaksAtModulationHarmonics) {
  const ImpulseComponentSpec p0 = component_p0();
  const TimeSeries x = periodic_impulse(p0, kFs, 2000, ImpulseDraw{1500.0, 50.0, 0.0, 0.0});
  const Spectrum e = envelope_spectrum(x);
  const double df = e.freq_axis_hz[1];
  for (int h = 1; h <= 3; ++h) {
    const auto k = static_cast<std::size_t>(std::lround(h * 50.0 / df));
    const double m = std::abs(e.values[k]);
    EXPECT_GT(m, std::abs(e.values[k - 1])) << "harmonic " << h;
    EXPECT_GT(m, std::abs(e.values[k + 1])) << "harmonic " << h;
  }
}

TEST(Envelope, SineConcentratesAtDc) {
  const Spectrum e = envelope_spectrum(ts(oracle::sine(2000, kFs, 1000.0)));
  double rest = 0.0;
  for (std::size_t k = 1; k < e.values.size(); ++k) rest += std::norm(e.values[k]);
  EXPECT_GT(std::norm(e.values[0]), 1e6 * rest);
}

TEST(Envelope, ZeroSignalAndOddLength) {
  const Spectrum z = envelope_spectrum(ts(std::vector<double>(200, 0.0)));
  for (const auto& v : z.values) EXPECT_EQ(std::abs(v), 0.0);
  const auto a = analytic_signal(ts(oracle::white_noise(201, 3)));
  EXPECT_EQ(a.size(), 202u);
}

TEST(Envelope, AnalyticSignalRealPartIsInput) {
  const auto x = oracle::white_noise(512, 12);
  const auto a = analytic_signal(ts(x));
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(a[i].real(), x[i], 1e-12);
}

TEST(Noise, AchievesRequestedSnr) {
  const auto x = oracle::sine(2000, kFs, 440.0);
  for (double snr : {0.0, -10.0, 10.0}) {
    const TimeSeries y = add_noise(ts(x), snr, 77);
    std::vector<double> n(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) n[i] = y.values()[i] - x[i];
    const double measured = 10.0 * std::log10(oracle::energy(x) / oracle::energy(n));
    EXPECT_NEAR(measured, snr, 0.1);
  }
}

TEST(Noise, InfiniteSnrIsIdentityAndSeedDeterministic) {
  const auto x = ts(oracle::white_noise(2000, 1));
  EXPECT_EQ(add_noise(x, std::numeric_limits<double>::infinity(), 5), x);
  EXPECT_EQ(add_noise(x, 0.0, 5), add_noise(x, 0.0, 5));
  EXPECT_NE(add_noise(x, 0.0, 5), add_noise(x, 0.0, 6));
  EXPECT_THROW(add_noise(ts(std::vector<double>(10, 0.0)), 0.0, 1), InvalidInputError);
}

void expect_standardized(const TimeSeries& y) {
  const auto& v = y.values();
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double var = 0.0;
  for (double s : v) var += (s - mean) * (s - mean);
  EXPECT_NEAR(mean, 0.0, 1e-12);
  EXPECT_NEAR(std::sqrt(var / n), 1.0, 1e-12);
}

TEST(Normalize, SmallVector) {
  const auto y = normalize_meanstd(ts({1.0, 2.0, 3.0}));
  expect_standardized(y);
  EXPECT_NEAR(y.values()[1], 0.0, 1e-15);
  EXPECT_NEAR(y.values()[2], std::sqrt(1.5), 1e-12);
}

TEST(Normalize, IdempotentAndAffineInvariant) {
  const auto x = oracle::white_noise(2000, 21, 3.0);
  const auto once = normalize_meanstd(ts(x));
  expect_standardized(once);
  const auto twice = normalize_meanstd(once);
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(twice.values()[i], once.values()[i], 1e-12);
  std::vector<double> affine(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) affine[i] = 3.7 * x[i] - 2.0;
  const auto a = normalize_meanstd(ts(affine));
  for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(a.values()[i], once.values()[i], 1e-12);
  EXPECT_THROW(normalize_meanstd(ts(std::vector<double>(5, 2.0))), InvalidInputError);
}

TEST(Metrics, EnergyAndRelativeError) {
  const std::vector<double> a{3.0, 4.0};
  const std::vector<double> b{3.0, 4.5};
  EXPECT_DOUBLE_EQ(signal_energy(a), 25.0);
  EXPECT_NEAR(relative_l2_error(b, a), 0.1, 1e-15);
}

}  // namespace
