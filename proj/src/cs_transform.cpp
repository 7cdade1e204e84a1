#include "csshap/cs_transform.hpp"

#include <cmath>
#include <fstream>
#include <numbers>

#include "csshap/error.hpp"
#include "csshap/fft.hpp"
#include "csshap/io.hpp"

namespace csshap {

namespace {

constexpr char kMagic[4] = {'C', 'S', 'R', 'P'};
constexpr std::uint32_t kVersion = 1;

double wrapped_angle(const Complex& c) {
  if (c == Complex(0.0, 0.0)) return 0.0;
  const double a = std::arg(c);
  return a <= -std::numbers::pi ? std::numbers::pi : a;
}

std::vector<double> cyclic_axis(std::size_t frames, const WindowSpec& w, double fs) {
  const std::size_t a = cyclic_bin_count(frames);
  const double frame_rate = fs / w.hop();
  std::vector<double> axis(a);
  for (std::size_t j = 0; j < a; ++j) axis[j] = static_cast<double>(j) * frame_rate / static_cast<double>(frames);
  return axis;
}

void check_consistent(const CSRepresentation& rep, const WindowSpec& w) {
  if (!(rep.window == w)) throw InvalidInputError("CS representation was produced with a different window");
  const auto bins = static_cast<std::size_t>(w.length() / 2 + 1);
  const std::size_t frames = frame_count(rep.source_length, w);
  if (rep.cs.rows() != bins || rep.phase.rows() != bins) {
    throw InvalidInputError("CS representation: spectral bin count does not match window");
  }
  if (rep.phase.cols() != frames || rep.cs.cols() != cyclic_bin_count(frames)) {
    throw InvalidInputError("CS representation: cyclic/frame dimensions do not match source length");
  }
}

}  // namespace

std::size_t cyclic_bin_count(std::size_t frames) { return frames / 2 + 1; }

CSRepresentation cs_forward(const TimeSeries& x, const WindowSpec& w) {
  w.require_cola();
  const STFTGrid grid = stft(x, w);
  const std::size_t bins = grid.bins();
  const std::size_t frames = grid.frames();

  CSRepresentation rep{Matrix<Complex>(bins, cyclic_bin_count(frames)),
                       Matrix<double>(bins, frames),
                       grid.freq_axis_hz,
                       cyclic_axis(frames, w, x.sample_rate_hz()),
                       w,
                       x.size(),
                       x.sample_rate_hz()};

  std::vector<double> power(frames);
  for (std::size_t f = 0; f < bins; ++f) {
    for (std::size_t t = 0; t < frames; ++t) {
      const Complex s = grid.values(f, t);
      power[t] = std::norm(s);
      rep.phase(f, t) = wrapped_angle(s);
    }
    const auto row = fft::rfft(power);
    for (std::size_t j = 0; j < row.size(); ++j) rep.cs(f, j) = row[j];
  }
  return rep;
}

Matrix<double> cs_power(const CSRepresentation& rep) {
  const std::size_t frames = rep.frames();
  Matrix<double> power(rep.bins(), frames);
  for (std::size_t f = 0; f < rep.bins(); ++f) {
    const auto row = fft::irfft(rep.cs.row(f), frames);
    for (std::size_t t = 0; t < frames; ++t) power(f, t) = row[t];
  }
  return power;
}

TimeSeries cs_inverse(const CSRepresentation& rep, const WindowSpec& w, CSInverseStats* stats) {
  w.require_cola();
  check_consistent(rep, w);
  const std::size_t bins = rep.bins();
  const std::size_t frames = rep.frames();
  const Matrix<double> power = cs_power(rep);

  STFTGrid grid{Matrix<Complex>(bins, frames), rep.freq_axis_hz, {}, w, rep.source_length,
                rep.sample_rate_hz};
  std::size_t clamped = 0;
  for (std::size_t f = 0; f < bins; ++f) {
    for (std::size_t t = 0; t < frames; ++t) {
      double p = power(f, t);
      if (p < 0.0) {
        p = 0.0;
        ++clamped;
      }
      grid.values(f, t) = std::polar(std::sqrt(p), rep.phase(f, t));
    }
  }
  if (stats != nullptr) stats->clamped_cells = clamped;
  return istft(grid, w);
}

Matrix<double> cs_magnitude(const CSRepresentation& rep) {
  Matrix<double> mag(rep.cs.rows(), rep.cs.cols());
  for (std::size_t i = 0; i < rep.cs.size(); ++i) mag.data()[i] = std::abs(rep.cs.data()[i]);
  return mag;
}

void write_cs_binary(const CSRepresentation& rep, const std::filesystem::path& path) {
  io::ByteWriter w;
  w.put_bytes(std::string_view(kMagic, 4));
  w.put_u32(kVersion);
  w.put_u32(static_cast<std::uint32_t>(rep.bins()));
  w.put_u32(static_cast<std::uint32_t>(rep.cyclic_bins()));
  w.put_u32(static_cast<std::uint32_t>(rep.frames()));
  w.put_f64(rep.sample_rate_hz);
  w.put_u32(rep.window.kind() == WindowKind::kHann ? 0U : 1U);
  w.put_u32(static_cast<std::uint32_t>(rep.window.length()));
  w.put_u32(static_cast<std::uint32_t>(rep.window.hop()));
  w.put_u64(rep.source_length);
  for (const Complex& c : rep.cs.data()) {
    w.put_f32(static_cast<float>(c.real()));
    w.put_f32(static_cast<float>(c.imag()));
  }
  for (double p : rep.phase.data()) w.put_f32(static_cast<float>(p));
  io::write_file(path, w.bytes());
}

CSRepresentation read_cs_binary(const std::filesystem::path& path) {
  io::ByteReader r(io::read_file(path));
  if (r.get_bytes(4) != std::string_view(kMagic, 4)) throw FormatError(path.string() + ": bad magic");
  if (r.get_u32() != kVersion) throw FormatError(path.string() + ": unsupported version");
  const std::size_t bins = r.get_u32();
  const std::size_t cyclic = r.get_u32();
  const std::size_t frames = r.get_u32();
  const double fs = r.get_f64();
  const std::uint32_t kind = r.get_u32();
  const int length = static_cast<int>(r.get_u32());
  const int hop = static_cast<int>(r.get_u32());
  const std::size_t source_length = r.get_u64();
  if (kind > 1) throw FormatError(path.string() + ": unknown window kind");
  const WindowSpec w(kind == 0 ? WindowKind::kHann : WindowKind::kRectangular, length, hop);
  if (r.remaining() != 4 * (2 * bins * cyclic + bins * frames)) {
    throw FormatError(path.string() + ": payload size does not match header");
  }
  CSRepresentation rep{Matrix<Complex>(bins, cyclic), Matrix<double>(bins, frames), {}, {}, w,
                       source_length, fs};
  for (Complex& c : rep.cs.data()) {
    const double re = r.get_f32();
    const double im = r.get_f32();
    c = Complex(re, im);
  }
  for (double& p : rep.phase.data()) p = r.get_f32();
  rep.freq_axis_hz.resize(bins);
  for (std::size_t k = 0; k < bins; ++k) rep.freq_axis_hz[k] = static_cast<double>(k) * fs / length;
  rep.cyclic_axis_hz = cyclic_axis(frames, w, fs);
  check_consistent(rep, w);
  return rep;
}

void write_cs_magnitude_csv(const CSRepresentation& rep, const std::filesystem::path& path,
                            bool log_scale) {
  const auto mag = cs_magnitude(rep);
  std::string out = "freq_hz";
  for (double a : rep.cyclic_axis_hz) out += "," + io::format_double(a);
  out += "\n";
  for (std::size_t f = 0; f < mag.rows(); ++f) {
    out += io::format_double(rep.freq_axis_hz[f]);
    for (std::size_t j = 0; j < mag.cols(); ++j) {
      const double v = log_scale ? std::log10(mag(f, j) + 1e-12) : mag(f, j);
      out += "," + io::format_double(v);
    }
    out += "\n";
  }
  io::write_text(path, out);
}

}  // namespace csshap
