#include "csshap/domains.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "csshap/error.hpp"
#include "csshap/fft.hpp"
#include "csshap/io.hpp"

namespace csshap {

std::string to_string(DomainKind kind) {
  switch (kind) {
    case DomainKind::kTime: return "time";
    case DomainKind::kFrequency: return "frequency";
    case DomainKind::kEnvelope: return "envelope";
    case DomainKind::kTimeFrequency: return "time_frequency";
    case DomainKind::kCyclicSpectral: return "cyclic_spectral";
  }
  return "unknown";
}

DomainKind domain_from_string(const std::string& name) {
  for (DomainKind k : kAllDomains) {
    if (to_string(k) == name) return k;
  }
  if (name == "cs") return DomainKind::kCyclicSpectral;
  if (name == "tf") return DomainKind::kTimeFrequency;
  if (name == "freq") return DomainKind::kFrequency;
  if (name == "env") return DomainKind::kEnvelope;
  throw ConfigurationError("unknown domain '" + name + "'");
}

bool domain_needs_window(DomainKind kind) {
  return kind == DomainKind::kTimeFrequency || kind == DomainKind::kCyclicSpectral;
}

namespace {

const WindowSpec& require_window(DomainKind kind, const std::optional<WindowSpec>& w) {
  if (!w) throw ConfigurationError("domain " + to_string(kind) + " requires a window");
  return *w;
}

std::vector<double> time_axis(std::size_t n, double fs) {
  std::vector<double> axis(n);
  for (std::size_t i = 0; i < n; ++i) axis[i] = static_cast<double>(i) / fs;
  return axis;
}

EnvelopeRepresentation envelope_forward(const TimeSeries& x) {
  const auto analytic = analytic_signal(x);
  std::vector<double> envelope(analytic.size());
  std::vector<double> carrier(analytic.size(), 0.0);
  const auto s = x.samples();
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    envelope[i] = std::abs(analytic[i]);
    const double xi = i < s.size() ? s[i] : 0.0;
    carrier[i] = envelope[i] > 0.0 ? xi / envelope[i] : 0.0;
  }
  return {spectrum(TimeSeries(std::move(envelope), x.sample_rate_hz())), std::move(carrier), x.size()};
}

TimeSeries envelope_inverse(const EnvelopeRepresentation& env) {
  auto envelope = fft::irfft(env.envelope.values, env.envelope.source_length);
  std::vector<double> out(env.source_length);
  for (std::size_t i = 0; i < env.source_length; ++i) {
    out[i] = std::max(envelope[i], 0.0) * env.carrier[i];
  }
  return TimeSeries(std::move(out), env.envelope.sample_rate_hz);
}

std::vector<std::size_t> uniform_edges(std::size_t n, std::size_t cells) {
  std::vector<std::size_t> edges(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i) edges[i] = i * n / cells;
  return edges;
}

std::size_t nearest_index(const std::vector<double>& axis, double value) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < axis.size(); ++i) {
    if (std::abs(axis[i] - value) < std::abs(axis[best] - value)) best = i;
  }
  return best;
}

}  // namespace

std::size_t DomainRepresentation::grid_rows() const {
  switch (kind()) {
    case DomainKind::kTimeFrequency: return as<STFTGrid>().bins();
    case DomainKind::kCyclicSpectral: return as<CSRepresentation>().bins();
    default: return 1;
  }
}

std::size_t DomainRepresentation::grid_cols() const {
  switch (kind()) {
    case DomainKind::kTime: return as<TimeSeries>().size();
    case DomainKind::kFrequency: return as<Spectrum>().values.size();
    case DomainKind::kEnvelope: return as<EnvelopeRepresentation>().envelope.values.size();
    case DomainKind::kTimeFrequency: return as<STFTGrid>().frames();
    case DomainKind::kCyclicSpectral: return as<CSRepresentation>().cyclic_bins();
  }
  return 0;
}

std::vector<double> DomainRepresentation::row_axis() const {
  switch (kind()) {
    case DomainKind::kTimeFrequency: return as<STFTGrid>().freq_axis_hz;
    case DomainKind::kCyclicSpectral: return as<CSRepresentation>().freq_axis_hz;
    default: return {0.0};
  }
}

std::vector<double> DomainRepresentation::col_axis() const {
  switch (kind()) {
    case DomainKind::kTime: {
      const auto& ts = as<TimeSeries>();
      return time_axis(ts.size(), ts.sample_rate_hz());
    }
    case DomainKind::kFrequency: return as<Spectrum>().freq_axis_hz;
    case DomainKind::kEnvelope: return as<EnvelopeRepresentation>().envelope.freq_axis_hz;
    case DomainKind::kTimeFrequency: return as<STFTGrid>().frame_times_s;
    case DomainKind::kCyclicSpectral: return as<CSRepresentation>().cyclic_axis_hz;
  }
  return {};
}

DomainRepresentation domain_forward(DomainKind kind, const TimeSeries& x,
                                    const std::optional<WindowSpec>& w) {
  switch (kind) {
    case DomainKind::kTime: return DomainRepresentation(x);
    case DomainKind::kFrequency: return DomainRepresentation(spectrum(x));
    case DomainKind::kEnvelope: return DomainRepresentation(envelope_forward(x));
    case DomainKind::kTimeFrequency: {
      const auto& win = require_window(kind, w);
      win.require_cola();
      return DomainRepresentation(stft(x, win));
    }
    case DomainKind::kCyclicSpectral: return DomainRepresentation(cs_forward(x, require_window(kind, w)));
  }
  throw ConfigurationError("unhandled domain");
}

TimeSeries domain_inverse(const DomainRepresentation& rep, const std::optional<WindowSpec>& w) {
  switch (rep.kind()) {
    case DomainKind::kTime: return rep.as<TimeSeries>();
    case DomainKind::kFrequency: return inverse_spectrum(rep.as<Spectrum>());
    case DomainKind::kEnvelope: return envelope_inverse(rep.as<EnvelopeRepresentation>());
    case DomainKind::kTimeFrequency: return istft(rep.as<STFTGrid>(), require_window(rep.kind(), w));
    case DomainKind::kCyclicSpectral:
      return cs_inverse(rep.as<CSRepresentation>(), require_window(rep.kind(), w));
  }
  throw ConfigurationError("unhandled domain");
}

std::size_t CoalitionPartition::cell_containing(double row_value, double col_value) const {
  const std::size_t r = is_grid() ? nearest_index(row_axis, row_value) : 0;
  const std::size_t c = nearest_index(col_axis, col_value);
  return cell_at(r, c);
}

double CoalitionPartition::row_cell_center(std::size_t row_cell) const {
  return 0.5 * (row_axis[row_edges[row_cell]] + row_axis[row_edges[row_cell + 1] - 1]);
}

double CoalitionPartition::col_cell_center(std::size_t col_cell) const {
  return 0.5 * (col_axis[col_edges[col_cell]] + col_axis[col_edges[col_cell + 1] - 1]);
}

std::string CoalitionPartition::describe() const {
  std::ostringstream out;
  auto edges = [](const std::vector<std::size_t>& e) {
    std::string s = "[";
    for (std::size_t i = 0; i < e.size(); ++i) s += (i ? "," : "") + std::to_string(e[i]);
    return s + "]";
  };
  out << "{\"domain\":\"" << to_string(domain) << "\",\"grid_shape\":[" << grid_rows << ","
      << grid_cols << "],\"cell_shape\":[" << row_cells() << "," << col_cells() << "],"
      << "\"cell_count\":" << cell_count() << ",\"row_axis\":{\"name\":\"" << row_axis_name
      << "\",\"min\":" << io::format_double(row_axis.front())
      << ",\"max\":" << io::format_double(row_axis.back()) << "},\"col_axis\":{\"name\":\""
      << col_axis_name << "\",\"min\":" << io::format_double(col_axis.front())
      << ",\"max\":" << io::format_double(col_axis.back()) << "},\"row_edges\":" << edges(row_edges)
      << ",\"col_edges\":" << edges(col_edges) << "}";
  return out.str();
}

PartitionShape default_partition_shape(DomainKind kind) {
  switch (kind) {
    case DomainKind::kTime: return {1, 50};
    case DomainKind::kFrequency: return {1, 64};
    case DomainKind::kEnvelope: return {1, 64};
    case DomainKind::kTimeFrequency: return {16, 8};
    case DomainKind::kCyclicSpectral: return {16, 16};
  }
  return {1, 1};
}

CoalitionPartition make_partition(const DomainRepresentation& rep, PartitionShape shape,
                                  const std::optional<WindowSpec>& w) {
  const DomainKind kind = rep.kind();
  const std::size_t rows = rep.grid_rows();
  const std::size_t cols = rep.grid_cols();
  if (shape.row_cells == 0 || shape.col_cells == 0) throw ConfigurationError("partition: zero cells");
  if (shape.row_cells > rows || shape.col_cells > cols) {
    throw ConfigurationError("partition " + std::to_string(shape.row_cells) + "x" +
                             std::to_string(shape.col_cells) + " is finer than the " +
                             std::to_string(rows) + "x" + std::to_string(cols) + " grid");
  }
  if (shape.row_cells * shape.col_cells < 2) throw ConfigurationError("partition needs at least 2 cells");

  CoalitionPartition p;
  p.domain = kind;
  p.grid_rows = rows;
  p.grid_cols = cols;
  p.row_axis = rep.row_axis();
  p.col_axis = rep.col_axis();
  p.row_edges = uniform_edges(rows, shape.row_cells);
  p.col_edges = uniform_edges(cols, shape.col_cells);

  switch (kind) {
    case DomainKind::kTime: p.row_axis_name = "none"; p.col_axis_name = "time_s"; break;
    case DomainKind::kFrequency: p.row_axis_name = "none"; p.col_axis_name = "freq_hz"; break;
    case DomainKind::kEnvelope: {
      p.row_axis_name = "none";
      p.col_axis_name = "envelope_freq_hz";
      const double limit = rep.as<EnvelopeRepresentation>().envelope.sample_rate_hz /
                           (2.0 * require_window(kind, w).hop());
      const auto in_band = static_cast<std::size_t>(
          std::count_if(p.col_axis.begin(), p.col_axis.end(), [&](double f) { return f <= limit; }));
      // widened just enough for one bin per band when the band is coarse
      p.col_edges = uniform_edges(std::max(in_band, shape.col_cells), shape.col_cells);
      p.col_edges.back() = cols;
      break;
    }
    case DomainKind::kTimeFrequency: p.row_axis_name = "freq_hz"; p.col_axis_name = "time_s"; break;
    case DomainKind::kCyclicSpectral: p.row_axis_name = "freq_hz"; p.col_axis_name = "cyclic_freq_hz"; break;
  }

  p.cell_index.assign(rows * cols, 0);
  for (std::size_t rc = 0; rc < p.row_cells(); ++rc) {
    for (std::size_t r = p.row_edges[rc]; r < p.row_edges[rc + 1]; ++r) {
      for (std::size_t cc = 0; cc < p.col_cells(); ++cc) {
        for (std::size_t c = p.col_edges[cc]; c < p.col_edges[cc + 1]; ++c) {
          p.cell_index[r * cols + c] = static_cast<int>(rc * p.col_cells() + cc);
        }
      }
    }
  }
  return p;
}

BackgroundSet make_background(DomainKind kind, const std::vector<TimeSeries>& references,
                              const std::optional<WindowSpec>& w) {
  if (references.empty()) throw InvalidInputError("background set must not be empty");
  BackgroundSet bg{kind, {}};
  bg.representations.reserve(references.size());
  for (const auto& r : references) bg.representations.push_back(domain_forward(kind, r, w));
  return bg;
}

BackgroundSet zero_background(DomainKind kind, std::size_t length, double sample_rate_hz,
                              const std::optional<WindowSpec>& w) {
  return make_background(kind, {TimeSeries(std::vector<double>(length, 0.0), sample_rate_hz)}, w);
}

Masker::Masker(DomainRepresentation rep, CoalitionPartition partition, BackgroundSet background,
               std::optional<WindowSpec> w)
    : rep_(std::move(rep)),
      partition_(std::move(partition)),
      background_(std::move(background)),
      window_(std::move(w)) {
  if (partition_.domain != rep_.kind() || background_.domain != rep_.kind()) {
    throw InvalidInputError("masker: representation, partition and background domains differ");
  }
  if (partition_.grid_rows != rep_.grid_rows() || partition_.grid_cols != rep_.grid_cols()) {
    throw InvalidInputError("masker: partition shape does not match representation");
  }
  if (background_.size() == 0) throw InvalidInputError("masker: empty background");
  for (const auto& b : background_.representations) {
    if (b.kind() != rep_.kind() || b.grid_rows() != rep_.grid_rows() || b.grid_cols() != rep_.grid_cols()) {
      throw InvalidInputError("masker: background entry shape does not match representation");
    }
  }
  if (domain_needs_window(rep_.kind())) require_window(rep_.kind(), window_);
}

DomainRepresentation Masker::hybrid(const Coalition& keep, std::size_t bg_index) const {
  if (keep.players() != partition_.cell_count()) {
    throw InvalidInputError("coalition size " + std::to_string(keep.players()) +
                            " does not match cell count " + std::to_string(partition_.cell_count()));
  }
  if (bg_index >= background_.size()) throw InvalidInputError("background index out of range");
  const auto& bg = background_.representations[bg_index];
  const std::size_t cols = partition_.grid_cols;
  auto kept = [&](std::size_t r, std::size_t c) { return keep.test(partition_.cell_at(r, c)); };

  switch (rep_.kind()) {
    case DomainKind::kTime: {
      const auto x = rep_.as<TimeSeries>().samples();
      const auto b = bg.as<TimeSeries>().samples();
      std::vector<double> out(x.size());
      for (std::size_t c = 0; c < cols; ++c) out[c] = kept(0, c) ? x[c] : b[c];
      return DomainRepresentation(TimeSeries(std::move(out), rep_.as<TimeSeries>().sample_rate_hz()));
    }
    case DomainKind::kFrequency: {
      Spectrum s = rep_.as<Spectrum>();
      const auto& b = bg.as<Spectrum>();
      for (std::size_t c = 0; c < cols; ++c) {
        if (!kept(0, c)) s.values[c] = b.values[c];
      }
      return DomainRepresentation(std::move(s));
    }
    case DomainKind::kEnvelope: {
      EnvelopeRepresentation e = rep_.as<EnvelopeRepresentation>();
      const auto& b = bg.as<EnvelopeRepresentation>();
      for (std::size_t c = 0; c < cols; ++c) {
        if (!kept(0, c)) e.envelope.values[c] = b.envelope.values[c];
      }
      return DomainRepresentation(std::move(e));
    }
    case DomainKind::kTimeFrequency: {
      STFTGrid g = rep_.as<STFTGrid>();
      const auto& b = bg.as<STFTGrid>();
      for (std::size_t r = 0; r < partition_.grid_rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
          if (kept(r, c)) continue;
          const Complex s = g.values(r, c);
          const double phase = s == Complex(0.0, 0.0) ? 0.0 : std::arg(s);
          g.values(r, c) = std::polar(std::abs(b.values(r, c)), phase);
        }
      }
      return DomainRepresentation(std::move(g));
    }
    case DomainKind::kCyclicSpectral: {
      CSRepresentation cs = rep_.as<CSRepresentation>();
      const auto& b = bg.as<CSRepresentation>();
      for (std::size_t r = 0; r < partition_.grid_rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) {
          if (!kept(r, c)) cs.cs(r, c) = b.cs(r, c);
        }
      }
      return DomainRepresentation(std::move(cs));
    }
  }
  throw ConfigurationError("unhandled domain");
}

TimeSeries Masker::reconstruct(const Coalition& keep, std::size_t bg_index) const {
  return domain_inverse(hybrid(keep, bg_index), window_);
}

TimeSeries mask_and_invert(const DomainRepresentation& rep, const CoalitionPartition& partition,
                           const Coalition& keep, const BackgroundSet& background,
                           std::size_t bg_index, const std::optional<WindowSpec>& w) {
  return Masker(rep, partition, background, w).reconstruct(keep, bg_index);
}

}  // namespace csshap
