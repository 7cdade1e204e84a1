#include "csshap/ingest.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "csshap/error.hpp"
#include "csshap/io.hpp"
#include "csshap/json_util.hpp"

namespace csshap {

IngestFormat ingest_format_from_string(const std::string& name) {
  if (name == "csv") return IngestFormat::kCsv;
  if (name == "raw_f32") return IngestFormat::kRawF32;
  throw ConfigurationError("unknown ingest format '" + name + "' (expected csv or raw_f32)");
}

namespace {

std::vector<double> read_csv_column(const std::filesystem::path& path, std::size_t column, bool has_header) {
  std::istringstream in(io::read_text(path));
  std::vector<double> out;
  std::string line;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    ++row;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (row == 1 && has_header) continue;
    if (io::trim(line).empty()) continue;
    const auto cells = io::split(line, ',');
    if (column >= cells.size()) {
      throw FormatError(path.string() + ": row " + std::to_string(row) + " has no column " + std::to_string(column));
    }
    const std::string cell = io::trim(cells[column]);
    double v = 0.0;
    std::size_t used = 0;
    try {
      v = std::stod(cell, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (cell.empty() || used != cell.size() || !std::isfinite(v)) {
      throw FormatError(path.string() + ": row " + std::to_string(row) + ": non-numeric cell '" + cell + "'");
    }
    out.push_back(v);
  }
  return out;
}

}  // namespace

std::vector<double> read_recording(const IngestSource& source, const IngestOptions& options) {
  std::vector<double> values = options.format == IngestFormat::kCsv
                                   ? read_csv_column(source.path, options.column, options.has_header)
                                   : io::read_f32(source.path);
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!std::isfinite(values[i])) {
      throw FormatError(source.path.string() + ": non-finite value at sample " + std::to_string(i));
    }
  }
  return values;
}

std::vector<std::vector<double>> segment_recording(const std::vector<double>& recording, std::size_t segment_length) {
  if (segment_length == 0) throw ConfigurationError("segment_length must be positive");
  if (recording.size() < segment_length) {
    throw InvalidInputError("recording has " + std::to_string(recording.size()) +
                            " samples, shorter than one segment of " + std::to_string(segment_length));
  }
  std::vector<std::vector<double>> out;
  for (std::size_t start = 0; start + segment_length <= recording.size(); start += segment_length) {
    out.emplace_back(recording.begin() + static_cast<std::ptrdiff_t>(start),
                     recording.begin() + static_cast<std::ptrdiff_t>(start + segment_length));
  }
  return out;
}

IngestSource parse_ingest_source(const std::string& spec) {
  const auto eq = spec.rfind('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == spec.size()) {
    throw ConfigurationError("ingest source must look like path=label, got '" + spec + "'");
  }
  return {io::trim(spec.substr(0, eq)), io::trim(spec.substr(eq + 1))};
}

std::vector<IngestSource> read_label_map(const std::filesystem::path& path) {
  std::istringstream in(io::read_text(path));
  std::vector<IngestSource> out;
  std::string line;
  while (std::getline(in, line)) {
    const std::string t = io::trim(line);
    if (t.empty() || t[0] == '#') continue;
    IngestSource s = parse_ingest_source(t);
    if (s.path.is_relative()) s.path = path.parent_path() / s.path;
    out.push_back(std::move(s));
  }
  if (out.empty()) throw ConfigurationError(path.string() + ": label map is empty");
  return out;
}

Dataset ingest(const std::vector<IngestSource>& sources, const IngestOptions& options) {
  if (sources.empty()) throw ConfigurationError("ingest needs at least one source");
  if (!(options.sample_rate_hz > 0.0)) throw ConfigurationError("sample_rate_hz must be positive");
  if (!(options.train_fraction > 0.0 && options.train_fraction < 1.0)) {
    throw ConfigurationError("train_fraction must lie in (0, 1)");
  }
  Dataset ds;
  ds.sample_rate_hz = options.sample_rate_hz;
  ds.sample_length = options.segment_length;
  Json source_echo = Json::array();
  for (const auto& src : sources) {
    auto it = std::find(ds.class_names.begin(), ds.class_names.end(), src.label);
    if (it == ds.class_names.end()) {
      ds.class_names.push_back(src.label);
      it = ds.class_names.end() - 1;
    }
    const int label = static_cast<int>(it - ds.class_names.begin());
    const auto segments = segment_recording(read_recording(src, options), options.segment_length);
    for (const auto& seg : segments) {
      TimeSeries ts(seg, options.sample_rate_hz);
      ds.samples.push_back(options.normalize ? normalize_meanstd(ts) : ts);
      ds.labels.push_back(label);
      ds.seeds.push_back(0);
    }
    source_echo.push_back({{"path", src.path.string()}, {"label", src.label}, {"segments", segments.size()}});
  }
  ds.is_train = stratified_split(ds.labels, ds.class_names.size(), options.train_fraction, options.seed);
  Json echo{{"ingest",
             {{"format", options.format == IngestFormat::kCsv ? "csv" : "raw_f32"},
              {"segment_length", options.segment_length},
              {"sample_rate_hz", options.sample_rate_hz},
              {"column", options.column},
              {"has_header", options.has_header},
              {"train_fraction", options.train_fraction},
              {"seed", options.seed},
              {"normalize", options.normalize},
              {"sources", source_echo}}}};
  ds.source_json = echo.dump();
  return ds;
}

}  // namespace csshap
