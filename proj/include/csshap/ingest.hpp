#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "csshap/simulation.hpp"

namespace csshap {

enum class IngestFormat { kCsv, kRawF32 };
IngestFormat ingest_format_from_string(const std::string& name);

struct IngestSource {
  std::filesystem::path path;
  std::string label;
};

struct IngestOptions {
  IngestFormat format = IngestFormat::kCsv;
  std::size_t segment_length = 2000;
  double sample_rate_hz = 12000.0;
  std::size_t column = 0;    // csv: column holding the samples
  bool has_header = false;   // csv: skip the first row
  double train_fraction = 0.7;
  std::uint64_t seed = 0;
  bool normalize = true;     // mean-std normalise each segment
};

// One recording per call. CSV cells must parse as finite numbers; a bad cell
// raises FormatError naming its 1-based row.
std::vector<double> read_recording(const IngestSource& source, const IngestOptions& options);

// Non-overlapping segments; the tail shorter than segment_length is dropped.
std::vector<std::vector<double>> segment_recording(const std::vector<double>& recording, std::size_t segment_length);

// Parses "path=label" lines (or CLI arguments).
IngestSource parse_ingest_source(const std::string& spec);
std::vector<IngestSource> read_label_map(const std::filesystem::path& path);

// Labels are numbered in order of first appearance.
Dataset ingest(const std::vector<IngestSource>& sources, const IngestOptions& options);

}  // namespace csshap
