#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "csshap/coalition.hpp"
#include "csshap/cs_transform.hpp"
#include "csshap/signal.hpp"

namespace csshap {

enum class DomainKind { kTime, kFrequency, kEnvelope, kTimeFrequency, kCyclicSpectral };

inline constexpr DomainKind kAllDomains[] = {DomainKind::kTime, DomainKind::kFrequency,
                                             DomainKind::kEnvelope, DomainKind::kTimeFrequency,
                                             DomainKind::kCyclicSpectral};

std::string to_string(DomainKind kind);
DomainKind domain_from_string(const std::string& name);
bool domain_needs_window(DomainKind kind);

// Envelope-domain representation: spectrum of |analytic(x)| plus the carrier
// residual x / |analytic(x)| (zero where the envelope vanishes). Both live on
// the even-padded length.
struct EnvelopeRepresentation {
  Spectrum envelope;
  std::vector<double> carrier;
  std::size_t source_length;
};

class DomainRepresentation {
 public:
  using Storage = std::variant<TimeSeries, Spectrum, EnvelopeRepresentation, STFTGrid, CSRepresentation>;

  explicit DomainRepresentation(Storage storage) : storage_(std::move(storage)) {}

  DomainKind kind() const { return static_cast<DomainKind>(storage_.index()); }

  // Shape of the maskable coordinate grid. Vector domains have one row.
  std::size_t grid_rows() const;
  std::size_t grid_cols() const;

  // Axis values of the grid coordinates (Hz or seconds).
  std::vector<double> row_axis() const;
  std::vector<double> col_axis() const;

  const Storage& storage() const { return storage_; }
  template <typename T>
  const T& as() const { return std::get<T>(storage_); }

 private:
  Storage storage_;
};

DomainRepresentation domain_forward(DomainKind kind, const TimeSeries& x,
                                    const std::optional<WindowSpec>& w);

// Exact inverse for every domain except envelope, where it recombines the
// stored envelope with the carrier residual.
TimeSeries domain_inverse(const DomainRepresentation& rep, const std::optional<WindowSpec>& w);

// Partition of the representation grid into axis-aligned rectangular cells.
// cell = row_cell * col_cells + col_cell.
struct CoalitionPartition {
  DomainKind domain;
  std::size_t grid_rows;
  std::size_t grid_cols;
  std::vector<std::size_t> row_edges;  // row_cells + 1 entries, strictly increasing
  std::vector<std::size_t> col_edges;
  std::vector<double> row_axis;
  std::vector<double> col_axis;
  std::string row_axis_name;
  std::string col_axis_name;
  std::vector<int> cell_index;  // grid_rows * grid_cols, row-major

  std::size_t row_cells() const { return row_edges.size() - 1; }
  std::size_t col_cells() const { return col_edges.size() - 1; }
  std::size_t cell_count() const { return row_cells() * col_cells(); }
  bool is_grid() const { return grid_rows > 1; }

  std::size_t cell_at(std::size_t row, std::size_t col) const { return static_cast<std::size_t>(cell_index[row * grid_cols + col]); }
  // Cell containing the coordinate nearest to the given axis values.
  std::size_t cell_containing(double row_value, double col_value) const;
  double row_cell_center(std::size_t row_cell) const;
  double col_cell_center(std::size_t col_cell) const;

  // Structured description (JSON text) embedded in reports.
  std::string describe() const;
};

struct PartitionShape {
  std::size_t row_cells;
  std::size_t col_cells;
};

// Defaults: time 50 segments, frequency 64 bands, envelope 64 bands over
// [0, fs/(2 hop)] (bins above fold into the last band; the band widens to
// one bin per cell when it holds fewer bins), time-frequency 16x8,
// cyclic-spectral 16x16.
PartitionShape default_partition_shape(DomainKind kind);

CoalitionPartition make_partition(const DomainRepresentation& rep, PartitionShape shape,
                                  const std::optional<WindowSpec>& w);

// Reference representations used to fill masked cells.
struct BackgroundSet {
  DomainKind domain;
  std::vector<DomainRepresentation> representations;

  std::size_t size() const { return representations.size(); }
};

BackgroundSet make_background(DomainKind kind, const std::vector<TimeSeries>& references,
                              const std::optional<WindowSpec>& w);
BackgroundSet zero_background(DomainKind kind, std::size_t length, double sample_rate_hz,
                              const std::optional<WindowSpec>& w);

// Reusable masking context for one explained sample. Kept cells come from the
// sample, masked cells from a background entry; the time-frequency and
// cyclic-spectral domains keep the sample's STFT phase throughout.
class Masker {
 public:
  Masker(DomainRepresentation rep, CoalitionPartition partition, BackgroundSet background,
         std::optional<WindowSpec> w);

  const DomainRepresentation& representation() const { return rep_; }
  const CoalitionPartition& partition() const { return partition_; }
  const BackgroundSet& background() const { return background_; }
  std::size_t cell_count() const { return partition_.cell_count(); }
  std::size_t background_size() const { return background_.size(); }

  DomainRepresentation hybrid(const Coalition& keep, std::size_t bg_index) const;
  TimeSeries reconstruct(const Coalition& keep, std::size_t bg_index) const;

 private:
  DomainRepresentation rep_;
  CoalitionPartition partition_;
  BackgroundSet background_;
  std::optional<WindowSpec> window_;
};

TimeSeries mask_and_invert(const DomainRepresentation& rep, const CoalitionPartition& partition,
                           const Coalition& keep, const BackgroundSet& background,
                           std::size_t bg_index, const std::optional<WindowSpec>& w);

}  // namespace csshap
