#ifndef OFDMTR_CSV_HPP
#define OFDMTR_CSV_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "ofdmtr/radar.hpp"
#include "ofdmtr/tone_reservation.hpp"
#include "ofdmtr/waveform.hpp"

namespace ofdmtr {

/// Shortest decimal string that parses back to exactly the same double.
std::string format_double(double value);
double parse_double(std::string_view text);

using Cell = std::variant<std::int64_t, std::uint64_t, double, std::string>;

/// Column-typed table written as CSV plus a JSON mirror (same stem, .json)
/// carrying the identical columns/rows and optional metadata.
class Table {
 public:
  explicit Table(std::vector<std::string> columns);

  void add_row(std::vector<Cell> row);
  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<Cell>>& rows() const { return rows_; }

  /// Writes <path> and <path with .json extension>.
  void write(const std::filesystem::path& csv_path) const;
  void set_meta(std::string key, std::string value);
  void set_meta(std::string key, std::uint64_t value);

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
  std::vector<std::pair<std::string, std::variant<std::string, std::uint64_t>>> meta_;
};

/// Raw CSV contents: header plus rows of unparsed fields.
struct CsvData {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

CsvData read_csv(const std::filesystem::path& path);

// Schema writers/readers. Doubles round-trip bit-exactly for finite values.
void write_signal_csv(const std::filesystem::path& path,
                      const BasebandSignal& signal);  // index,re,im,abs
BasebandSignal read_signal_csv(const std::filesystem::path& path,
                               const WaveformParams& params);

void write_symbols_csv(const std::filesystem::path& path,
                       const SymbolMatrix& symbols);  // carrier,bit,re,im
SymbolMatrix read_symbols_csv(const std::filesystem::path& path);

// iter,cost,beta,pmepr,cve,sqrt_pmepr_upper_bound
void write_trace_csv(const std::filesystem::path& path,
                     const SolverTrace& trace);

// delay_samples,doppler_cycles_per_pulse,magnitude
void write_af_csv(const std::filesystem::path& path, const AmbiguityGrid& grid);

/// Dense binary grid: uint32 n_delays, uint32 n_dopplers, then row-major
/// float64 magnitudes (native byte order).
void write_af_binary(const std::filesystem::path& path,
                     const AmbiguityGrid& grid);
struct BinaryGrid {
  std::uint32_t n_delays = 0;
  std::uint32_t n_dopplers = 0;
  std::vector<double> magnitudes;
};
BinaryGrid read_af_binary(const std::filesystem::path& path);

// snr_db,pd_mc,pd_analytic
void write_pd_csv(const std::filesystem::path& path,
                  const DetectionCurves& curves);

}  // namespace ofdmtr

#endif
