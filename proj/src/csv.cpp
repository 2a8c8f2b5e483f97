#include "ofdmtr/csv.hpp"

#include <charconv>
#include <cmath>
#include <cstring>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace ofdmtr {

std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

double parse_double(std::string_view text) {
  double value = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), value);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    throw ConfigError("invalid numeric field: '" + std::string(text) + "'");
  }
  return value;
}

namespace {

std::string cell_to_string(const Cell& cell) {
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return std::to_string(*i);
  if (const auto* u = std::get_if<std::uint64_t>(&cell)) return std::to_string(*u);
  if (const auto* d = std::get_if<double>(&cell)) return format_double(*d);
  return std::get<std::string>(cell);
}

nlohmann::json cell_to_json(const Cell& cell) {
  if (const auto* i = std::get_if<std::int64_t>(&cell)) return *i;
  if (const auto* u = std::get_if<std::uint64_t>(&cell)) return *u;
  if (const auto* d = std::get_if<double>(&cell)) {
    if (std::isfinite(*d)) return *d;
    return format_double(*d);  // JSON has no nan/inf literals
  }
  return std::get<std::string>(cell);
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ConfigError("cannot open for writing: " + path.string());
  }
  out << contents;
}

}  // namespace

Table::Table(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void Table::add_row(std::vector<Cell> row) {
  if (row.size() != columns_.size()) {
    throw DimensionError("Table: row width does not match column count");
  }
  rows_.push_back(std::move(row));
}

void Table::set_meta(std::string key, std::string value) {
  meta_.emplace_back(std::move(key), std::move(value));
}

void Table::set_meta(std::string key, std::uint64_t value) {
  meta_.emplace_back(std::move(key), value);
}

void Table::write(const std::filesystem::path& csv_path) const {
  std::string csv;
  for (std::size_t c = 0; c < columns_.size(); ++c) {
    if (c) csv += ',';
    csv += columns_[c];
  }
  csv += '\n';
  for (const auto& row : rows_) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) csv += ',';
      csv += cell_to_string(row[c]);
    }
    csv += '\n';
  }
  write_file(csv_path, csv);

  nlohmann::json j;
  j["columns"] = columns_;
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& row : rows_) {
    nlohmann::json jr = nlohmann::json::array();
    for (const auto& cell : row) jr.push_back(cell_to_json(cell));
    rows.push_back(std::move(jr));
  }
  j["rows"] = std::move(rows);
  if (!meta_.empty()) {
    nlohmann::json meta;
    for (const auto& [k, v] : meta_) {
      if (const auto* s = std::get_if<std::string>(&v)) {
        meta[k] = *s;
      } else {
        meta[k] = std::get<std::uint64_t>(v);
      }
    }
    j["meta"] = std::move(meta);
  }
  std::filesystem::path json_path = csv_path;
  json_path.replace_extension(".json");
  write_file(json_path, j.dump(2) + "\n");
}

CsvData read_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open for reading: " + path.string());
  }
  CsvData data;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::size_t start = 0;
    for (;;) {
      const std::size_t comma = line.find(',', start);
      if (comma == std::string::npos) {
        fields.push_back(line.substr(start));
        break;
      }
      fields.push_back(line.substr(start, comma - start));
      start = comma + 1;
    }
    if (header) {
      data.columns = std::move(fields);
      header = false;
    } else {
      data.rows.push_back(std::move(fields));
    }
  }
  return data;
}

void write_signal_csv(const std::filesystem::path& path,
                      const BasebandSignal& signal) {
  Table table({"index", "re", "im", "abs"});
  const CplxVec& x = signal.samples();
  for (std::size_t l = 0; l < x.size(); ++l) {
    table.add_row({std::uint64_t(l), x[l].real(), x[l].imag(), std::abs(x[l])});
  }
  table.write(path);
}

BasebandSignal read_signal_csv(const std::filesystem::path& path,
                               const WaveformParams& params) {
  const CsvData data = read_csv(path);
  if (data.columns != std::vector<std::string>{"index", "re", "im", "abs"}) {
    throw ConfigError("unexpected signal CSV header in " + path.string());
  }
  CplxVec samples(data.rows.size());
  for (const auto& row : data.rows) {
    const std::size_t idx = std::size_t(parse_double(row.at(0)));
    if (idx >= samples.size()) {
      throw ConfigError("signal CSV index out of range in " + path.string());
    }
    samples[idx] = Cplx(parse_double(row.at(1)), parse_double(row.at(2)));
  }
  return BasebandSignal(params, std::move(samples));
}

void write_symbols_csv(const std::filesystem::path& path,
                       const SymbolMatrix& symbols) {
  Table table({"carrier", "bit", "re", "im"});
  for (std::size_t n = 0; n < symbols.n_carriers(); ++n) {
    for (std::size_t m = 0; m < symbols.n_bits(); ++m) {
      const Cplx a = symbols.at(n, m);
      table.add_row({std::uint64_t(n), std::uint64_t(m), a.real(), a.imag()});
    }
  }
  table.write(path);
}

SymbolMatrix read_symbols_csv(const std::filesystem::path& path) {
  const CsvData data = read_csv(path);
  if (data.columns != std::vector<std::string>{"carrier", "bit", "re", "im"}) {
    throw ConfigError("unexpected symbols CSV header in " + path.string());
  }
  std::size_t n_carriers = 0, n_bits = 0;
  for (const auto& row : data.rows) {
    n_carriers = std::max(n_carriers, std::size_t(parse_double(row.at(0))) + 1);
    n_bits = std::max(n_bits, std::size_t(parse_double(row.at(1))) + 1);
  }
  SymbolMatrix symbols(n_carriers, n_bits);
  for (const auto& row : data.rows) {
    symbols.at(std::size_t(parse_double(row.at(0))),
               std::size_t(parse_double(row.at(1)))) =
        Cplx(parse_double(row.at(2)), parse_double(row.at(3)));
  }
  return symbols;
}

void write_trace_csv(const std::filesystem::path& path,
                     const SolverTrace& trace) {
  Table table({"iter", "cost", "beta", "pmepr", "cve", "sqrt_pmepr_upper_bound"});
  for (const TraceRecord& rec : trace.records) {
    table.add_row({std::uint64_t(rec.iter), rec.cost, rec.beta, rec.pmepr,
                   rec.cve, rec.sqrt_pmepr_upper_bound});
  }
  table.set_meta("iterations_run", std::uint64_t(trace.iterations_run));
  table.set_meta("degenerate", std::string(trace.degenerate ? "true" : "false"));
  table.write(path);
}

void write_af_csv(const std::filesystem::path& path, const AmbiguityGrid& grid) {
  Table table({"delay_samples", "doppler_cycles_per_pulse", "magnitude"});
  for (std::size_t i = 0; i < grid.delays.size(); ++i) {
    for (std::size_t j = 0; j < grid.dopplers.size(); ++j) {
      table.add_row({std::int64_t(grid.delays[i]), grid.dopplers[j], grid.at(i, j)});
    }
  }
  table.write(path);
}

void write_af_binary(const std::filesystem::path& path,
                     const AmbiguityGrid& grid) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    throw ConfigError("cannot open for writing: " + path.string());
  }
  const std::uint32_t dims[2] = {std::uint32_t(grid.delays.size()),
                                 std::uint32_t(grid.dopplers.size())};
  out.write(reinterpret_cast<const char*>(dims), sizeof(dims));
  out.write(reinterpret_cast<const char*>(grid.magnitudes.data()),
            std::streamsize(grid.magnitudes.size() * sizeof(double)));
}

BinaryGrid read_af_binary(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open for reading: " + path.string());
  }
  BinaryGrid grid;
  std::uint32_t dims[2] = {0, 0};
  in.read(reinterpret_cast<char*>(dims), sizeof(dims));
  grid.n_delays = dims[0];
  grid.n_dopplers = dims[1];
  grid.magnitudes.resize(std::size_t(dims[0]) * dims[1]);
  in.read(reinterpret_cast<char*>(grid.magnitudes.data()),
          std::streamsize(grid.magnitudes.size() * sizeof(double)));
  if (!in) {
    throw ConfigError("truncated binary grid: " + path.string());
  }
  return grid;
}

void write_pd_csv(const std::filesystem::path& path,
                  const DetectionCurves& curves) {
  Table table({"snr_db", "pd_mc", "pd_analytic"});
  for (std::size_t i = 0; i < curves.snr_db.size(); ++i) {
    table.add_row({curves.snr_db[i], curves.pd_mc[i], curves.pd_analytic[i]});
  }
  table.write(path);
}

}  // namespace ofdmtr
