#pragma once

#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "dicke/hilbert.hpp"

namespace dicke {

// First line of every CSV file; bump when columns change meaning.
inline constexpr const char* kCsvSchema = "dicke-csv/1";

/// Column-oriented numeric table with '#' metadata lines.
struct Table {
  std::vector<std::pair<std::string, std::string>> metadata;
  std::vector<std::string> columns;
  std::vector<std::vector<Real>> data;  // data[column][row]

  void add_column(const std::string& name, std::vector<Real> values);
  const std::vector<Real>& column(const std::string& name) const;
  std::size_t rows() const { return data.empty() ? 0 : data.front().size(); }
};

/// 17 significant digits, so values survive a text round trip.
std::string format_csv_real(Real x);

void write_csv(std::ostream& os, const Table& table);
void write_csv(const std::string& path, const Table& table);
Table read_csv(std::istream& is);
Table read_csv_file(const std::string& path);

struct PlotSpec {
  std::string title;
  std::string x_column;
  std::vector<std::string> y_columns;
  std::string x_label;
  std::string y_label;
};

/// Static line chart, one polyline per y column, with axes and a legend.
std::string render_svg(const Table& table, const PlotSpec& plot);
void write_svg(const std::string& path, const Table& table, const PlotSpec& plot);

}  // namespace dicke
