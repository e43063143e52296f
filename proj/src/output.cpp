#include "dicke/output.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace dicke {

void Table::add_column(const std::string& name, std::vector<Real> values) {
  require(data.empty() || values.size() == rows(), ErrorKind::Domain,
          "column '" + name + "' has a different length from the table");
  require(std::find(columns.begin(), columns.end(), name) == columns.end(), ErrorKind::Domain,
          "duplicate column '" + name + "'");
  columns.push_back(name);
  data.push_back(std::move(values));
}

const std::vector<Real>& Table::column(const std::string& name) const {
  const auto it = std::find(columns.begin(), columns.end(), name);
  require(it != columns.end(), ErrorKind::Domain, "no column named '" + name + "'");
  return data[static_cast<std::size_t>(it - columns.begin())];
}

std::string format_csv_real(Real x) {
  std::array<char, 40> buf{};
  std::snprintf(buf.data(), buf.size(), "%.17g", x);
  return buf.data();
}

void write_csv(std::ostream& os, const Table& table) {
  os << "# schema = " << kCsvSchema << '\n';
  for (const auto& [key, value] : table.metadata) os << "# " << key << " = " << value << '\n';
  for (std::size_t c = 0; c < table.columns.size(); ++c) os << (c ? "," : "") << table.columns[c];
  os << '\n';
  for (std::size_t r = 0; r < table.rows(); ++r) {
    for (std::size_t c = 0; c < table.columns.size(); ++c)
      os << (c ? "," : "") << format_csv_real(table.data[c][r]);
    os << '\n';
  }
}

void write_csv(const std::string& path, const Table& table) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::Configuration, "cannot write '" + path + "'");
  write_csv(out, table);
  require(out.good(), ErrorKind::Configuration, "write to '" + path + "' failed");
}

Table read_csv(std::istream& is) {
  Table t;
  std::string line;
  bool have_header = false;
  bool have_schema = false;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find(" = ");
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2);
      const std::string value = line.substr(eq + 3);
      if (key == "schema") {
        require(value == kCsvSchema, ErrorKind::Configuration, "unsupported CSV schema '" + value + "'");
        have_schema = true;
      } else {
        t.metadata.emplace_back(key, value);
      }
      continue;
    }
    std::stringstream ss(line);
    std::string cell;
    if (!have_header) {
      while (std::getline(ss, cell, ',')) {
        t.columns.push_back(cell);
        t.data.emplace_back();
      }
      have_header = true;
      continue;
    }
    std::size_t c = 0;
    while (std::getline(ss, cell, ',')) {
      require(c < t.columns.size(), ErrorKind::Configuration, "CSV row has more cells than columns");
      t.data[c++].push_back(std::stod(cell));
    }
    require(c == t.columns.size(), ErrorKind::Configuration, "CSV row has fewer cells than columns");
  }
  require(have_schema && have_header, ErrorKind::Configuration, "CSV lacks a schema line or header row");
  return t;
}

Table read_csv_file(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::Configuration, "cannot open '" + path + "'");
  return read_csv(in);
}

namespace {

constexpr std::array<const char*, 8> kPalette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                                 "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string tick(Real x) {
  std::ostringstream os;
  os.precision(4);
  os << x;
  return os.str();
}

}  // namespace

std::string render_svg(const Table& table, const PlotSpec& plot) {
  require(!plot.y_columns.empty(), ErrorKind::Configuration, "plot needs at least one y column");
  const auto& x = table.column(plot.x_column);
  require(x.size() >= 2, ErrorKind::Domain, "plot needs at least two samples");

  Real x0 = *std::min_element(x.begin(), x.end());
  Real x1 = *std::max_element(x.begin(), x.end());
  Real y0 = 1e300, y1 = -1e300;
  for (const auto& name : plot.y_columns) {
    const auto& y = table.column(name);
    y0 = std::min(y0, *std::min_element(y.begin(), y.end()));
    y1 = std::max(y1, *std::max_element(y.begin(), y.end()));
  }
  if (x1 == x0) x1 = x0 + 1.0;
  if (y1 - y0 < 1e-12) {
    y0 -= 0.5;
    y1 += 0.5;
  }

  constexpr Real W = 720, H = 440, L = 70, R = 160, T = 40, B = 55;
  const Real pw = W - L - R, ph = H - T - B;
  auto sx = [&](Real v) { return L + pw * (v - x0) / (x1 - x0); };
  auto sy = [&](Real v) { return T + ph * (1.0 - (v - y0) / (y1 - y0)); };

  std::ostringstream os;
  os.precision(6);
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
     << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
     << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">" << escape(plot.title)
     << "</text>\n"
     << "<rect x=\"" << L << "\" y=\"" << T << "\" width=\"" << pw << "\" height=\"" << ph
     << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 4; ++i) {
    const Real xv = x0 + (x1 - x0) * i / 4.0, yv = y0 + (y1 - y0) * i / 4.0;
    os << "<text x=\"" << sx(xv) << "\" y=\"" << T + ph + 16 << "\" text-anchor=\"middle\">" << tick(xv)
       << "</text>\n"
       << "<text x=\"" << L - 6 << "\" y=\"" << sy(yv) + 4 << "\" text-anchor=\"end\">" << tick(yv)
       << "</text>\n";
  }
  os << "<text x=\"" << L + pw / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">"
     << escape(plot.x_label.empty() ? plot.x_column : plot.x_label) << "</text>\n"
     << "<text transform=\"translate(16," << T + ph / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << escape(plot.y_label) << "</text>\n";

  for (std::size_t k = 0; k < plot.y_columns.size(); ++k) {
    const auto& y = table.column(plot.y_columns[k]);
    const char* colour = kPalette[k % kPalette.size()];
    os << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.2\" points=\"";
    for (std::size_t i = 0; i < x.size(); ++i) os << sx(x[i]) << ',' << sy(y[i]) << ' ';
    os << "\"/>\n";
    const Real ly = T + 14 + 18 * static_cast<Real>(k);
    os << "<line x1=\"" << W - R + 10 << "\" y1=\"" << ly << "\" x2=\"" << W - R + 34 << "\" y2=\"" << ly
       << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n"
       << "<text x=\"" << W - R + 40 << "\" y=\"" << ly + 4 << "\">" << escape(plot.y_columns[k])
       << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

void write_svg(const std::string& path, const Table& table, const PlotSpec& plot) {
  std::ofstream out(path);
  require(out.good(), ErrorKind::Configuration, "cannot write '" + path + "'");
  out << render_svg(table, plot);
}

}  // namespace dicke
