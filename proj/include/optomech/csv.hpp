#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "optomech/errors.hpp"
#include "optomech/spectrum.hpp"

namespace optomech {

namespace detail {

inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12e", x);
  return buf;
}

inline double parse_double(const std::string& field, const std::string& context) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(field, &pos);
  } catch (const std::exception&) {
    throw IoError("expected a number in " + context + ", got '" + field + "'");
  }
  while (pos < field.size() && (field[pos] == ' ' || field[pos] == '\r')) ++pos;
  if (pos != field.size())
    throw IoError("trailing junk after number in " + context + ": '" + field + "'");
  return x;
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace detail

// Spectrum file format: a '#' header carrying the unit tag, a column header,
// then one "frequency_hz,value" row per grid point.
inline void save_spectrum_csv(const NoiseSpectrum& s, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open '" + path + "' for writing");
  out << "# unit=" << to_string(s.unit()) << " sidedness=one\n";
  out << "frequency_hz,value\n";
  for (std::size_t i = 0; i < s.size(); ++i)
    out << detail::format_double(s.frequencies()[i]) << ','
        << detail::format_double(s.values()[i]) << '\n';
  if (!out) throw IoError("write failure on '" + path + "'");
}

inline NoiseSpectrum load_spectrum_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open spectrum file '" + path + "'");
  std::string line;
  bool have_unit = false;
  SpectrumUnit unit;
  std::vector<double> f, v;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      std::istringstream meta(line.substr(1));
      std::string token;
      while (meta >> token) {
        if (token.rfind("unit=", 0) == 0) {
          unit = unit_from_string(token.substr(5));
          have_unit = true;
        } else if (token.rfind("sidedness=", 0) == 0 && token != "sidedness=one") {
          throw IoError(path + ": only one-sided spectra are supported");
        }
      }
      continue;
    }
    if (line == "frequency_hz,value") continue;
    auto fields = detail::split_csv_line(line);
    if (fields.size() != 2)
      throw IoError(path + ": expected two columns at line " + std::to_string(line_no));
    std::string where = path + " line " + std::to_string(line_no);
    f.push_back(detail::parse_double(fields[0], where));
    v.push_back(detail::parse_double(fields[1], where));
  }
  if (!have_unit) throw IoError(path + ": missing '# unit=...' header");
  if (f.size() < 2) throw IoError(path + ": fewer than two data rows");
  return NoiseSpectrum(std::move(f), std::move(v), unit);
}

}  // namespace optomech
