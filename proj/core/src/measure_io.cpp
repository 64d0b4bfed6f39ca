#include "entmap/measure_io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <vector>

namespace entmap {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_measure_csv(const DiscreteMeasure& m, std::ostream& out) {
  out << 'w';
  for (Index c = 0; c < m.dim(); ++c) out << ",x" << (c + 1);
  out << '\n';
  for (Index j = 0; j < m.size(); ++j) {
    out << format_double(m.weight(j));
    for (Index c = 0; c < m.dim(); ++c) out << ',' << format_double(m.atoms().points()(j, c));
    out << '\n';
  }
}

void write_measure_csv(const DiscreteMeasure& m, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_measure_csv(m, out);
}

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, ',')) fields.push_back(field);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  const auto e = s.find_last_not_of(" \t\r");
  return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
}

double parse_number(const std::string& text, std::size_t row) {
  const std::string t = trim(text);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || end != t.c_str() + t.size() || errno == ERANGE) {
    throw CsvError("row " + std::to_string(row) + ": cannot parse number '" + t + "'");
  }
  return v;
}

}  // namespace

DiscreteMeasure read_measure_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw CsvError("row 1: missing header");
  const auto header = split_fields(trim(line));
  if (header.size() < 2 || trim(header[0]) != "w") {
    throw CsvError("row 1: header must be w,x1,...,xd");
  }
  for (std::size_t c = 1; c < header.size(); ++c) {
    if (trim(header[c]) != "x" + std::to_string(c)) {
      throw CsvError("row 1: expected column x" + std::to_string(c) + ", found '" + trim(header[c]) + "'");
    }
  }
  const std::size_t d = header.size() - 1;

  std::vector<double> weights;
  std::vector<double> coords;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto fields = split_fields(trim(line));
    if (fields.size() != d + 1) {
      throw CsvError("row " + std::to_string(row) + ": expected " + std::to_string(d + 1) + " fields, found " +
                     std::to_string(fields.size()));
    }
    weights.push_back(parse_number(fields[0], row));
    for (std::size_t c = 1; c <= d; ++c) coords.push_back(parse_number(fields[c], row));
  }
  if (weights.empty()) throw CsvError("row 2: measure has no atoms");

  const auto n = static_cast<Index>(weights.size());
  Matrix pts = Eigen::Map<Matrix>(coords.data(), n, static_cast<Index>(d));
  try {
    return DiscreteMeasure(PointCloud(std::move(pts)), Eigen::Map<Vector>(weights.data(), n));
  } catch (const std::invalid_argument& e) {
    throw CsvError(std::string("invalid measure: ") + e.what());
  }
}

DiscreteMeasure read_measure_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open " + path);
  return read_measure_csv(in);
}

}  // namespace entmap
