#pragma once

#include <iosfwd>
#include <stdexcept>
#include <string>

#include "entmap/measures.hpp"

namespace entmap {

/// Malformed measure file; the message names the offending row.
class CsvError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Header `w,x1,...,xd`, one atom per row, 17 significant digits.
void write_measure_csv(const DiscreteMeasure& m, std::ostream& out);
void write_measure_csv(const DiscreteMeasure& m, const std::string& path);

DiscreteMeasure read_measure_csv(std::istream& in);
DiscreteMeasure read_measure_csv(const std::string& path);

/// printf("%.17g").
std::string format_double(double v);

}  // namespace entmap
