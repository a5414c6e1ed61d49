#pragma once

#include <iosfwd>
#include <string>

#include "mrfattn/numerics.hpp"

namespace mrfattn {

// Plain numeric CSV: comma separated, '.' decimal point, one matrix row per
// line, no header unless asked. Doubles are written with 17 significant
// digits so that reading them back is exact.

std::string format_double(double x);

/// Reads a rectangular numeric CSV. Blank lines are ignored. Throws
/// std::invalid_argument on ragged rows or unparsable cells.
Mat read_csv(std::istream& is, bool skip_header = false);
Mat read_csv_file(const std::string& path, bool skip_header = false);

void write_csv(std::ostream& os, const Mat& m);
void write_csv_file(const std::string& path, const Mat& m);

}  // namespace mrfattn
