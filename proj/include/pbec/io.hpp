#ifndef PBEC_IO_HPP
#define PBEC_IO_HPP

#include <iosfwd>
#include <string>
#include <vector>

#include "pbec/types.hpp"

namespace pbec {

/// %.17g formatting -- lossless double round trip in CSV output.
std::string format_g17(double x);

void write_csv_header(std::ostream&, const std::vector<std::string>& cols);
void write_csv_row(std::ostream&, const std::vector<double>& vals);

void write_g2_csv(std::ostream&, const G2Curve&);
G2Curve read_g2_csv(std::istream&, Ordering assumed = Ordering::normal);

/// Two-column (x, y) CSV with a one-line header; used for spectra.
void write_xy_csv(std::ostream&, const std::string& xcol, const std::string& ycol,
                  const std::vector<double>& x, const std::vector<double>& y);
void read_xy_csv(std::istream&, std::vector<double>& x, std::vector<double>& y);

}  // namespace pbec

#endif
