#include "pbec/io.hpp"

#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>

#include "pbec/errors.hpp"

namespace pbec {

std::string format_g17(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_csv_header(std::ostream& out, const std::vector<std::string>& cols) {
  for (std::size_t i = 0; i < cols.size(); ++i) out << (i ? "," : "") << cols[i];
  out << "\n";
}

void write_csv_row(std::ostream& out, const std::vector<double>& vals) {
  for (std::size_t i = 0; i < vals.size(); ++i) out << (i ? "," : "") << format_g17(vals[i]);
  out << "\n";
}

void write_g2_csv(std::ostream& out, const G2Curve& c) {
  bool se = !c.std_err.empty();
  write_csv_header(out, se ? std::vector<std::string>{"tau_ns", "g2", "stderr"}
                           : std::vector<std::string>{"tau_ns", "g2"});
  for (std::size_t i = 0; i < c.tau.size(); ++i) {
    if (se)
      write_csv_row(out, {c.tau[i], c.g2[i], c.std_err[i]});
    else
      write_csv_row(out, {c.tau[i], c.g2[i]});
  }
}

static std::vector<double> split_row(const std::string& line, std::size_t expect_min) {
  std::vector<double> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(std::stod(cell));
  if (out.size() < expect_min) throw IoError("csv row too short: " + line);
  return out;
}

G2Curve read_g2_csv(std::istream& in, Ordering assumed) {
  G2Curve c;
  c.ordering = assumed;
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty g2 csv");
  bool has_se = line.find("stderr") != std::string::npos;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto v = split_row(line, has_se ? 3 : 2);
    c.tau.push_back(v[0]);
    c.g2.push_back(v[1]);
    if (has_se) c.std_err.push_back(v[2]);
  }
  return c;
}

void write_xy_csv(std::ostream& out, const std::string& xcol, const std::string& ycol,
                  const std::vector<double>& x, const std::vector<double>& y) {
  write_csv_header(out, {xcol, ycol});
  for (std::size_t i = 0; i < x.size(); ++i) write_csv_row(out, {x[i], y[i]});
}

void read_xy_csv(std::istream& in, std::vector<double>& x, std::vector<double>& y) {
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty csv");
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto v = split_row(line, 2);
    x.push_back(v[0]);
    y.push_back(v[1]);
  }
}

}  // namespace pbec
