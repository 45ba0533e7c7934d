#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sgnd/dataset.hpp"
#include "sgnd/errors.hpp"

namespace sgnd {

struct CsvTable {
  std::vector<std::string> header;
  Eigen::MatrixXd values;  // rows x columns

  Eigen::Index col(const std::string& name) const {
    auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw MissingColumn("no column named " + name);
    return it - header.begin();
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

}  // namespace detail

inline CsvTable read_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CsvError("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw CsvError(path + " is empty");
  CsvTable table;
  table.header = detail::split_line(line);
  const std::size_t ncol = table.header.size();
  std::vector<double> buf;
  std::size_t nrow = 0;
  while (std::getline(in, line)) {
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_line(line);
    if (cells.size() != ncol)
      throw CsvError(path + ": row " + std::to_string(nrow + 2) + " has " +
                     std::to_string(cells.size()) + " cells, expected " +
                     std::to_string(ncol));
    for (std::size_t j = 0; j < ncol; ++j) {
      const std::string& c = cells[j];
      if (c.empty() || c == "NA" || c == "nan" || c == "NaN")
        throw MissingValue(path + ": missing value in column " +
                           table.header[j] + ", row " + std::to_string(nrow + 2));
      std::size_t used = 0;
      double v;
      try {
        v = std::stod(c, &used);
      } catch (const std::exception&) {
        throw NonNumericCell(path + ": non-numeric cell '" + c +
                             "' in column " + table.header[j]);
      }
      if (used != c.size())
        throw NonNumericCell(path + ": non-numeric cell '" + c +
                             "' in column " + table.header[j]);
      buf.push_back(v);
    }
    ++nrow;
  }
  table.values.resize(nrow, ncol);
  for (std::size_t i = 0; i < nrow; ++i)
    for (std::size_t j = 0; j < ncol; ++j)
      table.values(i, j) = buf[i * ncol + j];
  return table;
}

// Build a regression dataset from a table: the named response column plus
// either the given covariates or, if empty, every other column.
inline Dataset make_dataset(const CsvTable& table, const std::string& response,
                            std::vector<std::string> covariates = {}) {
  const Eigen::Index yc = table.col(response);
  if (covariates.empty())
    for (const auto& h : table.header)
      if (h != response) covariates.push_back(h);
  Dataset d;
  d.y = table.values.col(yc);
  d.X.resize(table.values.rows(), covariates.size() + 1);
  d.X.col(0).setOnes();
  for (std::size_t k = 0; k < covariates.size(); ++k)
    d.X.col(k + 1) = table.values.col(table.col(covariates[k]));
  d.names = std::move(covariates);
  return d;
}

inline void write_csv(const std::string& path,
                      const std::vector<std::string>& header,
                      const Eigen::MatrixXd& values) {
  std::ofstream out(path);
  if (!out) throw CsvError("cannot write " + path);
  for (std::size_t j = 0; j < header.size(); ++j)
    out << header[j] << (j + 1 < header.size() ? "," : "\n");
  out.precision(12);
  for (Eigen::Index i = 0; i < values.rows(); ++i)
    for (Eigen::Index j = 0; j < values.cols(); ++j)
      out << values(i, j) << (j + 1 < values.cols() ? "," : "\n");
}

}  // namespace sgnd
