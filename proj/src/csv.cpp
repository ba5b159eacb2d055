#include "fuselab/csv.hpp"

#include "fuselab/errors.hpp"

#include <array>
#include <charconv>
#include <fstream>

namespace fuselab {

std::string format_double(double v) {
  std::array<char, 64> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), v, std::chars_format::general, 17);
  return std::string(buf.data(), res.ptr);
}

void CsvWriter::row(const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) text_ += ',';
    text_ += fields[i];
  }
  text_ += '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  std::vector<std::string> fields;
  fields.reserve(values.size());
  for (double v : values) fields.push_back(format_double(v));
  row(fields);
}

std::string mse_csv(const MseSeries& series, std::size_t method) {
  const MatrixXd& mse = series.mse.at(method);
  std::vector<std::string> header{"t"};
  for (Eigen::Index c = 0; c < mse.cols(); ++c) header.push_back("mse_x" + std::to_string(c + 1));
  CsvWriter csv(header);
  for (Eigen::Index k = 0; k < mse.rows(); ++k) {
    std::vector<double> row{series.times[static_cast<std::size_t>(k)]};
    for (Eigen::Index c = 0; c < mse.cols(); ++c) row.push_back(mse(k, c));
    csv.row(row);
  }
  return csv.str();
}

std::string weights_csv(const MseSeries& series, std::size_t method) {
  const auto& per_epoch = series.weights.at(method);
  if (per_epoch.empty()) throw DomainError("method " + series.methods.at(method).name() + " has no weights");
  const auto& first = per_epoch.front().weights;
  std::vector<std::string> header{"t"};
  for (std::size_t i = 0; i < first.size(); ++i)
    for (Eigen::Index r = 0; r < first[i].rows(); ++r)
      for (Eigen::Index c = 0; c < first[i].cols(); ++c)
        header.push_back("W" + std::to_string(i + 1) + "_" + std::to_string(r + 1) + std::to_string(c + 1));
  CsvWriter csv(header);
  for (std::size_t k = 0; k < per_epoch.size(); ++k) {
    std::vector<double> row{series.times[k]};
    for (const auto& w : per_epoch[k].weights)
      for (Eigen::Index r = 0; r < w.rows(); ++r)
        for (Eigen::Index c = 0; c < w.cols(); ++c) row.push_back(w(r, c));
    csv.row(row);
  }
  return csv.str();
}

std::string steady_state_csv(const SteadyStateReport& s) {
  CsvWriter csv({"q", "r1", "r2", "P11", "P22", "P12", "C1", "C2", "W1", "W2", "P_FF", "P_CI", "ci_relative_excess"});
  csv.row(std::vector<double>{s.q, s.r1, s.r2, s.p11, s.p22, s.p12, s.c1, s.c2, s.w1, s.w2, s.p_ff, s.p_ci,
                              ci_relative_excess(s)});
  return csv.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("error writing " + path.string());
}

}  // namespace fuselab
