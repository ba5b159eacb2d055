#pragma once

#include "fuselab/simulator.hpp"
#include "fuselab/steady_state.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace fuselab {

/// Shortest-form-independent, round-trippable rendering: 17 significant
/// digits, '.' separator, no locale.
std::string format_double(double v);

/// Rows of comma-separated fields terminated by '\n'.
class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header) { row(header); }

  void row(const std::vector<std::string>& fields);
  void row(const std::vector<double>& values);
  const std::string& str() const { return text_; }

 private:
  std::string text_;
};

/// t, then one MSE column per state component.
std::string mse_csv(const MseSeries& series, std::size_t method);
/// t, then the row-major entries of every weight matrix W1..WN.
std::string weights_csv(const MseSeries& series, std::size_t method);
std::string steady_state_csv(const SteadyStateReport& report);

void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace fuselab
