#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace epimem {

struct MetricRow {
  std::string experiment;
  std::string variant;    // addressing mode or protocol arm
  std::string parameter;  // name of the swept quantity
  double parameter_value = 0.0;
  std::string metric;
  double value = 0.0;
  bool is_rate = false;  // must lie in [0, 1]
};

/// Rows go to CSV; summary lines and latencies go to standard output only,
/// so the CSV is a pure function of config + seed.
struct MetricsReport {
  std::string experiment;
  std::vector<MetricRow> rows;
  std::vector<std::string> summary;
  std::vector<double> latencies_ms;  // wall clock per write+read, I/O excluded

  void add(std::string variant, std::string parameter, double parameter_value, std::string metric,
           double value, bool is_rate);
  /// First row matching metric (and variant / parameter_value when given).
  const MetricRow* find(const std::string& metric, const std::string& variant = {},
                        const double* parameter_value = nullptr) const;
  double value(const std::string& metric, const std::string& variant = {}) const;
  double value_at(const std::string& metric, double parameter_value,
                  const std::string& variant = {}) const;

  /// Throws unless every rate row is within [0, 1].
  void validate() const;
};

inline constexpr const char* kCsvHeader = "experiment,variant,parameter,parameter_value,metric,value";

void write_csv(std::ostream& out, const MetricsReport& report, bool header = true);
std::string to_csv(const MetricsReport& report);
void write_summary(std::ostream& out, const MetricsReport& report);

}  // namespace epimem
