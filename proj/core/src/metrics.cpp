#include "epimem/metrics.hpp"

#include "epimem/error.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>

namespace epimem {

void MetricsReport::add(std::string variant, std::string parameter, double parameter_value,
                        std::string metric, double value, bool is_rate) {
  rows.push_back({experiment, std::move(variant), std::move(parameter), parameter_value,
                  std::move(metric), value, is_rate});
}

const MetricRow* MetricsReport::find(const std::string& metric, const std::string& variant,
                                     const double* parameter_value) const {
  for (const auto& row : rows) {
    if (row.metric != metric) continue;
    if (!variant.empty() && row.variant != variant) continue;
    if (parameter_value && row.parameter_value != *parameter_value) continue;
    return &row;
  }
  return nullptr;
}

double MetricsReport::value(const std::string& metric, const std::string& variant) const {
  const auto* row = find(metric, variant);
  if (!row) throw Error(ErrorCode::kInvalidArgument, "no metric '" + metric + "' in report");
  return row->value;
}

double MetricsReport::value_at(const std::string& metric, double parameter_value,
                               const std::string& variant) const {
  const auto* row = find(metric, variant, &parameter_value);
  if (!row) {
    throw Error(ErrorCode::kInvalidArgument,
                "no metric '" + metric + "' at " + std::to_string(parameter_value));
  }
  return row->value;
}

void MetricsReport::validate() const {
  for (const auto& row : rows) {
    if (row.is_rate && !(row.value >= 0.0 && row.value <= 1.0)) {
      throw Error(ErrorCode::kNumerical, "rate '" + row.metric + "' outside [0,1]");
    }
  }
}

namespace {

std::string format_number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

void write_csv(std::ostream& out, const MetricsReport& report, bool header) {
  if (header) out << kCsvHeader << '\n';
  for (const auto& r : report.rows) {
    out << r.experiment << ',' << r.variant << ',' << r.parameter << ','
        << format_number(r.parameter_value) << ',' << r.metric << ',' << format_number(r.value)
        << '\n';
  }
}

std::string to_csv(const MetricsReport& report) {
  std::ostringstream out;
  write_csv(out, report);
  return out.str();
}

void write_summary(std::ostream& out, const MetricsReport& report) {
  out << "== " << report.experiment << " ==\n";
  for (const auto& line : report.summary) out << "  " << line << '\n';
  if (!report.latencies_ms.empty()) {
    auto sorted = report.latencies_ms;
    std::sort(sorted.begin(), sorted.end());
    const double mean =
        std::accumulate(sorted.begin(), sorted.end(), 0.0) / static_cast<double>(sorted.size());
    out << "  latency per write+read: mean " << format_number(mean) << " ms, median "
        << format_number(sorted[sorted.size() / 2]) << " ms over " << sorted.size() << " edits\n";
  }
}

}  // namespace epimem
