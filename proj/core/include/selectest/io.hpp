#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "selectest/dataset.hpp"
#include "selectest/report.hpp"

namespace selectest {

/// Which CSV columns play which role. x columns may also be listed as zc.
struct ColumnRoles {
  std::string outcome;
  std::string selection;
  std::vector<std::string> x;
  std::vector<std::string> zc;
  std::vector<std::string> zd;
  std::optional<std::string> oracle_p;

  void validate() const;
};

struct LoadedData {
  Dataset data;
  /// Empty unless an oracle propensity column was named.
  std::vector<double> oracle_p;
};

/// RFC-4180 records: comma separated, double-quoted fields with "" escapes,
/// CRLF or LF line ends. Fails on unterminated quotes.
std::vector<std::vector<std::string>> read_csv_records(std::istream& in,
                                                       std::string_view source = "<input>");

/// Locale-independent decimal parse of a full field; empty or "NA" gives NaN.
std::optional<double> parse_number(std::string_view field);

LoadedData parse_csv(std::istream& in, const ColumnRoles& roles,
                     std::string_view source = "<input>");
LoadedData load_csv(const std::string& path, const ColumnRoles& roles);

enum class ReportFormat { Json, Csv, Text };

ReportFormat report_format_from_string(std::string_view name);

/// Shortest round-trip decimal form, used for alpha keys.
std::string format_double(double v);

nlohmann::json report_to_json(const TestReport& report);
TestReport report_from_json(const nlohmann::json& j);

/// One header line and one row per bootstrap draw.
std::string boot_draws_csv(const TestReport& report);

/// Statistic, per-tau rows ("10%", "20%", ...), critical value rows
/// ("90%-CV", "95%-CV"), "P-Value" and "# obs".
std::string format_report_text(const TestReport& report);

std::string render_report(const TestReport& report, ReportFormat format);

/// Per-tau statistic profile with critical value lines as a standalone SVG.
std::string plot_profile_svg(const TestReport& report);

/// Writes `content` to `path`; "-" writes to stdout.
void write_output(const std::string& path, const std::string& content);

void emit_report(const TestReport& report, ReportFormat format, const std::string& path);

}  // namespace selectest
