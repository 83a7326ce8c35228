#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace ptlab::cli {

/// "%.9g", with non-finite values spelled null.
std::string format_number(double value);

/// JSON with sorted keys and floats at 9 significant digits. indent < 0
/// gives a single line.
std::string canonical_json(const nlohmann::json& value, int indent = 2);

enum class ReportFormat { json, csv };
ReportFormat report_format_from_string(std::string_view name);

/// JSON: an array of the reports. CSV: one row per report over the sorted
/// union of top-level keys; nested values are embedded as compact JSON.
std::string render_report(const std::vector<nlohmann::json>& reports, ReportFormat format);
void write_report(const std::vector<nlohmann::json>& reports, ReportFormat format, const std::filesystem::path& path);

/// A results table: label columns then numeric columns.
struct Table {
  std::string title;
  std::vector<std::string> label_headers;
  std::vector<std::string> value_headers;
  struct Row {
    std::vector<std::string> labels;
    std::vector<double> values;
  };
  std::vector<Row> rows;
};

/// Values with two decimals.
std::string table_csv(const Table& table);

enum class ChartKind { bars, lines };
/// A minimal standalone SVG: one series per row over the value columns.
std::string table_svg(const Table& table, ChartKind kind);

void write_text(const std::filesystem::path& path, const std::string& text);

}  // namespace ptlab::cli
