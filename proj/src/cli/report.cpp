#include "ptlab/cli/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

namespace ptlab::cli {

using nlohmann::json;

namespace {

void write_json(std::ostringstream& out, const json& v, int indent, int depth) {
  const auto newline = [&](int d) {
    if (indent >= 0) out << '\n' << std::string(static_cast<std::size_t>(indent * d), ' ');
  };
  switch (v.type()) {
    case json::value_t::object: {
      if (v.empty()) {
        out << "{}";
        return;
      }
      out << '{';
      bool first = true;
      for (auto it = v.begin(); it != v.end(); ++it) {  // nlohmann::json keeps keys sorted
        if (!first) out << ',';
        first = false;
        newline(depth + 1);
        out << json(it.key()).dump() << (indent >= 0 ? ": " : ":");
        write_json(out, it.value(), indent, depth + 1);
      }
      newline(depth);
      out << '}';
      return;
    }
    case json::value_t::array: {
      if (v.empty()) {
        out << "[]";
        return;
      }
      out << '[';
      for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) out << ',';
        newline(depth + 1);
        write_json(out, v[i], indent, depth + 1);
      }
      newline(depth);
      out << ']';
      return;
    }
    case json::value_t::number_float:
      out << format_number(v.get<double>());
      return;
    default:
      out << v.dump();
  }
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_value(const json& v) {
  switch (v.type()) {
    case json::value_t::string:
      return csv_field(v.get<std::string>());
    case json::value_t::number_float:
      return format_number(v.get<double>());
    case json::value_t::null:
      return "";
    case json::value_t::object:
    case json::value_t::array:
      return csv_field(canonical_json(v, -1));
    default:
      return v.dump();
  }
}

std::string fixed2(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

const char* kPalette[] = {"#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#9c755f"};

}  // namespace

std::string format_number(double value) {
  if (!std::isfinite(value)) return "null";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", value);
  return buf;
}

std::string canonical_json(const json& value, int indent) {
  std::ostringstream out;
  write_json(out, value, indent, 0);
  return out.str();
}

ReportFormat report_format_from_string(std::string_view name) {
  if (name == "json") return ReportFormat::json;
  if (name == "csv") return ReportFormat::csv;
  throw std::invalid_argument("unknown report format: " + std::string(name));
}

std::string render_report(const std::vector<json>& reports, ReportFormat format) {
  if (format == ReportFormat::json) return canonical_json(json(reports)) + "\n";
  if (reports.empty()) return "";
  std::set<std::string> keys;
  for (const auto& r : reports) {
    if (!r.is_object()) throw std::invalid_argument("CSV reports must be JSON objects");
    for (auto it = r.begin(); it != r.end(); ++it) keys.insert(it.key());
  }
  std::ostringstream out;
  bool first = true;
  for (const auto& k : keys) {
    out << (first ? "" : ",") << csv_field(k);
    first = false;
  }
  out << '\n';
  for (const auto& r : reports) {
    first = true;
    for (const auto& k : keys) {
      out << (first ? "" : ",") << (r.contains(k) ? csv_value(r.at(k)) : "");
      first = false;
    }
    out << '\n';
  }
  return out.str();
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << text;
  if (!out) throw std::runtime_error("cannot write " + path.string());
}

void write_report(const std::vector<json>& reports, ReportFormat format, const std::filesystem::path& path) {
  write_text(path, render_report(reports, format));
}

std::string table_csv(const Table& table) {
  std::ostringstream out;
  bool first = true;
  for (const auto& h : table.label_headers) {
    out << (first ? "" : ",") << csv_field(h);
    first = false;
  }
  for (const auto& h : table.value_headers) {
    out << (first ? "" : ",") << csv_field(h);
    first = false;
  }
  out << '\n';
  for (const auto& row : table.rows) {
    first = true;
    for (const auto& l : row.labels) {
      out << (first ? "" : ",") << csv_field(l);
      first = false;
    }
    for (double v : row.values) {
      out << (first ? "" : ",") << fixed2(v);
      first = false;
    }
    out << '\n';
  }
  return out.str();
}

std::string table_svg(const Table& table, ChartKind kind) {
  const double width = 640, height = 360, left = 50, right = 190, top = 40, bottom = 40;
  const double plot_w = width - left - right, plot_h = height - top - bottom;
  const std::size_t groups = table.value_headers.size();
  const std::size_t series = table.rows.size();
  std::ostringstream out;
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << left << "\" y=\"20\" font-size=\"13\">" << xml_escape(table.title) << "</text>\n";
  for (int tick = 0; tick <= 4; ++tick) {
    const double y = top + plot_h * (1.0 - tick / 4.0);
    out << "<line x1=\"" << left << "\" x2=\"" << left + plot_w << "\" y1=\"" << y << "\" y2=\"" << y
        << "\" stroke=\"#ddd\"/>";
    out << "<text x=\"" << left - 6 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">" << fixed2(tick / 4.0)
        << "</text>\n";
  }
  const double group_w = groups ? plot_w / static_cast<double>(groups) : plot_w;
  for (std::size_t g = 0; g < groups; ++g) {
    out << "<text x=\"" << left + group_w * (g + 0.5) << "\" y=\"" << top + plot_h + 16
        << "\" text-anchor=\"middle\">" << xml_escape(table.value_headers[g]) << "</text>\n";
  }
  for (std::size_t s = 0; s < series; ++s) {
    const auto& row = table.rows[s];
    const char* color = kPalette[s % std::size(kPalette)];
    std::string label;
    for (const auto& l : row.labels) label += (label.empty() ? "" : " / ") + l;
    if (kind == ChartKind::bars) {
      const double bar_w = group_w * 0.8 / static_cast<double>(std::max<std::size_t>(series, 1));
      for (std::size_t g = 0; g < row.values.size() && g < groups; ++g) {
        const double v = std::clamp(row.values[g], 0.0, 1.0);
        const double x = left + group_w * g + group_w * 0.1 + bar_w * s;
        out << "<rect x=\"" << x << "\" y=\"" << top + plot_h * (1.0 - v) << "\" width=\"" << bar_w
            << "\" height=\"" << plot_h * v << "\" fill=\"" << color << "\"/>\n";
      }
    } else {
      out << "<polyline fill=\"none\" stroke-width=\"2\" stroke=\"" << color << "\" points=\"";
      for (std::size_t g = 0; g < row.values.size() && g < groups; ++g) {
        const double v = std::clamp(row.values[g], 0.0, 1.0);
        out << (g ? " " : "") << left + group_w * (g + 0.5) << "," << top + plot_h * (1.0 - v);
      }
      out << "\"/>\n";
    }
    const double ly = top + 14.0 * s;
    out << "<rect x=\"" << width - right + 10 << "\" y=\"" << ly << "\" width=\"10\" height=\"10\" fill=\"" << color
        << "\"/><text x=\"" << width - right + 24 << "\" y=\"" << ly + 9 << "\">" << xml_escape(label)
        << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

}  // namespace ptlab::cli
