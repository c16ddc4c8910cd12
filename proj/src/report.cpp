#include "gedprobe/report.hpp"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gedprobe/error.hpp"

namespace gedprobe {

namespace {

std::string fixed(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  return buf;
}

std::string csv_field(std::string_view s) {
  if (s.find_first_of(",\"\n") == std::string_view::npos) {
    return std::string(s);
  }
  std::string out = "\"";
  for (char c : s) {
    out += c;
    if (c == '"') {
      out += '"';
    }
  }
  return out + "\"";
}

std::vector<std::string> split_csv_line(std::string_view line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

double parse_double(const std::string& s, std::size_t line) {
  double v = 0.0;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    throw ParseError(line, "not a number: '" + s + "'");
  }
  return v;
}

std::string render_csv(const ReportGrid& g) {
  std::string out = csv_field(g.row_header) + ",stat";
  for (int l : g.layers) {
    out += "," + std::to_string(l);
  }
  out += '\n';
  for (const auto& row : g.rows) {
    for (const bool mean : {true, false}) {
      out += csv_field(row.label) + (mean ? ",mean" : ",std");
      for (const auto& c : row.cells) {
        out += "," + fixed(mean ? c.mean : c.std, 4);
      }
      out += '\n';
    }
  }
  if (g.baseline) {
    out += std::string(kBaselineLabel) + ",mean";
    for (std::size_t i = 0; i < g.layers.size(); ++i) {
      out += "," + fixed(*g.baseline, 4);
    }
    out += '\n';
  }
  return out;
}

std::string render_markdown(const ReportGrid& g) {
  std::string out;
  if (!g.title.empty()) {
    out += "### " + g.title + "\n\n";
  }
  out += "| " + g.row_header + " |";
  std::string rule = "|---|";
  for (int l : g.layers) {
    out += " " + std::to_string(l) + " |";
    rule += "---:|";
  }
  out += "\n" + rule + "\n";
  for (const auto& row : g.rows) {
    bool has_std = false;
    for (const auto& c : row.cells) {
      has_std = has_std || c.std > 0.0;
    }
    out += "| " + row.label + " |";
    for (const auto& c : row.cells) {
      out += " " + fixed(c.mean, 2) + (has_std ? " ± " + fixed(c.std, 2) : std::string{}) + " |";
    }
    out += '\n';
  }
  if (g.baseline) {
    out += "| " + std::string(kBaselineLabel) + " |";
    for (std::size_t i = 0; i < g.layers.size(); ++i) {
      out += " " + fixed(*g.baseline, 2) + " |";
    }
    out += '\n';
  }
  return out;
}

std::string render_plot_json(const ReportGrid& g) {
  nlohmann::json j;
  j["title"] = g.title;
  j["series"] = nlohmann::json::array();
  for (const auto& row : g.rows) {
    std::vector<double> y;
    std::vector<double> sd;
    for (const auto& c : row.cells) {
      y.push_back(c.mean);
      sd.push_back(c.std);
    }
    j["series"].push_back({{"label", row.label}, {"x", g.layers}, {"y", y}, {"std", sd}});
  }
  j["baseline"] = g.baseline ? nlohmann::json(*g.baseline) : nlohmann::json(nullptr);
  return j.dump(2) + "\n";
}

}  // namespace

std::string render_report(const ReportGrid& grid, ReportFormat format) {
  switch (format) {
    case ReportFormat::Csv:
      return render_csv(grid);
    case ReportFormat::Markdown:
      return render_markdown(grid);
    case ReportFormat::PlotJson:
      return render_plot_json(grid);
  }
  return {};
}

void emit_report(const ReportGrid& grid, ReportFormat format, const std::filesystem::path& path) {
  std::error_code ec;
  if (path.has_parent_path()) {
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw DataError("cannot write report " + path.string());
  }
  out << render_report(grid, format);
  if (!out) {
    throw DataError("failed writing report " + path.string());
  }
}

ReportGrid parse_csv_report(std::string_view text) {
  ReportGrid g;
  std::istringstream in{std::string(text)};
  std::string line;
  std::size_t line_no = 0;
  if (!std::getline(in, line)) {
    throw ParseError(1, "empty report");
  }
  ++line_no;
  const auto header = split_csv_line(line);
  if (header.size() < 2 || header[1] != "stat") {
    throw ParseError(line_no, "expected '<row header>,stat,<layers...>'");
  }
  g.row_header = header[0];
  for (std::size_t i = 2; i < header.size(); ++i) {
    g.layers.push_back(static_cast<int>(parse_double(header[i], line_no)));
  }
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) {
      continue;
    }
    const auto f = split_csv_line(line);
    if (f.size() != header.size()) {
      throw ParseError(line_no, "wrong number of columns");
    }
    if (f[0] == kBaselineLabel) {
      g.baseline = f.size() > 2 ? parse_double(f[2], line_no) : 0.0;
      continue;
    }
    if (f[1] == "mean") {
      GridRow row{f[0], {}};
      for (std::size_t i = 2; i < f.size(); ++i) {
        row.cells.push_back({parse_double(f[i], line_no), 0.0});
      }
      g.rows.push_back(std::move(row));
    } else if (f[1] == "std") {
      if (g.rows.empty() || g.rows.back().label != f[0]) {
        throw ParseError(line_no, "std row without a preceding mean row");
      }
      for (std::size_t i = 2; i < f.size(); ++i) {
        g.rows.back().cells[i - 2].std = parse_double(f[i], line_no);
      }
    } else {
      throw ParseError(line_no, "stat must be mean or std");
    }
  }
  return g;
}

}  // namespace gedprobe
