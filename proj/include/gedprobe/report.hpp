#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gedprobe/summary.hpp"

namespace gedprobe {

struct GridRow {
  std::string label;
  std::vector<MeanStd> cells;  // one per column
};

/// Series-by-layer table: one row per model (or model/construction), one column per layer.
struct ReportGrid {
  std::string title;
  std::string row_header = "model";
  std::vector<int> layers;
  std::vector<GridRow> rows;
  std::optional<double> baseline;

  friend bool operator==(const ReportGrid&, const ReportGrid&) = default;
};

enum class ReportFormat { Csv, Markdown, PlotJson };

inline constexpr std::string_view kBaselineLabel = "verb-only";

std::string render_report(const ReportGrid& grid, ReportFormat format);

/// Throws DataError when the path cannot be written.
void emit_report(const ReportGrid& grid, ReportFormat format, const std::filesystem::path& path);

/// Parses the CSV rendering back into a grid (values at 4 decimals).
ReportGrid parse_csv_report(std::string_view text);

}  // namespace gedprobe
