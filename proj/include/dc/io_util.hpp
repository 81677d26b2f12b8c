#pragma once

#include <string>
#include <vector>

namespace dc {

/// Shortest representation that round-trips the exact double value.
std::string format_double(double v);

/// RFC-4180 CSV assembly: a fixed header row, then data rows of the same
/// width. Fields containing commas, quotes, or line breaks are quoted with
/// embedded quotes doubled; records end in CRLF.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> header);

  void add_row(std::vector<std::string> fields);
  std::size_t rows() const { return rows_.size(); }
  std::string str() const;
  void write(const std::string& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

struct SvgSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

/// Small self-contained SVG line chart (decoration for the CSV outputs).
/// Log axes drop nonpositive points; an empty chart still renders its frame.
std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<SvgSeries>& series,
                           bool log_x = false, bool log_y = false);

void write_text_file(const std::string& path, const std::string& content);

}  // namespace dc
