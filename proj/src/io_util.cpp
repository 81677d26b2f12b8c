#include "dc/io_util.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace dc {

std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

CsvWriter::CsvWriter(std::vector<std::string> header) : header_(std::move(header)) {
  if (header_.empty()) throw std::invalid_argument("CsvWriter: header must be non-empty");
}

void CsvWriter::add_row(std::vector<std::string> fields) {
  if (fields.size() != header_.size())
    throw std::invalid_argument("CsvWriter: row width does not match the header");
  rows_.push_back(std::move(fields));
}

namespace {

void append_field(std::string& out, const std::string& f) {
  if (f.find_first_of(",\"\r\n") == std::string::npos) {
    out += f;
    return;
  }
  out += '"';
  for (char c : f) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
}

void append_record(std::string& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out += ',';
    append_field(out, fields[i]);
  }
  out += "\r\n";
}

}  // namespace

std::string CsvWriter::str() const {
  std::string out;
  append_record(out, header_);
  for (const auto& row : rows_) append_record(out, row);
  return out;
}

void CsvWriter::write(const std::string& path) const { write_text_file(path, str()); }

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("write_text_file: cannot open " + path);
  f.write(content.data(), static_cast<std::streamsize>(content.size()));
  if (!f) throw std::runtime_error("write_text_file: write failed for " + path);
}

namespace {

constexpr int kW = 720, kH = 480;
constexpr int kLeft = 70, kRight = 160, kTop = 40, kBottom = 50;
const char* const kPalette[] = {"#1f6fb2", "#d1495b", "#3a9d6c", "#8e6cb8",
                                "#c98a2b", "#4a4a4a"};

std::string esc_xml(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

struct AxisScale {
  double lo = 0.0, hi = 1.0;
  bool log = false;

  double to_unit(double v) const {
    const double a = log ? std::log10(v) : v;
    const double l = log ? std::log10(lo) : lo;
    const double h = log ? std::log10(hi) : hi;
    return h > l ? (a - l) / (h - l) : 0.5;
  }

  std::vector<double> ticks() const {
    std::vector<double> t;
    if (log) {
      const int e0 = static_cast<int>(std::floor(std::log10(lo)));
      const int e1 = static_cast<int>(std::ceil(std::log10(hi)));
      for (int e = e0; e <= e1; ++e) {
        const double v = std::pow(10.0, e);
        if (v >= lo * (1 - 1e-9) && v <= hi * (1 + 1e-9)) t.push_back(v);
      }
      if (t.size() >= 2) return t;
    }
    const double l = log ? std::log10(lo) : lo;
    const double h = log ? std::log10(hi) : hi;
    for (int i = 0; i <= 4; ++i) {
      const double a = l + (h - l) * i / 4.0;
      t.push_back(log ? std::pow(10.0, a) : a);
    }
    return t;
  }
};

std::string tick_label(double v) {
  char buf[32];
  const double av = std::fabs(v);
  if (v != 0.0 && (av >= 1e5 || av < 1e-3))
    std::snprintf(buf, sizeof(buf), "%.1e", v);
  else
    std::snprintf(buf, sizeof(buf), "%.4g", v);
  return buf;
}

}  // namespace

std::string svg_line_chart(const std::string& title, const std::string& x_label,
                           const std::string& y_label, const std::vector<SvgSeries>& series,
                           bool log_x, bool log_y) {
  AxisScale xs, ys;
  xs.log = log_x;
  ys.log = log_y;
  bool any = false;
  for (const auto& s : series)
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      const double x = s.x[i], y = s.y[i];
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      if ((log_x && x <= 0.0) || (log_y && y <= 0.0)) continue;
      if (!any) {
        xs.lo = xs.hi = x;
        ys.lo = ys.hi = y;
        any = true;
      } else {
        xs.lo = std::min(xs.lo, x);
        xs.hi = std::max(xs.hi, x);
        ys.lo = std::min(ys.lo, y);
        ys.hi = std::max(ys.hi, y);
      }
    }
  if (!any) {
    xs.lo = log_x ? 1.0 : 0.0;
    xs.hi = log_x ? 10.0 : 1.0;
    ys.lo = log_y ? 1.0 : 0.0;
    ys.hi = log_y ? 10.0 : 1.0;
  }
  if (xs.lo == xs.hi) {
    xs.lo = log_x ? xs.lo / 2 : xs.lo - 0.5;
    xs.hi = log_x ? xs.hi * 2 : xs.hi + 0.5;
  }
  if (ys.lo == ys.hi) {
    ys.lo = log_y ? ys.lo / 2 : ys.lo - 0.5;
    ys.hi = log_y ? ys.hi * 2 : ys.hi + 0.5;
  }

  const double pw = kW - kLeft - kRight, ph = kH - kTop - kBottom;
  auto px = [&](double v) { return kLeft + xs.to_unit(v) * pw; };
  auto py = [&](double v) { return kTop + (1.0 - ys.to_unit(v)) * ph; };

  std::ostringstream o;
  o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW << "\" height=\"" << kH
    << "\" viewBox=\"0 0 " << kW << " " << kH << "\">\n";
  o << "<rect width=\"" << kW << "\" height=\"" << kH << "\" fill=\"white\"/>\n";
  o << "<text x=\"" << kW / 2 << "\" y=\"24\" text-anchor=\"middle\" font-family=\"sans-serif\" "
       "font-size=\"15\">"
    << esc_xml(title) << "</text>\n";

  o.setf(std::ios::fixed);
  o.precision(1);
  for (double t : xs.ticks()) {
    const double x = px(t);
    o << "<line x1=\"" << x << "\" y1=\"" << kTop << "\" x2=\"" << x << "\" y2=\""
      << kTop + ph << "\" stroke=\"#dddddd\"/>\n";
    o << "<text x=\"" << x << "\" y=\"" << kTop + ph + 18
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
      << tick_label(t) << "</text>\n";
  }
  for (double t : ys.ticks()) {
    const double y = py(t);
    o << "<line x1=\"" << kLeft << "\" y1=\"" << y << "\" x2=\"" << kLeft + pw << "\" y2=\""
      << y << "\" stroke=\"#dddddd\"/>\n";
    o << "<text x=\"" << kLeft - 6 << "\" y=\"" << y + 4
      << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
      << tick_label(t) << "</text>\n";
  }
  o << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\"" << pw << "\" height=\""
    << ph << "\" fill=\"none\" stroke=\"#333333\"/>\n";
  o << "<text x=\"" << kLeft + pw / 2 << "\" y=\"" << kH - 10
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">"
    << esc_xml(x_label) << "</text>\n";
  o << "<text x=\"16\" y=\"" << kTop + ph / 2
    << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\" transform=\"rotate(-90 16 "
    << kTop + ph / 2 << ")\">" << esc_xml(y_label) << "</text>\n";

  for (std::size_t s = 0; s < series.size(); ++s) {
    const char* color = kPalette[s % (sizeof(kPalette) / sizeof(kPalette[0]))];
    std::ostringstream pts;
    pts.setf(std::ios::fixed);
    pts.precision(1);
    std::size_t used = 0;
    for (std::size_t i = 0; i < std::min(series[s].x.size(), series[s].y.size()); ++i) {
      const double x = series[s].x[i], y = series[s].y[i];
      if (!std::isfinite(x) || !std::isfinite(y)) continue;
      if ((log_x && x <= 0.0) || (log_y && y <= 0.0)) continue;
      if (used) pts << ' ';
      pts << px(x) << ',' << py(y);
      ++used;
    }
    if (used)
      o << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"" << color
        << "\" stroke-width=\"1.8\"/>\n";
    const double ly = kTop + 14 + 18.0 * static_cast<double>(s);
    o << "<line x1=\"" << kLeft + pw + 10 << "\" y1=\"" << ly << "\" x2=\""
      << kLeft + pw + 34 << "\" y2=\"" << ly << "\" stroke=\"" << color
      << "\" stroke-width=\"1.8\"/>\n";
    o << "<text x=\"" << kLeft + pw + 40 << "\" y=\"" << ly + 4
      << "\" font-family=\"sans-serif\" font-size=\"11\">" << esc_xml(series[s].label)
      << "</text>\n";
  }
  o << "</svg>\n";
  return o.str();
}

}  // namespace dc
