#include "fleetpricer/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

#include "fleetpricer/numfmt.hpp"

namespace fleetpricer {

namespace {

std::string escape_xml(const std::string& s) {
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

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

}  // namespace

void write_benchmark_csv(std::ostream& os, std::span<const BenchmarkRow> rows) {
  os << "label,expected_margin,objective,risk_total,mean_day_risk,band_violations,opportunity_cost\n";
  for (const auto& r : rows) {
    os << csv_field(r.label) << ',' << fmt9(r.expected_margin) << ',' << fmt9(r.objective) << ','
       << fmt9(r.risk_total) << ',' << fmt9(r.mean_day_risk) << ',' << r.band_violations << ','
       << fmt9(r.opportunity_cost) << '\n';
  }
}

std::string benchmark_svg(std::span<const BenchmarkRow> rows, const std::string& title) {
  const double width = 640, height = 360;
  const double left = 70, right = 70, top = 40, bottom = 60;
  const double plot_w = width - left - right, plot_h = height - top - bottom;
  double mmax = 0.0, mmin = 0.0, rmax = 0.0;
  for (const auto& r : rows) {
    mmax = std::max(mmax, r.expected_margin);
    mmin = std::min(mmin, r.expected_margin);
    rmax = std::max(rmax, r.risk_total);
  }
  if (mmax == mmin) mmax = mmin + 1.0;
  if (rmax == 0.0) rmax = 1.0;
  auto y_margin = [&](double v) { return top + plot_h * (mmax - v) / (mmax - mmin); };
  auto y_risk = [&](double v) { return top + plot_h * (1.0 - v / rmax); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
     << escape_xml(title) << "</text>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << y_margin(0.0) << "\" x2=\"" << left + plot_w << "\" y2=\""
     << y_margin(0.0) << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << left + plot_w << "\" y1=\"" << top << "\" x2=\"" << left + plot_w << "\" y2=\""
     << top + plot_h << "\" stroke=\"#c0392b\"/>\n";
  os << "<text x=\"" << left - 8 << "\" y=\"" << top << "\" text-anchor=\"end\">" << num(mmax) << "</text>\n";
  os << "<text x=\"" << left - 8 << "\" y=\"" << top + plot_h << "\" text-anchor=\"end\">" << num(mmin)
     << "</text>\n";
  os << "<text x=\"" << left + plot_w + 8 << "\" y=\"" << top << "\" fill=\"#c0392b\">" << num(rmax)
     << "</text>\n";
  os << "<text x=\"" << left + plot_w + 8 << "\" y=\"" << top + plot_h << "\" fill=\"#c0392b\">0</text>\n";
  os << "<text x=\"15\" y=\"" << top + plot_h / 2 << "\" transform=\"rotate(-90 15 " << top + plot_h / 2
     << ")\" text-anchor=\"middle\">expected margin</text>\n";
  os << "<text x=\"" << width - 12 << "\" y=\"" << top + plot_h / 2 << "\" transform=\"rotate(90 "
     << width - 12 << ' ' << top + plot_h / 2 << ")\" text-anchor=\"middle\" fill=\"#c0392b\">risk total</text>\n";

  const double slot = rows.empty() ? plot_w : plot_w / static_cast<double>(rows.size());
  std::string line;
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const auto& r = rows[i];
    const double cx = left + slot * (static_cast<double>(i) + 0.5);
    const double bw = slot * 0.5;
    const double y0 = y_margin(0.0), y1 = y_margin(r.expected_margin);
    os << "<rect x=\"" << num(cx - bw / 2) << "\" y=\"" << num(std::min(y0, y1)) << "\" width=\"" << num(bw)
       << "\" height=\"" << num(std::abs(y0 - y1)) << "\" fill=\"#2e86c1\"><title>" << escape_xml(r.label)
       << ": " << num(r.expected_margin) << "</title></rect>\n";
    os << "<text x=\"" << num(cx) << "\" y=\"" << top + plot_h + 18 << "\" text-anchor=\"middle\">"
       << escape_xml(r.label) << "</text>\n";
    line += (i == 0 ? "" : " ") + num(cx) + "," + num(y_risk(r.risk_total));
  }
  if (!rows.empty()) {
    os << "<polyline points=\"" << line << "\" fill=\"none\" stroke=\"#c0392b\" stroke-width=\"2\"/>\n";
    for (std::size_t i = 0; i < rows.size(); ++i) {
      const double cx = left + slot * (static_cast<double>(i) + 0.5);
      os << "<circle cx=\"" << num(cx) << "\" cy=\"" << num(y_risk(rows[i].risk_total))
         << "\" r=\"4\" fill=\"#c0392b\"/>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

std::string trace_svg(std::span<const std::pair<std::string, std::vector<double>>> series,
                      const std::string& title, const std::string& y_label) {
  static const char* kColors[] = {"#2e86c1", "#7f8c8d", "#c0392b", "#27ae60"};
  const double width = 640, height = 360;
  const double left = 80, right = 140, top = 40, bottom = 50;
  const double plot_w = width - left - right, plot_h = height - top - bottom;
  double lo = 0.0, hi = 0.0;
  std::size_t n = 0;
  for (const auto& [name, v] : series) {
    n = std::max(n, v.size());
    for (double x : v) {
      lo = std::min(lo, x);
      hi = std::max(hi, x);
    }
  }
  if (hi == lo) hi = lo + 1.0;
  const double span_x = n > 1 ? static_cast<double>(n - 1) : 1.0;
  auto px = [&](std::size_t i) { return left + plot_w * static_cast<double>(i) / span_x; };
  auto py = [&](double v) { return top + plot_h * (hi - v) / (hi - lo); };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"20\" text-anchor=\"middle\" font-size=\"14\">"
     << escape_xml(title) << "</text>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
     << "\" stroke=\"black\"/>\n";
  os << "<line x1=\"" << left << "\" y1=\"" << num(py(0.0)) << "\" x2=\"" << left + plot_w << "\" y2=\""
     << num(py(0.0)) << "\" stroke=\"black\"/>\n";
  os << "<text x=\"" << left - 8 << "\" y=\"" << top << "\" text-anchor=\"end\">" << num(hi) << "</text>\n";
  os << "<text x=\"" << left - 8 << "\" y=\"" << top + plot_h << "\" text-anchor=\"end\">" << num(lo)
     << "</text>\n";
  os << "<text x=\"15\" y=\"" << top + plot_h / 2 << "\" transform=\"rotate(-90 15 " << top + plot_h / 2
     << ")\" text-anchor=\"middle\">" << escape_xml(y_label) << "</text>\n";
  os << "<text x=\"" << left + plot_w / 2 << "\" y=\"" << height - 12 << "\" text-anchor=\"middle\">day</text>\n";
  for (std::size_t s = 0; s < series.size(); ++s) {
    const auto& [name, v] = series[s];
    const char* color = kColors[s % 4];
    std::string pts;
    for (std::size_t i = 0; i < v.size(); ++i) {
      pts += (i == 0 ? "" : " ") + num(px(i)) + "," + num(py(v[i]));
    }
    if (!v.empty()) {
      os << "<polyline points=\"" << pts << "\" fill=\"none\" stroke=\"" << color
         << "\" stroke-width=\"2\"/>\n";
    }
    const double ly = top + 16.0 * static_cast<double>(s);
    os << "<line x1=\"" << left + plot_w + 12 << "\" y1=\"" << ly << "\" x2=\"" << left + plot_w + 32
       << "\" y2=\"" << ly << "\" stroke=\"" << color << "\" stroke-width=\"2\"/>\n";
    os << "<text x=\"" << left + plot_w + 36 << "\" y=\"" << ly + 4 << "\">" << escape_xml(name) << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

}  // namespace fleetpricer
