#include "svg.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "odcal/errors.hpp"
#include "odcal/io.hpp"

namespace odcal::svg {

namespace {

constexpr int kWidth = 720;
constexpr int kHeight = 480;
constexpr int kMarginLeft = 70;
constexpr int kMarginRight = 160;
constexpr int kMarginTop = 50;
constexpr int kMarginBottom = 55;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd",
                          "#8c564b", "#e377c2", "#7f7f7f", "#bcbd22", "#17becf"};

std::string esc(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '&') out += "&amp;";
    else if (c == '<') out += "&lt;";
    else if (c == '>') out += "&gt;";
    else out += c;
  }
  return out;
}

}  // namespace

void write_line_plot(const std::filesystem::path& file, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     std::vector<Series> series) {
  double x_min = 0.0, x_max = 1.0, y_min = 0.0, y_max = 1.0;
  bool any = false;
  for (const Series& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      if (!any) {
        x_min = x_max = s.x[i];
        y_min = y_max = s.y[i];
        any = true;
      } else {
        x_min = std::min(x_min, s.x[i]);
        x_max = std::max(x_max, s.x[i]);
        y_min = std::min(y_min, s.y[i]);
        y_max = std::max(y_max, s.y[i]);
      }
    }
  }
  if (x_max <= x_min) x_max = x_min + 1.0;
  if (y_max <= y_min) y_max = y_min + 1.0;
  double y_pad = 0.05 * (y_max - y_min);
  y_min -= y_pad;
  y_max += y_pad;

  const double plot_w = kWidth - kMarginLeft - kMarginRight;
  const double plot_h = kHeight - kMarginTop - kMarginBottom;
  auto sx = [&](double v) { return kMarginLeft + (v - x_min) / (x_max - x_min) * plot_w; };
  auto sy = [&](double v) {
    return kMarginTop + plot_h - (v - y_min) / (y_max - y_min) * plot_h;
  };

  std::ofstream out(file);
  if (!out) {
    throw ParseError("cannot write " + file.string());
  }
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << kWidth / 2 << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-family=\"sans-serif\" font-size=\"16\">" << esc(title) << "</text>\n";

  // Axes, ticks and grid.
  out << "<rect x=\"" << kMarginLeft << "\" y=\"" << kMarginTop << "\" width=\"" << plot_w
      << "\" height=\"" << plot_h << "\" fill=\"none\" stroke=\"#333\"/>\n";
  const int n_ticks = 5;
  for (int t = 0; t <= n_ticks; ++t) {
    double fx = x_min + (x_max - x_min) * t / n_ticks;
    double fy = y_min + (y_max - y_min) * t / n_ticks;
    out << "<line x1=\"" << sx(fx) << "\" y1=\"" << kMarginTop + plot_h << "\" x2=\"" << sx(fx)
        << "\" y2=\"" << kMarginTop + plot_h + 5 << "\" stroke=\"#333\"/>\n";
    out << "<text x=\"" << sx(fx) << "\" y=\"" << kMarginTop + plot_h + 20
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt_double(std::round(fx * 100.0) / 100.0) << "</text>\n";
    out << "<line x1=\"" << kMarginLeft - 5 << "\" y1=\"" << sy(fy) << "\" x2=\"" << kMarginLeft
        << "\" y2=\"" << sy(fy) << "\" stroke=\"#333\"/>\n";
    out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << sy(fy) << "\" x2=\""
        << kMarginLeft + plot_w << "\" y2=\"" << sy(fy)
        << "\" stroke=\"#ddd\" stroke-width=\"0.5\"/>\n";
    out << "<text x=\"" << kMarginLeft - 8 << "\" y=\"" << sy(fy) + 4
        << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">"
        << fmt_double(std::round(fy * 1000.0) / 1000.0) << "</text>\n";
  }
  if (y_min < 0.0 && y_max > 0.0) {
    out << "<line x1=\"" << kMarginLeft << "\" y1=\"" << sy(0.0) << "\" x2=\""
        << kMarginLeft + plot_w << "\" y2=\"" << sy(0.0)
        << "\" stroke=\"#999\" stroke-dasharray=\"4 3\"/>\n";
  }
  out << "<text x=\"" << kMarginLeft + plot_w / 2 << "\" y=\"" << kHeight - 12
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\">"
      << esc(x_label) << "</text>\n";
  out << "<text x=\"18\" y=\"" << kMarginTop + plot_h / 2
      << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"13\" "
      << "transform=\"rotate(-90 18 " << kMarginTop + plot_h / 2 << ")\">" << esc(y_label)
      << "</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    Series& s = series[si];
    if (s.color.empty()) s.color = kPalette[si % (sizeof(kPalette) / sizeof(kPalette[0]))];
    out << "<polyline fill=\"none\" stroke=\"" << s.color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (!std::isfinite(s.x[i]) || !std::isfinite(s.y[i])) continue;
      out << fmt_double(std::round(sx(s.x[i]) * 100.0) / 100.0) << ","
          << fmt_double(std::round(sy(s.y[i]) * 100.0) / 100.0) << " ";
    }
    out << "\"/>\n";
    double ly = kMarginTop + 16.0 * (si + 1);
    out << "<line x1=\"" << kWidth - kMarginRight + 10 << "\" y1=\"" << ly - 4 << "\" x2=\""
        << kWidth - kMarginRight + 32 << "\" y2=\"" << ly - 4 << "\" stroke=\"" << s.color
        << "\" stroke-width=\"2\"/>\n";
    out << "<text x=\"" << kWidth - kMarginRight + 38 << "\" y=\"" << ly
        << "\" font-family=\"sans-serif\" font-size=\"11\">" << esc(s.label) << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace odcal::svg
