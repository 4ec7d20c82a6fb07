#pragma once

#include <filesystem>
#include <string>
#include <vector>

// Minimal self-contained SVG line plots for the benchmark reports.

namespace odcal::svg {

struct Series {
  std::string label;
  std::string color;  // empty: assigned from a default palette
  std::vector<double> x;
  std::vector<double> y;
};

void write_line_plot(const std::filesystem::path& file, const std::string& title,
                     const std::string& x_label, const std::string& y_label,
                     std::vector<Series> series);

}  // namespace odcal::svg
