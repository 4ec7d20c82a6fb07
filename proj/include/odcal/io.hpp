#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "odcal/network.hpp"

// Small CSV helpers shared by the file formats of the toolkit. All floats are
// written with fmt_double so that repeated runs produce bit-identical files.

namespace odcal {

// Shortest round-trippable representation (printf %.17g trimmed).
std::string fmt_double(double v);

std::vector<std::string> split_csv_line(const std::string& line);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;  // throws ParseError
};

CsvTable read_csv(const std::filesystem::path& file);

// OD demand CSV with header od_index,demand_vph. The od_index column is the
// position of the OD pair in the path file.
std::vector<double> load_od_demands(const std::filesystem::path& file);
void save_od_demands(const std::vector<double>& demands, const std::filesystem::path& file);

double parse_double(const std::string& s, const std::string& context);
long long parse_int(const std::string& s, const std::string& context);

}  // namespace odcal
