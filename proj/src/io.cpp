#include "odcal/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <fstream>

#include "odcal/errors.hpp"

namespace odcal {

std::string fmt_double(double v) {
  char buf[32];
  // %.17g always round-trips; prefer the shortest precision that does.
  for (int prec = 1; prec <= 17; ++prec) {
    std::snprintf(buf, sizeof(buf), "%.*g", prec, v);
    if (std::strtod(buf, nullptr) == v) break;
  }
  return buf;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) return i;
  }
  throw ParseError("missing CSV column '" + name + "'");
}

CsvTable read_csv(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) {
    throw ParseError("cannot open " + file.string());
  }
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) {
    throw ParseError(file.string() + ": empty CSV");
  }
  table.header = split_csv_line(line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto cells = split_csv_line(line);
    if (cells.size() != table.header.size()) {
      throw ParseError(file.string() + ": row with " + std::to_string(cells.size()) +
                       " cells, expected " + std::to_string(table.header.size()));
    }
    table.rows.push_back(std::move(cells));
  }
  return table;
}

double parse_double(const std::string& s, const std::string& context) {
  char* end = nullptr;
  double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw ParseError(context + ": cannot parse number '" + s + "'");
  }
  return v;
}

long long parse_int(const std::string& s, const std::string& context) {
  char* end = nullptr;
  long long v = std::strtoll(s.c_str(), &end, 10);
  if (end == s.c_str() || *end != '\0') {
    throw ParseError(context + ": cannot parse integer '" + s + "'");
  }
  return v;
}

std::vector<double> load_od_demands(const std::filesystem::path& file) {
  CsvTable t = read_csv(file);
  std::size_t ci = t.column("od_index");
  std::size_t cd = t.column("demand_vph");
  std::vector<double> demands(t.rows.size(), 0.0);
  for (const auto& row : t.rows) {
    long long z = parse_int(row[ci], file.string());
    if (z < 0 || static_cast<std::size_t>(z) >= demands.size()) {
      throw ParseError(file.string() + ": od_index " + row[ci] + " out of range");
    }
    demands[static_cast<std::size_t>(z)] = parse_double(row[cd], file.string());
  }
  return demands;
}

void save_od_demands(const std::vector<double>& demands, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) {
    throw ParseError("cannot write " + file.string());
  }
  out << "od_index,demand_vph\n";
  for (std::size_t z = 0; z < demands.size(); ++z) {
    out << z << "," << fmt_double(demands[z]) << "\n";
  }
}

void load_gt_eta(const std::filesystem::path& file, PathSet& paths) {
  CsvTable t = read_csv(file);
  std::size_t ci = t.column("od_index");
  std::size_t ce = t.column("gt_eta_s");
  if (t.rows.size() != paths.size()) {
    throw ValidationError(file.string() + ": " + std::to_string(t.rows.size()) +
                          " GT rows for " + std::to_string(paths.size()) + " paths");
  }
  paths.gt_eta_s.assign(paths.size(), 0.0);
  for (const auto& row : t.rows) {
    long long z = parse_int(row[ci], file.string());
    if (z < 0 || static_cast<std::size_t>(z) >= paths.size()) {
      throw ParseError(file.string() + ": od_index " + row[ci] + " out of range");
    }
    paths.gt_eta_s[static_cast<std::size_t>(z)] = parse_double(row[ce], file.string());
  }
}

void save_gt_eta(const PathSet& paths, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) {
    throw ParseError("cannot write " + file.string());
  }
  out << "od_index,gt_eta_s\n";
  for (std::size_t p = 0; p < paths.gt_eta_s.size(); ++p) {
    out << p << "," << fmt_double(paths.gt_eta_s[p]) << "\n";
  }
}

}  // namespace odcal
