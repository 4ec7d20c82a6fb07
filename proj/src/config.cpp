#include "odcal/config.hpp"

#include <fstream>

#include "odcal/errors.hpp"
#include "odcal/io.hpp"

namespace odcal {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

}  // namespace

RunConfig load_run_config(const std::filesystem::path& file) {
  std::ifstream in(file);
  if (!in) {
    throw ParseError("cannot open " + file.string());
  }
  RunConfig cfg;
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(line);
    if (s.empty() || s[0] == '#') continue;
    const std::string ctx = file.string() + ":" + std::to_string(lineno);
    if (s.front() == '[' && s.back() == ']') {
      section = trim(s.substr(1, s.size() - 2));
      continue;
    }
    std::size_t eq = s.find('=');
    if (eq == std::string::npos) {
      throw ParseError(ctx + ": expected key = value");
    }
    std::string key = trim(s.substr(0, eq));
    std::string value = trim(s.substr(eq + 1));
    if (section.empty()) {
      if (key == "horizon_s") cfg.sim.horizon_s = parse_double(value, ctx);
      else if (key == "timestep_s") cfg.sim.timestep_s = parse_double(value, ctx);
      else if (key == "warmup_s") cfg.sim.warmup_s = parse_double(value, ctx);
      else if (key == "replications") cfg.sim.replications = static_cast<int>(parse_int(value, ctx));
      else if (key == "seed") cfg.sim.seed = static_cast<std::uint64_t>(parse_int(value, ctx));
      else if (key == "noise_cv") cfg.sim.noise_cv = parse_double(value, ctx);
      else throw ParseError(ctx + ": unknown simulation key '" + key + "'");
    } else if (section == "analytical") {
      if (key == "alpha1") cfg.fd.alpha1 = parse_double(value, ctx);
      else if (key == "alpha2") cfg.fd.alpha2 = parse_double(value, ctx);
      else if (key == "k_jam_vpkm_per_lane") cfg.fd.k_jam_vpkm_per_lane = parse_double(value, ctx);
      else if (key == "v_min_mps") cfg.fd.v_min_mps = parse_double(value, ctx);
      else if (key == "kappa1") cfg.fd.kappa1 = parse_double(value, ctx);
      else throw ParseError(ctx + ": unknown analytical key '" + key + "'");
    } else {
      throw ParseError(ctx + ": unknown section [" + section + "]");
    }
  }
  cfg.sim.validate();
  return cfg;
}

void save_run_config(const RunConfig& cfg, const std::filesystem::path& file) {
  std::ofstream out(file);
  if (!out) {
    throw ParseError("cannot write " + file.string());
  }
  out << "horizon_s = " << fmt_double(cfg.sim.horizon_s) << "\n"
      << "timestep_s = " << fmt_double(cfg.sim.timestep_s) << "\n"
      << "warmup_s = " << fmt_double(cfg.sim.warmup_s) << "\n"
      << "replications = " << cfg.sim.replications << "\n"
      << "seed = " << cfg.sim.seed << "\n"
      << "noise_cv = " << fmt_double(cfg.sim.noise_cv) << "\n"
      << "\n[analytical]\n"
      << "alpha1 = " << fmt_double(cfg.fd.alpha1) << "\n"
      << "alpha2 = " << fmt_double(cfg.fd.alpha2) << "\n"
      << "k_jam_vpkm_per_lane = " << fmt_double(cfg.fd.k_jam_vpkm_per_lane) << "\n"
      << "v_min_mps = " << fmt_double(cfg.fd.v_min_mps) << "\n"
      << "kappa1 = " << fmt_double(cfg.fd.kappa1) << "\n";
}

}  // namespace odcal
