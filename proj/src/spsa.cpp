#include "odcal/spsa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "odcal/errors.hpp"
#include "odcal/metrics.hpp"
#include "odcal/random.hpp"

namespace odcal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr std::uint64_t kSaltSpsa = 0x5b5a;

double record_nrmse(const PathSet* paths, const EvalRecord& rec) {
  if (paths == nullptr || !paths->has_gt() || rec.path_eta_s.size() != paths->size()) {
    return kNaN;
  }
  return nrmse(*paths, rec.path_eta_s);
}

}  // namespace

void SpsaConfig::validate() const {
  if (a < 0.0 || c < 0.0) {
    throw ValidationError("SPSA gains must be >= 0 (0 selects the automatic rule)");
  }
  if (!(gamma_exp > 0.0) || !(gamma_exp < alpha_exp) || !(alpha_exp <= 1.0)) {
    throw ValidationError("SPSA exponents must satisfy 0 < gamma_exp < alpha_exp <= 1");
  }
}

SoState run_spsa_core(const Objective& objective, const SpsaConfig& scfg, const OdVector& x0,
                      std::span<const double> x_upper, int budget, const PathSet* paths) {
  scfg.validate();
  if (budget < 3) {
    throw ValidationError("run_spsa: budget must be >= 3");
  }
  x0.validate(x_upper);
  const std::size_t dim = x0.size();

  double mean_upper = 0.0;
  for (double u : x_upper) mean_upper += u;
  mean_upper /= static_cast<double>(dim);

  const int iterations = (budget - 1) / 2;
  const double stability = scfg.A_stability >= 0.0
                               ? scfg.A_stability
                               : 0.1 * static_cast<double>(iterations);
  const double c0 = scfg.c > 0.0 ? scfg.c : std::max(1.0, 0.05 * mean_upper);
  double gain_a = scfg.a;  // 0 until auto-tuned from the first gradient estimate

  SoState st;
  st.rng_seed = scfg.seed;
  rng::Engine eng = rng::make_engine(rng::derive(scfg.seed, kSaltSpsa));

  auto evaluate = [&](const OdVector& x, int epoch) -> double {
    Evaluation e = objective(x);
    EvalRecord rec;
    rec.x = x;
    rec.loss = e.failed ? kInf : e.loss;
    rec.path_eta_s = std::move(e.path_eta_s);
    rec.replications = e.replications;
    rec.epoch = epoch;
    st.history.push_back(std::move(rec));
    if (st.history.back().loss < st.history[st.best].loss) {
      st.best = st.history.size() - 1;
    }
    st.log.push_back({epoch, static_cast<int>(st.history.size()),
                      st.history.back().loss, st.history[st.best].loss,
                      record_nrmse(paths, st.history[st.best])});
    return st.history.back().loss;
  };

  auto clipped = [&](const std::vector<double>& v) {
    OdVector out;
    out.od_index = x0.od_index;
    out.demands_vph.resize(dim);
    for (std::size_t z = 0; z < dim; ++z) {
      out.demands_vph[z] = std::clamp(v[z], 0.0, x_upper[z]);
    }
    return out;
  };

  evaluate(x0, 0);
  std::vector<double> x = x0.demands_vph;
  std::vector<double> delta(dim);
  std::vector<double> work(dim);

  for (int k = 0; static_cast<int>(st.history.size()) + 2 <= budget; ++k) {
    const double ck = c0 / std::pow(static_cast<double>(k + 1), scfg.gamma_exp);
    for (std::size_t z = 0; z < dim; ++z) {
      delta[z] = (eng() & 1u) ? 1.0 : -1.0;
    }
    for (std::size_t z = 0; z < dim; ++z) work[z] = x[z] + ck * delta[z];
    double f_plus = evaluate(clipped(work), k + 1);
    for (std::size_t z = 0; z < dim; ++z) work[z] = x[z] - ck * delta[z];
    double f_minus = evaluate(clipped(work), k + 1);

    if (!std::isfinite(f_plus) || !std::isfinite(f_minus)) {
      continue;  // gridlocked probe: keep the iterate, spend the calls
    }
    const double diff_over_2c = (f_plus - f_minus) / (2.0 * ck);
    if (gain_a == 0.0 && diff_over_2c != 0.0) {
      // First usable estimate: scale a so the first move is ~2% of the mean
      // upper bound per component.
      gain_a = 0.02 * mean_upper * std::pow(stability + 1.0, scfg.alpha_exp) /
               std::abs(diff_over_2c);
    }
    if (gain_a == 0.0) continue;
    const double ak =
        gain_a / std::pow(stability + static_cast<double>(k) + 1.0, scfg.alpha_exp);
    for (std::size_t z = 0; z < dim; ++z) {
      double ghat = diff_over_2c / delta[z];
      x[z] = std::clamp(x[z] - ak * ghat, 0.0, x_upper[z]);
    }
    st.epoch = k + 1;
  }

  if (static_cast<int>(st.history.size()) < budget) {
    evaluate(clipped(x), st.epoch + 1);  // spend the leftover call on the iterate
  }
  return st;
}

SoState run_spsa(const Network& net, const PathSet& paths, const AssignmentMatrix& A,
                 const SimConfig& cfg, const SpsaConfig& scfg, const OdVector& x0,
                 std::span<const double> x_upper, int budget) {
  (void)A;  // routes are baked into the path set; kept for interface symmetry
  Objective objective = make_sim_objective(net, paths, cfg);
  return run_spsa_core(objective, scfg, x0, x_upper, budget, &paths);
}

}  // namespace odcal
