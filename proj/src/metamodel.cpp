#include "odcal/metamodel.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>

#include <Eigen/Dense>
#include <json.hpp>

#include "odcal/errors.hpp"
#include "odcal/io.hpp"
#include "odcal/metrics.hpp"
#include "odcal/random.hpp"

namespace odcal {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// Sub-seed salts within an optimization run.
constexpr std::uint64_t kSaltOptimizer = 0x0a1b0;
constexpr std::uint64_t kSaltSurrogate = 0x50fa;
constexpr std::uint64_t kSaltDiversify = 0xd1f5;

std::vector<double> clip_to_box(std::span<const double> x, std::span<const double> upper) {
  std::vector<double> out(x.size());
  for (std::size_t z = 0; z < x.size(); ++z) {
    out[z] = std::clamp(x[z], 0.0, upper[z]);
  }
  return out;
}

double record_nrmse(const PathSet& paths, const EvalRecord& rec) {
  if (!paths.has_gt() || rec.path_eta_s.size() != paths.size()) return kNaN;
  return nrmse(paths, rec.path_eta_s);
}

}  // namespace

MetamodelParams MetamodelParams::prior(std::size_t dim) {
  MetamodelParams p;
  p.beta.assign(dim + 2, 0.0);
  p.beta[0] = 1.0;
  return p;
}

Objective make_sim_objective(const Network& net, const PathSet& paths, const SimConfig& cfg) {
  if (!paths.has_gt()) {
    throw ValidationError("objective requires ground-truth travel times");
  }
  return [&net, &paths, cfg](const OdVector& x) {
    SimResult r = simulate_no_throw(net, paths, x, cfg);
    Evaluation e;
    e.path_eta_s = std::move(r.mean_eta_s);
    e.replications = cfg.replications;
    e.failed = r.gridlocked;
    e.loss = r.gridlocked ? kInf : r.loss;
    return e;
  };
}

MetamodelParams fit_beta(const std::vector<EvalRecord>& history, const OdVector& x_current,
                         const std::vector<double>& fa_values, const FitOptions& opts) {
  if (history.empty()) {
    throw ValidationError("fit_beta: empty history");
  }
  if (fa_values.size() != history.size()) {
    throw ValidationError("fit_beta: fa_values must match history length");
  }
  const std::size_t dim = x_current.size();
  const std::size_t n = dim + 2;
  MetamodelParams prior = MetamodelParams::prior(dim);

  std::vector<std::size_t> usable;
  for (std::size_t j = 0; j < history.size(); ++j) {
    if (std::isfinite(history[j].loss)) usable.push_back(j);
  }
  if (usable.empty()) return prior;
  const std::size_t m = usable.size();

  // Rows are weighted by proximity to the current iterate; the ridge term
  // pulls the solution toward the pure-physics surrogate (1, 0, ..., 0).
  Eigen::MatrixXd X(m, n);
  Eigen::VectorXd y(m);
  double gamma_scale = 0.0;
  for (std::size_t r = 0; r < m; ++r) {
    const EvalRecord& rec = history[usable[r]];
    double dist2 = 0.0;
    for (std::size_t z = 0; z < dim; ++z) {
      double d = rec.x.demands_vph[z] - x_current.demands_vph[z];
      dist2 += d * d;
    }
    double w = 1.0 / (1.0 + std::sqrt(dist2));
    double sw = std::sqrt(w);
    X(r, 0) = sw * fa_values[usable[r]];
    X(r, 1) = sw;
    for (std::size_t z = 0; z < dim; ++z) X(r, 2 + z) = sw * rec.x.demands_vph[z];
    y(r) = sw * rec.loss;
    gamma_scale += w * rec.loss * rec.loss;
  }
  double gamma = opts.gamma.value_or(1e-3 * gamma_scale);
  gamma = std::max(gamma, 1e-12);

  Eigen::VectorXd p = Eigen::VectorXd::Zero(n);
  p(0) = 1.0;
  Eigen::VectorXd resid = y - X * p;
  Eigen::VectorXd delta;
  if (m >= n) {
    Eigen::MatrixXd G = X.transpose() * X;
    G.diagonal().array() += gamma;
    delta = G.ldlt().solve(X.transpose() * resid);
  } else {
    // Dual form: cheaper when the history is much shorter than dim(x)+2.
    Eigen::MatrixXd K = X * X.transpose();
    K.diagonal().array() += gamma;
    delta = X.transpose() * K.ldlt().solve(resid);
  }

  MetamodelParams out;
  out.beta.resize(n);
  for (std::size_t i = 0; i < n; ++i) out.beta[i] = p(i) + delta(i);
  return out;
}

namespace {

double surrogate_value_span(const Network& net, const AssignmentMatrix& A, const FdParams& fd,
                            const PathSet& paths, const MetamodelParams& beta,
                            std::span<const double> x) {
  OdVector tmp;
  tmp.demands_vph.assign(x.begin(), x.end());
  tmp.od_index = paths.od_index;
  double fa = loss_fa(net, A, fd, paths, tmp);
  double m = beta.beta[0] * fa + beta.beta[1];
  for (std::size_t z = 0; z < x.size(); ++z) m += beta.beta[2 + z] * x[z];
  return m;
}

double surrogate_value_grad(const Network& net, const AssignmentMatrix& A, const FdParams& fd,
                            const PathSet& paths, const MetamodelParams& beta,
                            std::span<const double> x, std::vector<double>& grad) {
  double fa = loss_grad_fa(net, A, fd, paths, x, grad);
  double m = beta.beta[0] * fa + beta.beta[1];
  for (std::size_t z = 0; z < x.size(); ++z) {
    m += beta.beta[2 + z] * x[z];
    grad[z] = beta.beta[0] * grad[z] + beta.beta[2 + z];
  }
  return m;
}

struct PgdResult {
  std::vector<double> x;
  double value = kInf;
};

PgdResult projected_gradient_descent(const Network& net, const AssignmentMatrix& A,
                                     const FdParams& fd, const PathSet& paths,
                                     const MetamodelParams& beta, std::span<const double> start,
                                     std::span<const double> upper,
                                     const SurrogateOptions& opts) {
  const std::size_t dim = start.size();
  PgdResult res;
  res.x = clip_to_box(start, upper);
  std::vector<double> grad(dim);
  res.value = surrogate_value_grad(net, A, fd, paths, beta, res.x, grad);

  double mean_upper = 0.0;
  for (double u : upper) mean_upper += u;
  mean_upper /= std::max<std::size_t>(1, dim);

  double step = 1.0;
  bool step_initialized = false;
  std::vector<double> trial(dim);
  for (int iter = 0; iter < opts.max_iterations; ++iter) {
    // Unit-step projected gradient as the stationarity measure.
    double pg_norm2 = 0.0;
    for (std::size_t z = 0; z < dim; ++z) {
      double moved = std::clamp(res.x[z] - grad[z], 0.0, upper[z]);
      double d = res.x[z] - moved;
      pg_norm2 += d * d;
    }
    if (std::sqrt(pg_norm2) <= opts.tolerance * (1.0 + std::abs(res.value))) break;

    if (!step_initialized) {
      double gmax = 0.0;
      for (double g : grad) gmax = std::max(gmax, std::abs(g));
      step = (0.1 * mean_upper + 1.0) / (gmax + 1e-12);
      step_initialized = true;
    }

    bool accepted = false;
    double trial_value = 0.0;
    for (int bt = 0; bt < 60; ++bt) {
      double decrease = 0.0;
      for (std::size_t z = 0; z < dim; ++z) {
        trial[z] = std::clamp(res.x[z] - step * grad[z], 0.0, upper[z]);
        decrease += grad[z] * (res.x[z] - trial[z]);
      }
      if (decrease <= 0.0) break;  // projection allows no descent movement
      trial_value = surrogate_value_span(net, A, fd, paths, beta, trial);
      if (std::isfinite(trial_value) && trial_value <= res.value - 1e-4 * decrease) {
        accepted = true;
        break;
      }
      step *= 0.5;
    }
    if (!accepted) break;
    res.x.swap(trial);
    res.value = surrogate_value_grad(net, A, fd, paths, beta, res.x, grad);
    step *= 2.0;
  }
  return res;
}

}  // namespace

double surrogate_value(const Network& net, const AssignmentMatrix& A, const FdParams& fd,
                       const PathSet& paths, const MetamodelParams& beta, const OdVector& x) {
  return surrogate_value_span(net, A, fd, paths, beta, x.demands_vph);
}

OdVector solve_surrogate(const Network& net, const AssignmentMatrix& A, const FdParams& fd,
                         const PathSet& paths, const MetamodelParams& beta,
                         const OdVector& x_start, std::span<const double> x_upper,
                         const SurrogateOptions& opts) {
  for (double b : beta.beta) {
    if (!std::isfinite(b)) throw ValidationError("solve_surrogate: non-finite beta");
  }
  if (beta.beta.size() != x_start.size() + 2) {
    throw ValidationError("solve_surrogate: beta length must be dim(x) + 2");
  }

  PgdResult best = projected_gradient_descent(net, A, fd, paths, beta, x_start.demands_vph,
                                              x_upper, opts);
  for (int s = 0; s < opts.multistarts; ++s) {
    OdVector rand_start = random_feasible_od(x_start.od_index, x_upper,
                                          rng::derive(opts.seed, 0x5274u, s));
    PgdResult r = projected_gradient_descent(net, A, fd, paths, beta, rand_start.demands_vph,
                                             x_upper, opts);
    if (r.value < best.value) best = std::move(r);
  }

  OdVector out;
  out.demands_vph = std::move(best.x);
  out.od_index = x_start.od_index;
  return out;
}

SoState run_metamodel_core(const Objective& objective, const Network& net,
                           const AssignmentMatrix& A, const FdParams& fd, const PathSet& paths,
                           const OdVector& x0, std::span<const double> x_upper,
                           const MetamodelOptions& opts) {
  if (opts.budget < 2) {
    throw ValidationError("run_metamodel: budget must be >= 2");
  }
  x0.validate(x_upper);

  SoState st;
  st.rng_seed = opts.seed;
  std::vector<double> fa_cache;

  auto evaluate = [&](const OdVector& x, int epoch) {
    Evaluation e = objective(x);
    EvalRecord rec;
    rec.x = x;
    rec.loss = e.failed ? kInf : e.loss;
    rec.path_eta_s = std::move(e.path_eta_s);
    rec.replications = e.replications;
    rec.epoch = epoch;
    st.history.push_back(std::move(rec));
    fa_cache.push_back(loss_fa(net, A, fd, paths, x));
    if (st.history.back().loss < st.history[st.best].loss) {
      st.best = st.history.size() - 1;
    }
    st.log.push_back({epoch, static_cast<int>(st.history.size()),
                      st.history.back().loss, st.history[st.best].loss,
                      record_nrmse(paths, st.history[st.best])});
  };

  evaluate(x0, 0);
  int stall = 0;
  for (int epoch = 1; static_cast<int>(st.history.size()) < opts.budget; ++epoch) {
    MetamodelParams beta = fit_beta(st.history, st.history[st.best].x, fa_cache);

    OdVector start;
    if (stall >= opts.stall_epochs) {
      start = random_feasible_od(x0.od_index, x_upper,
                              rng::derive(opts.seed, kSaltDiversify, epoch));
      stall = 0;
    } else {
      start = st.history[st.best].x;
    }
    SurrogateOptions sopts;
    sopts.seed = rng::derive(opts.seed, kSaltSurrogate, epoch);
    OdVector candidate = solve_surrogate(net, A, fd, paths, beta, start, x_upper, sopts);

    double prev_best = st.history[st.best].loss;
    evaluate(candidate, epoch);
    if (st.history.back().loss < prev_best) {
      stall = 0;
    } else {
      ++stall;
    }
    st.epoch = epoch;
    st.final_beta = std::move(beta.beta);
  }
  return st;
}

SoState run_metamodel(const Network& net, const PathSet& paths, const AssignmentMatrix& A,
                      const FdParams& fd, const SimConfig& cfg, const OdVector& x0,
                      std::span<const double> x_upper, int budget) {
  MetamodelOptions opts;
  opts.budget = budget;
  opts.seed = rng::derive(cfg.seed, kSaltOptimizer);
  Objective objective = make_sim_objective(net, paths, cfg);
  return run_metamodel_core(objective, net, A, fd, paths, x0, x_upper, opts);
}

void save_run_log(const SoState& state, const std::filesystem::path& csv_file) {
  std::ofstream out(csv_file);
  if (!out) {
    throw ParseError("cannot write " + csv_file.string());
  }
  out << "epoch,sim_calls,candidate_loss,best_loss,nrmse_best\n";
  for (const EpochRow& row : state.log) {
    out << row.epoch << "," << row.sim_calls << "," << fmt_double(row.candidate_loss) << ","
        << fmt_double(row.best_loss) << "," << fmt_double(row.nrmse_best) << "\n";
  }
}

void save_run_solution(const SoState& state, const std::filesystem::path& json_file) {
  nlohmann::json j;
  j["best_loss"] = state.best_record().loss;
  j["best_epoch"] = state.best_record().epoch;
  j["x"] = state.best_record().x.demands_vph;
  j["beta"] = state.final_beta;
  std::ofstream out(json_file);
  if (!out) {
    throw ParseError("cannot write " + json_file.string());
  }
  out << j.dump(1) << "\n";
}

}  // namespace odcal
