#pragma once

#include <span>
#include <vector>

#include "odcal/network.hpp"

// Deterministic macroscopic network model: maps OD demand to per-segment
// densities and speeds through a speed-density fundamental diagram, sums
// segment traversal times into analytical path travel times, and provides
// the squared-residual loss against ground truth together with its exact
// gradient. All parameters are shared across segments.

namespace odcal {

struct FdParams {
  double alpha1 = 2.0;
  double alpha2 = 2.0;
  double k_jam_vpkm_per_lane = 150.0;
  double v_min_mps = 1.0;
  // Demand -> density conversion, hours/vehicle. 0 means "derive from the
  // network": per-lane demand at the mean segment capacity maps to 0.9 k_jam.
  double kappa1 = 0.0;

  void validate(const Network& net) const;
  FdParams resolved(const Network& net) const;  // kappa1 filled in
};

struct AnalyticalState {
  std::vector<double> lambda_vph;        // per segment
  std::vector<double> density_vpkm_lane; // per segment, clamped to [0, k_jam]
  std::vector<double> speed_mps;         // per segment
  std::vector<double> path_eta_s;        // per path (when paths supplied)
};

// Speed from density: v_min + (v_max - v_min) * (1 - (k/k_jam)^a1)^a2,
// with k clamped to [0, k_jam].
double fd_speed(double k, double k_jam, double alpha1, double alpha2, double v_min,
                double v_max);

// dv/dk at unclamped k in (0, k_jam); callers zero it at the clamp.
double fd_speed_deriv(double k, double k_jam, double alpha1, double alpha2, double v_min,
                      double v_max);

AnalyticalState forward(const Network& net, const AssignmentMatrix& A, const FdParams& fd,
                        const OdVector& x, const PathSet* paths = nullptr);

// Mean squared residual between GT and analytical path times, seconds^2.
double loss_fa(const Network& net, const AssignmentMatrix& A, const FdParams& fd,
               const PathSet& paths, const OdVector& x);

std::vector<double> grad_fa(const Network& net, const AssignmentMatrix& A, const FdParams& fd,
                            const PathSet& paths, const OdVector& x);

// Loss and gradient in one pass; the workhorse of the surrogate solver.
double loss_grad_fa(const Network& net, const AssignmentMatrix& A, const FdParams& fd,
                    const PathSet& paths, std::span<const double> x,
                    std::vector<double>& grad_out);

}  // namespace odcal
