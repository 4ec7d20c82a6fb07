#pragma once

#include <cstdint>
#include <span>

#include "odcal/mesosim.hpp"
#include "odcal/metamodel.hpp"
#include "odcal/network.hpp"

// Two-sided simultaneous perturbation stochastic approximation over the
// demand box, matched to the metamodel on budget and initial point.

namespace odcal {

struct SpsaConfig {
  double a = 0.0;            // step gain; 0: auto-tune on the first gradient estimate
  double c = 0.0;            // perturbation size, veh/h; 0: 5% of mean upper bound
  double A_stability = -1.0; // stability offset; <0: 10% of the iteration budget
  double alpha_exp = 0.602;
  double gamma_exp = 0.101;
  std::uint64_t seed = 1;

  void validate() const;
};

// Evaluates x0, then iterates: draw a Rademacher direction, evaluate the two
// clipped perturbed points, update the iterate with the gradient estimate.
// Every simulation call lands in the history; a leftover call (even budget)
// is spent on the final iterate.
SoState run_spsa_core(const Objective& objective, const SpsaConfig& scfg, const OdVector& x0,
                      std::span<const double> x_upper, int budget, const PathSet* paths);

SoState run_spsa(const Network& net, const PathSet& paths, const AssignmentMatrix& A,
                 const SimConfig& cfg, const SpsaConfig& scfg, const OdVector& x0,
                 std::span<const double> x_upper, int budget);

}  // namespace odcal
