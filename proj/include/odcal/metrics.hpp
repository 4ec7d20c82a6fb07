#pragma once

#include <span>

#include "odcal/network.hpp"

namespace odcal {

// Root mean square ETA error normalized by the mean ground-truth ETA:
// (|P| / sum(gt)) * sqrt(mean((sim - gt)^2)).
double nrmse(std::span<const double> gt_eta_s, std::span<const double> sim_eta_s);

double nrmse(const PathSet& gt, std::span<const double> sim_eta_s);

}  // namespace odcal
