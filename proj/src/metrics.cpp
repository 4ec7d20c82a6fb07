#include "odcal/metrics.hpp"

#include <cmath>

#include "odcal/errors.hpp"

namespace odcal {

double nrmse(std::span<const double> gt_eta_s, std::span<const double> sim_eta_s) {
  if (gt_eta_s.empty() || gt_eta_s.size() != sim_eta_s.size()) {
    throw ValidationError("nrmse: ETA vectors must be nonempty and of equal length");
  }
  const double n = static_cast<double>(gt_eta_s.size());
  double gt_sum = 0.0;
  double sq_sum = 0.0;
  for (std::size_t p = 0; p < gt_eta_s.size(); ++p) {
    gt_sum += gt_eta_s[p];
    double d = sim_eta_s[p] - gt_eta_s[p];
    sq_sum += d * d;
  }
  if (!(gt_sum > 0.0)) {
    throw ValidationError("nrmse: ground-truth ETAs sum to zero");
  }
  return n / gt_sum * std::sqrt(sq_sum / n);
}

double nrmse(const PathSet& gt, std::span<const double> sim_eta_s) {
  if (!gt.has_gt()) {
    throw ValidationError("nrmse: path set carries no ground-truth travel times");
  }
  return nrmse(gt.gt_eta_s, sim_eta_s);
}

}  // namespace odcal
