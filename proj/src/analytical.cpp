#include "odcal/analytical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "odcal/errors.hpp"

namespace odcal {

void FdParams::validate(const Network& net) const {
  if (!(alpha1 > 0.0) || !(alpha2 > 0.0)) {
    throw ValidationError("fundamental diagram exponents must be > 0");
  }
  if (!(k_jam_vpkm_per_lane > 0.0)) {
    throw ValidationError("k_jam must be > 0");
  }
  if (!(kappa1 >= 0.0)) {
    throw ValidationError("kappa1 must be >= 0");
  }
  double v_max_min = std::numeric_limits<double>::infinity();
  for (const Segment& s : net.segments()) v_max_min = std::min(v_max_min, s.v_max_mps);
  if (!(v_min_mps > 0.0) || !(v_min_mps < v_max_min)) {
    throw ValidationError("v_min must lie in (0, min segment v_max)");
  }
}

FdParams FdParams::resolved(const Network& net) const {
  FdParams out = *this;
  if (out.kappa1 == 0.0) {
    out.kappa1 = 0.9 / net.mean_capacity_per_lane_vph();
  }
  return out;
}

double fd_speed(double k, double k_jam, double alpha1, double alpha2, double v_min,
                double v_max) {
  double ratio = std::clamp(k / k_jam, 0.0, 1.0);
  return v_min + (v_max - v_min) * std::pow(1.0 - std::pow(ratio, alpha1), alpha2);
}

double fd_speed_deriv(double k, double k_jam, double alpha1, double alpha2, double v_min,
                      double v_max) {
  double ratio = k / k_jam;
  double ra = std::pow(ratio, alpha1);
  return -(v_max - v_min) * alpha2 * std::pow(1.0 - ra, alpha2 - 1.0) * alpha1 *
         std::pow(ratio, alpha1 - 1.0) / k_jam;
}

AnalyticalState forward(const Network& net, const AssignmentMatrix& A, const FdParams& fd_in,
                        const OdVector& x, const PathSet* paths) {
  const FdParams fd = fd_in.resolved(net);
  AnalyticalState st;
  st.lambda_vph = A.apply(x.demands_vph);
  const std::size_t n = net.num_segments();
  st.density_vpkm_lane.resize(n);
  st.speed_mps.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const Segment& s = net.segments()[i];
    double k = fd.kappa1 * fd.k_jam_vpkm_per_lane * st.lambda_vph[i] / s.lanes;
    k = std::clamp(k, 0.0, fd.k_jam_vpkm_per_lane);
    st.density_vpkm_lane[i] = k;
    st.speed_mps[i] = fd_speed(k, fd.k_jam_vpkm_per_lane, fd.alpha1, fd.alpha2, fd.v_min_mps,
                               s.v_max_mps);
  }
  if (paths != nullptr) {
    st.path_eta_s.resize(paths->size());
    for (std::size_t p = 0; p < paths->size(); ++p) {
      double t = 0.0;
      for (std::uint32_t i : A.column(p)) {
        t += net.segments()[i].length_m / st.speed_mps[i];
      }
      st.path_eta_s[p] = t;
    }
  }
  return st;
}

double loss_fa(const Network& net, const AssignmentMatrix& A, const FdParams& fd,
               const PathSet& paths, const OdVector& x) {
  if (!paths.has_gt()) {
    throw ValidationError("loss_fa: path set carries no ground-truth travel times");
  }
  AnalyticalState st = forward(net, A, fd, x, &paths);
  double acc = 0.0;
  for (std::size_t p = 0; p < paths.size(); ++p) {
    double r = paths.gt_eta_s[p] - st.path_eta_s[p];
    acc += r * r;
  }
  return acc / static_cast<double>(paths.size());
}

std::vector<double> grad_fa(const Network& net, const AssignmentMatrix& A, const FdParams& fd,
                            const PathSet& paths, const OdVector& x) {
  std::vector<double> g;
  loss_grad_fa(net, A, fd, paths, x.demands_vph, g);
  return g;
}

double loss_grad_fa(const Network& net, const AssignmentMatrix& A, const FdParams& fd_in,
                    const PathSet& paths, std::span<const double> x,
                    std::vector<double>& grad_out) {
  const FdParams fd = fd_in.resolved(net);
  const std::size_t n = net.num_segments();
  const std::size_t np = paths.size();
  if (!paths.has_gt()) {
    throw ValidationError("loss_fa: path set carries no ground-truth travel times");
  }
  if (x.size() != A.cols() || np != A.cols()) {
    throw ValidationError("loss_fa: OD vector, assignment matrix and path set disagree");
  }

  std::vector<double> lambda = A.apply(x);
  std::vector<double> speed(n);
  // d_i = d(l_i / v_i)/d(lambda_i); zero where the density clamp is active.
  std::vector<double> dtime_dlambda(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    const Segment& s = net.segments()[i];
    double conv = fd.kappa1 * fd.k_jam_vpkm_per_lane / s.lanes;
    double k_raw = conv * lambda[i];
    double k = std::clamp(k_raw, 0.0, fd.k_jam_vpkm_per_lane);
    double v = fd_speed(k, fd.k_jam_vpkm_per_lane, fd.alpha1, fd.alpha2, fd.v_min_mps,
                        s.v_max_mps);
    speed[i] = v;
    if (k_raw > 0.0 && k_raw < fd.k_jam_vpkm_per_lane) {
      double dv = fd_speed_deriv(k, fd.k_jam_vpkm_per_lane, fd.alpha1, fd.alpha2,
                                 fd.v_min_mps, s.v_max_mps);
      dtime_dlambda[i] = -(s.length_m / (v * v)) * dv * conv;
    }
  }

  // Residual per path, then accumulate residuals onto segments (s = A r) and
  // pull back through the chain rule (g = A^T (d .* s)).
  double loss = 0.0;
  std::vector<double> seg_residual(n, 0.0);
  for (std::size_t p = 0; p < np; ++p) {
    double eta = 0.0;
    for (std::uint32_t i : A.column(p)) eta += net.segments()[i].length_m / speed[i];
    double diff = eta - paths.gt_eta_s[p];
    loss += diff * diff;
    double r = 2.0 * diff / static_cast<double>(np);
    for (std::uint32_t i : A.column(p)) seg_residual[i] += r;
  }
  loss /= static_cast<double>(np);

  grad_out.assign(x.size(), 0.0);
  for (std::size_t z = 0; z < x.size(); ++z) {
    double acc = 0.0;
    for (std::uint32_t i : A.column(z)) acc += seg_residual[i] * dtime_dlambda[i];
    grad_out[z] = acc;
  }
  return loss;
}

}  // namespace odcal
