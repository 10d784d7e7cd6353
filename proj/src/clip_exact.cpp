#include "mucon/clip_exact.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "mucon/decompositions.hpp"
#include "mucon/linalg.hpp"

namespace mucon {

std::string_view to_string(ClipMethod m) noexcept {
  switch (m) {
    case ClipMethod::exact: return "exact";
    case ClipMethod::abs_polar: return "abs_polar";
    case ClipMethod::rational_filter: return "rational_filter";
    case ClipMethod::lowrank_deflate: return "lowrank_deflate";
  }
  return "unknown";
}

ClipMethod parse_clip_method(std::string_view name) {
  if (name == "exact") return ClipMethod::exact;
  if (name == "abs_polar" || name == "abs") return ClipMethod::abs_polar;
  if (name == "rational_filter" || name == "rational") return ClipMethod::rational_filter;
  if (name == "lowrank_deflate" || name == "lowrank") return ClipMethod::lowrank_deflate;
  throw std::invalid_argument("unknown clip method '" + std::string(name) + "'");
}

void require_positive_tau(double tau, const char* where) {
  if (!(tau > 0.0) || !std::isfinite(tau)) {
    throw std::invalid_argument(std::string(where) + ": tau must be positive and finite");
  }
}

ClipPlan clip_plan(std::span<const double> sigma, double tau) {
  require_positive_tau(tau, "clip_plan");
  ClipPlan plan;
  plan.tau = tau;
  for (std::size_t i = 0; i < sigma.size(); ++i) {
    if (sigma[i] > tau) {
      plan.violating_indices.push_back(i);
      plan.excess.push_back(sigma[i] - tau);
    }
  }
  plan.k_over = plan.violating_indices.size();
  return plan;
}

DenseMatrix lowrank_correction_assemble(const DenseMatrix& m, const DenseMatrix& u_over,
                                        const DenseMatrix& v_over,
                                        std::span<const double> excess) {
  if (u_over.rows() != m.rows() || v_over.rows() != m.cols() || u_over.cols() != excess.size() ||
      v_over.cols() != excess.size()) {
    throw ShapeError("lowrank_correction_assemble: factors " + shape_string(u_over) + ", " +
                     shape_string(v_over) + " with " + std::to_string(excess.size()) +
                     " excesses do not fit " + shape_string(m));
  }
  if (excess.empty()) return m;
  return m - matmul_nt(scale_cols(u_over, excess), v_over);
}

ClipResult mclip_exact(const DenseMatrix& m, double tau) {
  require_positive_tau(tau, "mclip_exact");
  ClipResult out;
  out.method = ClipMethod::exact;
  const SvdFactorization f = svd_compact(m);
  const ClipPlan plan = clip_plan(f.sigma, tau);
  out.diagnostics["rank"] = static_cast<double>(f.rank());
  out.diagnostics["k_over"] = static_cast<double>(plan.k_over);
  double min_dist = std::numeric_limits<double>::infinity();
  for (double s : f.sigma) min_dist = std::min(min_dist, std::abs(s - tau));
  if (f.rank() < std::min(m.rows(), m.cols())) min_dist = std::min(min_dist, tau);
  out.diagnostics["min_threshold_distance"] = std::isfinite(min_dist) ? min_dist : tau;

  if (plan.k_over == 0) {
    out.x = m;
    return out;
  }
  std::vector<double> clipped(f.sigma.size());
  for (std::size_t i = 0; i < clipped.size(); ++i) clipped[i] = std::min(f.sigma[i], tau);
  out.x = matmul_nt(scale_cols(f.u, clipped), f.v);
  return out;
}

}  // namespace mucon
