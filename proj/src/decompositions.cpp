#include "mucon/decompositions.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mucon/linalg.hpp"

namespace mucon {

namespace {

constexpr int kMaxSweeps = 80;
constexpr double kEps = std::numeric_limits<double>::epsilon();

std::vector<std::size_t> descending_order(const std::vector<double>& values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  return order;
}

// Hestenes one-sided Jacobi on the columns of `a` (stored as rows of `w`, so
// each column is contiguous). Requires a.rows() >= a.cols().
SvdFactorization jacobi_tall(const DenseMatrix& a, double trunc_tol) {
  const std::size_t m = a.rows();
  const std::size_t n = a.cols();
  DenseMatrix w = a.transpose();         // n×m, row j = column j of a
  DenseMatrix vt = DenseMatrix::identity(n);  // row j = column j of V
  std::uint64_t flops = 0;

  // Rounding in the m-term inner products limits attainable orthogonality.
  const double tol = static_cast<double>(std::max<std::size_t>(m, 1)) * kEps;
  double worst = 0.0;
  bool converged = n < 2;
  for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
    worst = 0.0;
    bool rotated = false;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      for (std::size_t j = i + 1; j < n; ++j) {
        auto wi = w.row(i);
        auto wj = w.row(j);
        const double alpha = dot(wi, wi);
        const double beta = dot(wj, wj);
        const double gamma = dot(wi, wj);
        flops += 3 * m;
        if (alpha == 0.0 || beta == 0.0) continue;
        const double coupling = std::abs(gamma) / std::sqrt(alpha * beta);
        worst = std::max(worst, coupling);
        if (coupling <= tol) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t = std::copysign(1.0, zeta) / (std::abs(zeta) + std::hypot(1.0, zeta));
        const double c = 1.0 / std::hypot(1.0, t);
        const double s = c * t;
        for (std::size_t k = 0; k < m; ++k) {
          const double x = wi[k], y = wj[k];
          wi[k] = c * x - s * y;
          wj[k] = s * x + c * y;
        }
        auto vi = vt.row(i);
        auto vj = vt.row(j);
        for (std::size_t k = 0; k < n; ++k) {
          const double x = vi[k], y = vj[k];
          vi[k] = c * x - s * y;
          vj[k] = s * x + c * y;
        }
        flops += 4 * (m + n);
      }
    }
    converged = !rotated;
  }
  op_counts().flops += flops;
  if (!converged) throw ConvergenceError("svd_compact: Jacobi sweep cap reached", worst);

  std::vector<double> norms(n);
  for (std::size_t j = 0; j < n; ++j) norms[j] = norm_2(w.row(j));
  const auto order = descending_order(norms);
  const double sigma_max = n == 0 ? 0.0 : norms[order.front()];

  SvdFactorization f;
  std::vector<std::size_t> kept;
  for (std::size_t idx : order) {
    const double s = norms[idx];
    if (s <= 0.0 || s <= trunc_tol * sigma_max) break;
    kept.push_back(idx);
    f.sigma.push_back(s);
  }
  const std::size_t r = kept.size();
  f.u = DenseMatrix(m, r);
  f.v = DenseMatrix(n, r);
  for (std::size_t c = 0; c < r; ++c) {
    const std::size_t idx = kept[c];
    const double s = f.sigma[c];
    for (std::size_t k = 0; k < m; ++k) f.u(k, c) = w(idx, k) / s;
    for (std::size_t k = 0; k < n; ++k) f.v(k, c) = vt(idx, k);
  }
  return f;
}

}  // namespace

DenseMatrix SvdFactorization::reconstruct() const {
  return matmul_nt(scale_cols(u, sigma), v);
}

SvdFactorization svd_compact(const DenseMatrix& m, double trunc_tol) {
  if (!m.all_finite()) throw std::invalid_argument("svd_compact: non-finite input");
  if (m.rows() >= m.cols()) return jacobi_tall(m, trunc_tol);
  SvdFactorization t = jacobi_tall(m.transpose(), trunc_tol);
  std::swap(t.u, t.v);
  return t;
}

DenseMatrix SymEig::reconstruct() const {
  return apply_spectral(*this, [](double x) { return x; });
}

SymEig sym_eig(const DenseMatrix& h) {
  if (!h.is_square()) throw ShapeError("sym_eig: matrix is " + shape_string(h));
  if (!h.all_finite()) throw std::invalid_argument("sym_eig: non-finite input");
  const std::size_t n = h.rows();
  DenseMatrix a = symmetrize(h);
  DenseMatrix q = DenseMatrix::identity(n);
  const double scale = frobenius_norm(a);
  const double target = static_cast<double>(std::max<std::size_t>(n, 1)) * kEps * scale;

  auto off_norm = [&] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j) s += a(i, j) * a(i, j);
    return std::sqrt(2.0 * s);
  };

  double off = off_norm();
  int sweep = 0;
  std::uint64_t flops = 0;
  while (off > target && sweep < kMaxSweeps) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t r = p + 1; r < n; ++r) {
        const double apr = a(p, r);
        if (apr == 0.0) continue;
        const double theta = (a(r, r) - a(p, p)) / (2.0 * apr);
        const double t = std::copysign(1.0, theta) / (std::abs(theta) + std::hypot(1.0, theta));
        const double c = 1.0 / std::hypot(1.0, t);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double x = a(k, p), y = a(k, r);
          a(k, p) = c * x - s * y;
          a(k, r) = s * x + c * y;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double x = a(p, k), y = a(r, k);
          a(p, k) = c * x - s * y;
          a(r, k) = s * x + c * y;
        }
        a(p, r) = 0.0;
        a(r, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double x = q(k, p), y = q(k, r);
          q(k, p) = c * x - s * y;
          q(k, r) = s * x + c * y;
        }
        flops += 12 * n;
      }
    }
    off = off_norm();
    ++sweep;
  }
  op_counts().flops += flops;
  if (off > target) throw ConvergenceError("sym_eig: Jacobi sweep cap reached", off);

  std::vector<double> diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = a(i, i);
  const auto order = descending_order(diag);
  SymEig out{DenseMatrix(n, n), std::vector<double>(n)};
  for (std::size_t c = 0; c < n; ++c) {
    out.lambda[c] = diag[order[c]];
    for (std::size_t k = 0; k < n; ++k) out.q(k, c) = q(k, order[c]);
  }
  return out;
}

}  // namespace mucon
