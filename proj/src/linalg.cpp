#include "mucon/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "mucon/decompositions.hpp"
#include "mucon/random.hpp"

namespace mucon {

OpCounts& op_counts() noexcept {
  thread_local OpCounts counts;
  return counts;
}

OpCounts OpCountScope::elapsed() const noexcept {
  const OpCounts& now = op_counts();
  return {now.matmuls - start_.matmuls, now.flops - start_.flops};
}

namespace {

void tally(std::size_t m, std::size_t k, std::size_t n) noexcept {
  auto& c = op_counts();
  ++c.matmuls;
  c.flops += static_cast<std::uint64_t>(m) * k * n;
}

}  // namespace

DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.rows()) {
    throw ShapeError("matmul: inner dimensions differ " + shape_string(a) + " * " +
                     shape_string(b));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  tally(m, k, n);
  DenseMatrix c(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    auto ci = c.row(i);
    auto ai = a.row(i);
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = ai[p];
      if (aip == 0.0) continue;
      auto bp = b.row(p);
      for (std::size_t j = 0; j < n; ++j) ci[j] += aip * bp[j];
    }
  }
  return c;
}

DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.rows() != b.rows()) {
    throw ShapeError("matmul_tn: row counts differ " + shape_string(a) + " vs " +
                     shape_string(b));
  }
  const std::size_t m = a.cols(), k = a.rows(), n = b.cols();
  tally(m, k, n);
  DenseMatrix c(m, n);
  for (std::size_t p = 0; p < k; ++p) {
    auto ap = a.row(p);
    auto bp = b.row(p);
    for (std::size_t i = 0; i < m; ++i) {
      const double api = ap[i];
      if (api == 0.0) continue;
      auto ci = c.row(i);
      for (std::size_t j = 0; j < n; ++j) ci[j] += api * bp[j];
    }
  }
  return c;
}

DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
  if (a.cols() != b.cols()) {
    throw ShapeError("matmul_nt: column counts differ " + shape_string(a) + " vs " +
                     shape_string(b));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.rows();
  tally(m, k, n);
  DenseMatrix c(m, n);
  for (std::size_t i = 0; i < m; ++i) {
    auto ai = a.row(i);
    for (std::size_t j = 0; j < n; ++j) c(i, j) = dot(ai, b.row(j));
  }
  return c;
}

std::vector<double> matvec(const DenseMatrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) throw ShapeError("matvec: length mismatch");
  op_counts().flops += a.size();
  std::vector<double> y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
  return y;
}

std::vector<double> matvec_t(const DenseMatrix& a, std::span<const double> x) {
  if (a.rows() != x.size()) throw ShapeError("matvec_t: length mismatch");
  op_counts().flops += a.size();
  std::vector<double> y(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double xi = x[i];
    auto ai = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) y[j] += xi * ai[j];
  }
  return y;
}

DenseMatrix symmetrize(const DenseMatrix& a) {
  if (!a.is_square()) throw ShapeError("symmetrize: matrix is " + shape_string(a));
  DenseMatrix s(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    s(i, i) = a(i, i);
    for (std::size_t j = i + 1; j < a.cols(); ++j) {
      const double v = 0.5 * (a(i, j) + a(j, i));
      s(i, j) = v;
      s(j, i) = v;
    }
  }
  return s;
}

DenseMatrix add_identity(DenseMatrix a, double s) {
  if (!a.is_square()) throw ShapeError("add_identity: matrix is " + shape_string(a));
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += s;
  return a;
}

DenseMatrix scale_cols(DenseMatrix a, std::span<const double> d) {
  if (d.size() != a.cols()) throw ShapeError("scale_cols: length mismatch");
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ai = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) ai[j] *= d[j];
  }
  return a;
}

DenseMatrix scale_rows(DenseMatrix a, std::span<const double> d) {
  if (d.size() != a.rows()) throw ShapeError("scale_rows: length mismatch");
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (double& x : a.row(i)) x *= d[i];
  return a;
}

double frobenius_norm(const DenseMatrix& a) noexcept { return norm_2(a.data()); }

double norm_1(const DenseMatrix& a) noexcept {
  std::vector<double> sums(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    auto ai = a.row(i);
    for (std::size_t j = 0; j < a.cols(); ++j) sums[j] += std::abs(ai[j]);
  }
  return sums.empty() ? 0.0 : *std::max_element(sums.begin(), sums.end());
}

double norm_inf(const DenseMatrix& a) noexcept {
  double best = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double s = 0.0;
    for (double x : a.row(i)) s += std::abs(x);
    best = std::max(best, s);
  }
  return best;
}

double max_abs(const DenseMatrix& a) noexcept {
  double best = 0.0;
  for (double x : a.data()) best = std::max(best, std::abs(x));
  return best;
}

double dot(std::span<const double> x, std::span<const double> y) noexcept {
  double s = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s;
}

double norm_2(std::span<const double> x) noexcept {
  // Scaled accumulation so that very large or tiny entries do not overflow.
  double scale = 0.0;
  for (double v : x) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return 0.0;
  double s = 0.0;
  for (double v : x) {
    const double t = v / scale;
    s += t * t;
  }
  return scale * std::sqrt(s);
}

double spectral_norm_upper_bound(const DenseMatrix& a) noexcept {
  return std::min(frobenius_norm(a), std::sqrt(norm_1(a) * norm_inf(a)));
}

double spectral_norm(const DenseMatrix& a) {
  if (a.empty() || max_abs(a) == 0.0) return 0.0;
  constexpr int kMaxIter = 1000;
  constexpr double kResidualTol = 1e-12;
  constexpr std::uint64_t kStartSeed = 0x9e3779b97f4a7c15ULL;

  // Iterate on the Gram matrix of the shorter side.
  const bool use_rows = a.rows() < a.cols();
  const std::size_t n = use_rows ? a.rows() : a.cols();
  Rng rng(kStartSeed);
  std::vector<double> v(n);
  for (double& x : v) x = rng.normal();
  double nv = norm_2(v);
  for (double& x : v) x /= nv;

  for (int it = 0; it < kMaxIter; ++it) {
    std::vector<double> w = use_rows ? matvec(a, matvec_t(a, v)) : matvec_t(a, matvec(a, v));
    const double lambda = dot(v, w);
    double r2 = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double d = w[i] - lambda * v[i];
      r2 += d * d;
    }
    const double nw = norm_2(w);
    if (nw == 0.0) break;
    if (std::sqrt(r2) <= kResidualTol * lambda) return std::sqrt(lambda);
    for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / nw;
  }
  const SvdFactorization f = svd_compact(a);
  return f.sigma.empty() ? 0.0 : f.sigma.front();
}

double rms_vector_norm(std::span<const double> a, std::size_t d) {
  if (d == 0) throw std::invalid_argument("rms_vector_norm: dimension must be positive");
  return norm_2(a) / std::sqrt(static_cast<double>(d));
}

double rms_operator_norm(const DenseMatrix& m) {
  if (m.rows() == 0 || m.cols() == 0) throw ShapeError("rms_operator_norm: empty matrix");
  return std::sqrt(static_cast<double>(m.cols()) / static_cast<double>(m.rows())) *
         spectral_norm(m);
}

double relative_error(const DenseMatrix& a, const DenseMatrix& b) {
  require_same_shape(a, b, "relative_error");
  const double denom = std::max(frobenius_norm(b), std::numeric_limits<double>::min());
  return frobenius_norm(a - b) / denom;
}

DenseMatrix orthonormalize_columns(const DenseMatrix& a, double drop_tol) {
  // Work on rows of the transpose so that each column is contiguous.
  const DenseMatrix at = a.transpose();
  const std::size_t m = a.rows();
  double max_norm = 0.0;
  for (std::size_t j = 0; j < at.rows(); ++j) max_norm = std::max(max_norm, norm_2(at.row(j)));

  std::vector<std::vector<double>> basis;
  if (max_norm > 0.0) {
    for (std::size_t j = 0; j < at.rows(); ++j) {
      std::vector<double> v(at.row(j).begin(), at.row(j).end());
      for (int pass = 0; pass < 2; ++pass) {
        for (const auto& q : basis) {
          const double c = dot(q, v);
          for (std::size_t i = 0; i < m; ++i) v[i] -= c * q[i];
        }
      }
      const double nv = norm_2(v);
      if (nv <= drop_tol * max_norm || basis.size() == m) continue;
      for (double& x : v) x /= nv;
      basis.push_back(std::move(v));
    }
  }
  op_counts().flops += 2 * static_cast<std::uint64_t>(m) * at.rows() * basis.size();
  DenseMatrix q(m, basis.size());
  for (std::size_t j = 0; j < basis.size(); ++j) q.set_col(j, basis[j]);
  return q;
}

// ---------------------------------------------------------------------------
// LU

std::optional<LuFactorization> LuFactorization::factor(const DenseMatrix& a) {
  if (!a.is_square()) throw ShapeError("LuFactorization: matrix is " + shape_string(a));
  const std::size_t n = a.rows();
  LuFactorization f;
  f.lu_ = a;
  f.perm_.resize(n);
  std::iota(f.perm_.begin(), f.perm_.end(), std::size_t{0});
  DenseMatrix& lu = f.lu_;
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(lu(i, k)) > std::abs(lu(p, k))) p = i;
    if (lu(p, k) == 0.0) return std::nullopt;
    if (p != k) {
      std::swap_ranges(lu.row(k).begin(), lu.row(k).end(), lu.row(p).begin());
      std::swap(f.perm_[k], f.perm_[p]);
    }
    const double pivot = lu(k, k);
    for (std::size_t i = k + 1; i < n; ++i) {
      const double l = lu(i, k) / pivot;
      lu(i, k) = l;
      if (l == 0.0) continue;
      for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= l * lu(k, j);
    }
  }
  op_counts().flops += static_cast<std::uint64_t>(n) * n * n / 3;
  return f;
}

DenseMatrix LuFactorization::solve(const DenseMatrix& rhs) const {
  const std::size_t n = lu_.rows();
  if (rhs.rows() != n) throw ShapeError("LuFactorization::solve: rhs rows mismatch");
  const std::size_t c = rhs.cols();
  DenseMatrix x(n, c);
  for (std::size_t i = 0; i < n; ++i) std::copy(rhs.row(perm_[i]).begin(), rhs.row(perm_[i]).end(), x.row(i).begin());
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = x.row(i);
    for (std::size_t k = 0; k < i; ++k) {
      const double l = lu_(i, k);
      if (l == 0.0) continue;
      auto xk = x.row(k);
      for (std::size_t j = 0; j < c; ++j) xi[j] -= l * xk[j];
    }
  }
  for (std::size_t ii = n; ii-- > 0;) {
    auto xi = x.row(ii);
    for (std::size_t k = ii + 1; k < n; ++k) {
      const double u = lu_(ii, k);
      if (u == 0.0) continue;
      auto xk = x.row(k);
      for (std::size_t j = 0; j < c; ++j) xi[j] -= u * xk[j];
    }
    const double d = lu_(ii, ii);
    for (double& v : xi) v /= d;
  }
  op_counts().flops += static_cast<std::uint64_t>(n) * n * c;
  return x;
}

DenseMatrix LuFactorization::inverse() const { return solve(DenseMatrix::identity(lu_.rows())); }

// ---------------------------------------------------------------------------
// LDLᵀ

std::optional<LdltFactorization> LdltFactorization::factor(const DenseMatrix& a,
                                                           double pivot_floor) {
  if (!a.is_square()) throw ShapeError("LdltFactorization: matrix is " + shape_string(a));
  const std::size_t n = a.rows();
  DenseMatrix w = symmetrize(a);
  LdltFactorization f;
  f.perm_.resize(n);
  std::iota(f.perm_.begin(), f.perm_.end(), std::size_t{0});
  f.d_.assign(n, 0.0);
  double max_diag = 0.0;
  for (std::size_t i = 0; i < n; ++i) max_diag = std::max(max_diag, std::abs(w(i, i)));
  const double floor = pivot_floor * max_diag;

  for (std::size_t k = 0; k < n; ++k) {
    std::size_t p = k;
    for (std::size_t i = k + 1; i < n; ++i)
      if (std::abs(w(i, i)) > std::abs(w(p, p))) p = i;
    if (p != k) {
      // Symmetric swap of rows and columns k and p, including the computed
      // multipliers in columns < k.
      std::swap_ranges(w.row(k).begin(), w.row(k).end(), w.row(p).begin());
      for (std::size_t i = 0; i < n; ++i) std::swap(w(i, k), w(i, p));
      std::swap(f.perm_[k], f.perm_[p]);
    }
    const double d = w(k, k);
    if (d == 0.0 || std::abs(d) <= floor) return std::nullopt;
    f.d_[k] = d;
    for (std::size_t i = k + 1; i < n; ++i) {
      const double l = w(i, k) / d;
      for (std::size_t j = k + 1; j <= i; ++j) {
        w(i, j) -= l * w(j, k);
        w(j, i) = w(i, j);
      }
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      w(i, k) /= d;
      w(k, i) = 0.0;
    }
  }
  f.l_ = DenseMatrix(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    f.l_(i, i) = 1.0;
    for (std::size_t j = 0; j < i; ++j) f.l_(i, j) = w(i, j);
  }
  op_counts().flops += static_cast<std::uint64_t>(n) * n * n / 6;
  return f;
}

DenseMatrix LdltFactorization::solve(const DenseMatrix& rhs) const {
  const std::size_t n = l_.rows();
  if (rhs.rows() != n) throw ShapeError("LdltFactorization::solve: rhs rows mismatch");
  const std::size_t c = rhs.cols();
  DenseMatrix x(n, c);
  for (std::size_t i = 0; i < n; ++i) std::copy(rhs.row(perm_[i]).begin(), rhs.row(perm_[i]).end(), x.row(i).begin());
  for (std::size_t i = 0; i < n; ++i) {
    auto xi = x.row(i);
    for (std::size_t k = 0; k < i; ++k) {
      const double l = l_(i, k);
      if (l == 0.0) continue;
      auto xk = x.row(k);
      for (std::size_t j = 0; j < c; ++j) xi[j] -= l * xk[j];
    }
  }
  for (std::size_t i = 0; i < n; ++i)
    for (double& v : x.row(i)) v /= d_[i];
  for (std::size_t ii = n; ii-- > 0;) {
    auto xi = x.row(ii);
    for (std::size_t k = ii + 1; k < n; ++k) {
      const double l = l_(k, ii);
      if (l == 0.0) continue;
      auto xk = x.row(k);
      for (std::size_t j = 0; j < c; ++j) xi[j] -= l * xk[j];
    }
  }
  DenseMatrix out(n, c);
  for (std::size_t i = 0; i < n; ++i) std::copy(x.row(i).begin(), x.row(i).end(), out.row(perm_[i]).begin());
  op_counts().flops += static_cast<std::uint64_t>(n) * n * c;
  return out;
}

DenseMatrix LdltFactorization::inverse() const { return solve(DenseMatrix::identity(l_.rows())); }

double LdltFactorization::min_pivot() const noexcept {
  double best = std::numeric_limits<double>::infinity();
  for (double d : d_) best = std::min(best, std::abs(d));
  return d_.empty() ? 0.0 : best;
}

double LdltFactorization::max_pivot() const noexcept {
  double best = 0.0;
  for (double d : d_) best = std::max(best, std::abs(d));
  return best;
}

}  // namespace mucon
