#pragma once

// Dense linear algebra for desk-scale problems (dims <= a few thousand).
// Everything is deterministic: fixed iteration orders, no randomized pivoting,
// so identical inputs give bitwise-identical results across runs.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace minimax {

using Vec = std::vector<double>;

// ---------------------------------------------------------------- vectors

inline void check_same_dim(std::size_t a, std::size_t b, const char* where) {
  if (a != b)
    throw std::invalid_argument(std::string(where) + ": dimension mismatch (" +
                                std::to_string(a) + " vs " + std::to_string(b) + ")");
}

inline double dot(const Vec& a, const Vec& b) {
  check_same_dim(a.size(), b.size(), "dot");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

inline double norm2(const Vec& a) { return std::sqrt(dot(a, a)); }

inline double norm_inf(const Vec& a) {
  double m = 0.0;
  for (double x : a) m = std::max(m, std::abs(x));
  return m;
}

// y += alpha * x
inline void axpy(double alpha, const Vec& x, Vec& y) {
  check_same_dim(x.size(), y.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += alpha * x[i];
}

inline void scale(Vec& x, double alpha) {
  for (double& v : x) v *= alpha;
}

inline Vec scaled(Vec x, double alpha) {
  scale(x, alpha);
  return x;
}

inline Vec add(Vec a, const Vec& b) {
  axpy(1.0, b, a);
  return a;
}

inline Vec sub(Vec a, const Vec& b) {
  axpy(-1.0, b, a);
  return a;
}

inline Vec zeros(int n) { return Vec(static_cast<std::size_t>(n), 0.0); }

inline Vec unit_vec(int n, int i) {
  Vec e = zeros(n);
  e[static_cast<std::size_t>(i)] = 1.0;
  return e;
}

inline bool all_finite(const Vec& v) {
  for (double x : v)
    if (!std::isfinite(x)) return false;
  return true;
}

// ---------------------------------------------------------------- Matrix

/// Dense row-major matrix.
class Matrix {
 public:
  Matrix() : rows_(0), cols_(0) {}
  Matrix(int rows, int cols, double fill = 0.0)
      : rows_(rows), cols_(cols), a_(static_cast<std::size_t>(rows) * cols, fill) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("Matrix: negative dims");
  }

  static Matrix identity(int n) {
    Matrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  double& operator()(int i, int j) { return a_[static_cast<std::size_t>(i) * cols_ + j]; }
  double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * cols_ + j]; }

  Vec mul(const Vec& x) const {
    check_same_dim(x.size(), static_cast<std::size_t>(cols_), "Matrix::mul");
    Vec y(static_cast<std::size_t>(rows_), 0.0);
    for (int i = 0; i < rows_; ++i) {
      double s = 0.0;
      const double* row = &a_[static_cast<std::size_t>(i) * cols_];
      for (int j = 0; j < cols_; ++j) s += row[j] * x[static_cast<std::size_t>(j)];
      y[static_cast<std::size_t>(i)] = s;
    }
    return y;
  }

  // A^T x
  Vec tmul(const Vec& x) const {
    check_same_dim(x.size(), static_cast<std::size_t>(rows_), "Matrix::tmul");
    Vec y(static_cast<std::size_t>(cols_), 0.0);
    for (int i = 0; i < rows_; ++i) {
      const double xi = x[static_cast<std::size_t>(i)];
      const double* row = &a_[static_cast<std::size_t>(i) * cols_];
      for (int j = 0; j < cols_; ++j) y[static_cast<std::size_t>(j)] += row[j] * xi;
    }
    return y;
  }

  Matrix mul(const Matrix& b) const {
    check_same_dim(static_cast<std::size_t>(cols_), static_cast<std::size_t>(b.rows_),
                   "Matrix::mul");
    Matrix c(rows_, b.cols_);
    for (int i = 0; i < rows_; ++i)
      for (int k = 0; k < cols_; ++k) {
        const double aik = (*this)(i, k);
        if (aik == 0.0) continue;
        for (int j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  Matrix transposed() const {
    Matrix t(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
    return t;
  }

  Vec col(int j) const {
    Vec c(static_cast<std::size_t>(rows_));
    for (int i = 0; i < rows_; ++i) c[static_cast<std::size_t>(i)] = (*this)(i, j);
    return c;
  }

  void set_col(int j, const Vec& c) {
    check_same_dim(c.size(), static_cast<std::size_t>(rows_), "Matrix::set_col");
    for (int i = 0; i < rows_; ++i) (*this)(i, j) = c[static_cast<std::size_t>(i)];
  }

  const std::vector<double>& data() const { return a_; }

 private:
  int rows_, cols_;
  std::vector<double> a_;
};

// ---------------------------------------------------------------- SymMatrix

/// Dense symmetric matrix; set() writes both triangles so entries(i,j)==entries(j,i)
/// holds exactly at all times.
class SymMatrix {
 public:
  SymMatrix() : n_(0) {}
  explicit SymMatrix(int n) : n_(n), a_(static_cast<std::size_t>(n) * n, 0.0) {
    if (n < 0) throw std::invalid_argument("SymMatrix: negative dim");
  }

  static SymMatrix identity(int n) {
    SymMatrix s(n);
    for (int i = 0; i < n; ++i) s.set(i, i, 1.0);
    return s;
  }

  static SymMatrix diag(const Vec& d) {
    SymMatrix s(static_cast<int>(d.size()));
    for (int i = 0; i < s.n_; ++i) s.set(i, i, d[static_cast<std::size_t>(i)]);
    return s;
  }

  /// Symmetric part of a square matrix.
  static SymMatrix from_general(const Matrix& m) {
    if (m.rows() != m.cols()) throw std::invalid_argument("SymMatrix::from_general: not square");
    SymMatrix s(m.rows());
    for (int i = 0; i < m.rows(); ++i)
      for (int j = i; j < m.cols(); ++j) s.set(i, j, 0.5 * (m(i, j) + m(j, i)));
    return s;
  }

  // a b^T + b a^T, scaled
  static SymMatrix sym_outer(const Vec& a, const Vec& b, double coeff = 1.0) {
    check_same_dim(a.size(), b.size(), "sym_outer");
    SymMatrix s(static_cast<int>(a.size()));
    for (int i = 0; i < s.n_; ++i)
      for (int j = i; j < s.n_; ++j)
        s.set(i, j, coeff * (a[static_cast<std::size_t>(i)] * b[static_cast<std::size_t>(j)] +
                             a[static_cast<std::size_t>(j)] * b[static_cast<std::size_t>(i)]));
    return s;
  }

  int dim() const { return n_; }

  double operator()(int i, int j) const { return a_[static_cast<std::size_t>(i) * n_ + j]; }

  void set(int i, int j, double v) {
    a_[static_cast<std::size_t>(i) * n_ + j] = v;
    a_[static_cast<std::size_t>(j) * n_ + i] = v;
  }

  void add_at(int i, int j, double v) { set(i, j, (*this)(i, j) + v); }

  SymMatrix& operator+=(const SymMatrix& other) {
    check_same_dim(a_.size(), other.a_.size(), "SymMatrix::operator+=");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += other.a_[k];
    return *this;
  }

  SymMatrix& add_scaled(const SymMatrix& other, double alpha) {
    check_same_dim(a_.size(), other.a_.size(), "SymMatrix::add_scaled");
    for (std::size_t k = 0; k < a_.size(); ++k) a_[k] += alpha * other.a_[k];
    return *this;
  }

  SymMatrix& operator*=(double alpha) {
    for (double& v : a_) v *= alpha;
    return *this;
  }

  Vec mul(const Vec& x) const {
    check_same_dim(x.size(), static_cast<std::size_t>(n_), "SymMatrix::mul");
    Vec y(static_cast<std::size_t>(n_), 0.0);
    for (int i = 0; i < n_; ++i) {
      double s = 0.0;
      const double* row = &a_[static_cast<std::size_t>(i) * n_];
      for (int j = 0; j < n_; ++j) s += row[j] * x[static_cast<std::size_t>(j)];
      y[static_cast<std::size_t>(i)] = s;
    }
    return y;
  }

  double quad_form(const Vec& x) const { return dot(x, mul(x)); }

  double trace() const {
    double t = 0.0;
    for (int i = 0; i < n_; ++i) t += (*this)(i, i);
    return t;
  }

  /// Frobenius inner product Tr(A B).
  double inner(const SymMatrix& other) const {
    check_same_dim(a_.size(), other.a_.size(), "SymMatrix::inner");
    double s = 0.0;
    for (std::size_t k = 0; k < a_.size(); ++k) s += a_[k] * other.a_[k];
    return s;
  }

  double frob_norm() const { return std::sqrt(inner(*this)); }

  double max_abs() const {
    double m = 0.0;
    for (double v : a_) m = std::max(m, std::abs(v));
    return m;
  }

  double entry_sum() const {
    double s = 0.0;
    for (double v : a_) s += v;
    return s;
  }

  Matrix to_general() const {
    Matrix m(n_, n_);
    for (int i = 0; i < n_; ++i)
      for (int j = 0; j < n_; ++j) m(i, j) = (*this)(i, j);
    return m;
  }

  // flattened row-major view; symmetric matrices embed in R^{n*n} so that the
  // Euclidean inner product there equals the Frobenius inner product here
  const Vec& flat() const { return a_; }

  static SymMatrix from_flat(int n, const Vec& flat) {
    check_same_dim(flat.size(), static_cast<std::size_t>(n) * static_cast<std::size_t>(n),
                   "SymMatrix::from_flat");
    SymMatrix s(n);
    for (int i = 0; i < n; ++i)
      for (int j = i; j < n; ++j)
        s.set(i, j, 0.5 * (flat[static_cast<std::size_t>(i) * n + j] +
                           flat[static_cast<std::size_t>(j) * n + i]));
    return s;
  }

  bool all_finite() const {
    for (double v : a_)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  int n_;
  Vec a_;
};

inline SymMatrix operator+(SymMatrix a, const SymMatrix& b) {
  a += b;
  return a;
}

inline SymMatrix operator*(SymMatrix a, double s) {
  a *= s;
  return a;
}

/// B Z B^T for rectangular B (p x q) and symmetric Z (q x q).
inline SymMatrix congruence(const Matrix& b, const SymMatrix& z) {
  check_same_dim(static_cast<std::size_t>(b.cols()), static_cast<std::size_t>(z.dim()),
                 "congruence");
  Matrix bz = b.mul(z.to_general());
  Matrix bzbt = bz.mul(b.transposed());
  return SymMatrix::from_general(bzbt);
}

// ---------------------------------------------------------------- eigen

struct SymEigen {
  Vec values;      // ascending
  Matrix vectors;  // columns are the eigenvectors, same order
};

/// Cyclic Jacobi eigendecomposition. Deterministic sweep order; terminates when
/// every off-diagonal entry is <= offdiag_tol * max_abs(A).
inline SymEigen sym_eigen(const SymMatrix& a_in, double offdiag_tol = 1e-12,
                          int max_sweeps = 100) {
  const int n = a_in.dim();
  Matrix a = a_in.to_general();
  Matrix v = Matrix::identity(n);
  const double scale0 = a_in.max_abs();
  const double thresh = offdiag_tol * std::max(scale0, 1e-300);

  for (int sweep = 0; sweep < max_sweeps && scale0 > 0.0; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n - 1; ++p)
      for (int q = p + 1; q < n; ++q) off = std::max(off, std::abs(a(p, q)));
    if (off <= thresh) break;

    for (int p = 0; p < n - 1; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (std::abs(apq) <= thresh * 1e-3) continue;
        const double app = a(p, p), aqq = a(q, q);
        const double tau = (aqq - app) / (2.0 * apq);
        const double t = (tau >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a(k, p), akq = a(k, q);
          a(k, p) = c * akp - s * akq;
          a(k, q) = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a(p, k), aqk = a(q, k);
          a(p, k) = c * apk - s * aqk;
          a(q, k) = s * apk + c * aqk;
        }
        for (int k = 0; k < n; ++k) {
          const double vkp = v(k, p), vkq = v(k, q);
          v(k, p) = c * vkp - s * vkq;
          v(k, q) = s * vkp + c * vkq;
        }
      }
    }
  }

  SymEigen e;
  e.values.resize(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) e.values[static_cast<std::size_t>(i)] = a(i, i);

  // sort ascending, stable so equal eigenvalues keep their sweep order
  std::vector<int> idx(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  std::stable_sort(idx.begin(), idx.end(), [&](int i, int j) {
    return e.values[static_cast<std::size_t>(i)] < e.values[static_cast<std::size_t>(j)];
  });
  Vec sorted(static_cast<std::size_t>(n));
  Matrix vs(n, n);
  for (int k = 0; k < n; ++k) {
    const int i = idx[static_cast<std::size_t>(k)];
    sorted[static_cast<std::size_t>(k)] = e.values[static_cast<std::size_t>(i)];
    for (int r = 0; r < n; ++r) vs(r, k) = v(r, i);
  }
  e.values = std::move(sorted);
  e.vectors = std::move(vs);
  return e;
}

/// Rebuild V f(Lambda) V^T from an eigendecomposition.
template <typename Fn>
inline SymMatrix eigen_apply(const SymEigen& e, Fn f) {
  const int n = static_cast<int>(e.values.size());
  SymMatrix out(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      double s = 0.0;
      for (int k = 0; k < n; ++k)
        s += e.vectors(i, k) * f(e.values[static_cast<std::size_t>(k)]) * e.vectors(j, k);
      out.set(i, j, s);
    }
  return out;
}

/// Clip to the PSD cone (eigenvalue thresholding at 0).
inline SymMatrix psd_clip(const SymMatrix& a) {
  SymEigen e = sym_eigen(a);
  return eigen_apply(e, [](double l) { return std::max(l, 0.0); });
}

// ---------------------------------------------------------------- cholesky

/// Lower-triangular L with A = L L^T, or nullopt when A is not positive definite.
inline std::optional<Matrix> cholesky(const SymMatrix& a) {
  const int n = a.dim();
  Matrix l(n, n);
  for (int j = 0; j < n; ++j) {
    double d = a(j, j);
    for (int k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
    if (d <= 0.0 || !std::isfinite(d)) return std::nullopt;
    l(j, j) = std::sqrt(d);
    for (int i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (int k = 0; k < j; ++k) s -= l(i, k) * l(j, k);
      l(i, j) = s / l(j, j);
    }
  }
  return l;
}

/// Solve L y = b for lower-triangular L.
inline Vec forward_subst(const Matrix& l, const Vec& b) {
  const int n = l.rows();
  check_same_dim(b.size(), static_cast<std::size_t>(n), "forward_subst");
  Vec y(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double s = b[static_cast<std::size_t>(i)];
    for (int k = 0; k < i; ++k) s -= l(i, k) * y[static_cast<std::size_t>(k)];
    y[static_cast<std::size_t>(i)] = s / l(i, i);
  }
  return y;
}

/// Solve L^T x = y for lower-triangular L.
inline Vec backward_subst_t(const Matrix& l, const Vec& y) {
  const int n = l.rows();
  check_same_dim(y.size(), static_cast<std::size_t>(n), "backward_subst_t");
  Vec x(static_cast<std::size_t>(n));
  for (int i = n - 1; i >= 0; --i) {
    double s = y[static_cast<std::size_t>(i)];
    for (int k = i + 1; k < n; ++k) s -= l(k, i) * x[static_cast<std::size_t>(k)];
    x[static_cast<std::size_t>(i)] = s / l(i, i);
  }
  return x;
}

/// Solve (L L^T) x = b.
inline Vec cholesky_solve(const Matrix& l, const Vec& b) {
  return backward_subst_t(l, forward_subst(l, b));
}

// ---------------------------------------------------------------- QR / spans

/// Orthonormalize the columns of A in place (modified Gram-Schmidt, run twice).
/// Columns that are numerically dependent are dropped; returns the retained count.
/// The R diagonal is kept positive, so the result is seed-stable.
inline int orthonormalize_columns(Matrix& a, double rel_tol = 1e-12) {
  const int m = a.rows(), n = a.cols();
  Matrix q(m, n);
  int kept = 0;
  double scale0 = 0.0;
  for (int j = 0; j < n; ++j) scale0 = std::max(scale0, norm2(a.col(j)));
  for (int j = 0; j < n; ++j) {
    Vec v = a.col(j);
    for (int pass = 0; pass < 2; ++pass)
      for (int k = 0; k < kept; ++k) {
        const Vec qk = q.col(k);
        axpy(-dot(qk, v), qk, v);
      }
    const double nv = norm2(v);
    if (nv <= rel_tol * std::max(scale0, 1.0)) continue;
    scale(v, 1.0 / nv);
    q.set_col(kept, v);
    ++kept;
  }
  Matrix out(m, kept);
  for (int k = 0; k < kept; ++k) out.set_col(k, q.col(k));
  a = std::move(out);
  return kept;
}

/// Orthonormal basis of Ker(A), computed from the eigendecomposition of A^T A.
/// The rank cut is sigma_i <= cut_rel * sigma_max; the A^T A route cannot resolve
/// singular values below ~1e-7 * sigma_max, so cut_rel is floored there.
inline Matrix nullspace_basis(const Matrix& a, double cut_rel = 1e-9) {
  const int n = a.cols();
  SymMatrix ata(n);
  for (int i = 0; i < n; ++i)
    for (int j = i; j < n; ++j) {
      double s = 0.0;
      for (int r = 0; r < a.rows(); ++r) s += a(r, i) * a(r, j);
      ata.set(i, j, s);
    }
  SymEigen e = sym_eigen(ata);
  const double lmax = e.values.empty() ? 0.0 : std::max(e.values.back(), 0.0);
  const double cut = std::max(cut_rel, 1e-7);
  const double lcut = std::max(cut * cut * lmax, 1e-300);
  int k = 0;
  for (double l : e.values)
    if (l <= lcut) ++k;
  Matrix basis(n, k);
  for (int j = 0; j < k; ++j) basis.set_col(j, e.vectors.col(j));
  if (lmax == 0.0) return Matrix::identity(n);  // A == 0
  return basis;
}

// ---------------------------------------------------------------- digests

/// FNV-1a over raw doubles; used to fingerprint problem data in serialized estimates.
class Digest {
 public:
  Digest& add(double x) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(x));
    std::memcpy(&bits, &x, sizeof(bits));
    for (int b = 0; b < 8; ++b) {
      h_ ^= (bits >> (8 * b)) & 0xffULL;
      h_ *= 0x100000001b3ULL;
    }
    return *this;
  }
  Digest& add(int x) { return add(static_cast<double>(x)); }
  Digest& add(const Vec& v) {
    add(static_cast<int>(v.size()));
    for (double x : v) add(x);
    return *this;
  }
  Digest& add(const SymMatrix& m) {
    add(m.dim());
    for (double x : m.flat()) add(x);
    return *this;
  }
  Digest& add(const Matrix& m) {
    add(m.rows());
    add(m.cols());
    for (double x : m.data()) add(x);
    return *this;
  }

  std::string hex() const {
    static const char* digits = "0123456789abcdef";
    std::string s(16, '0');
    std::uint64_t h = h_;
    for (int i = 15; i >= 0; --i) {
      s[static_cast<std::size_t>(i)] = digits[h & 0xf];
      h >>= 4;
    }
    return s;
  }

 private:
  std::uint64_t h_ = 0xcbf29ce484222325ULL;
};

}  // namespace minimax
