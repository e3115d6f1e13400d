// Thin value-semantic wrappers over the LAPACK kernels the solvers need.
#pragma once

#include <lapacke.h>

#include <algorithm>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

namespace photoconv {

class SingularMatrixError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Column-major dense matrix.
template <class T>
class BasicMatrix {
 public:
  BasicMatrix() = default;
  BasicMatrix(int rows, int cols) : rows_(rows), cols_(cols), data_(static_cast<std::size_t>(rows) * cols, T{}) {}

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  T& operator()(int r, int c) { return data_[static_cast<std::size_t>(c) * rows_ + r]; }
  T operator()(int r, int c) const { return data_[static_cast<std::size_t>(c) * rows_ + r]; }
  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  std::vector<T> multiply(const std::vector<T>& x) const {
    std::vector<T> y(rows_, T{});
    for (int c = 0; c < cols_; ++c) {
      const T xc = x[c];
      if (xc == T{}) continue;
      const T* col = data_.data() + static_cast<std::size_t>(c) * rows_;
      for (int r = 0; r < rows_; ++r) y[r] += col[r] * xc;
    }
    return y;
  }

 private:
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

using Matrix = BasicMatrix<double>;
using CMatrix = BasicMatrix<std::complex<double>>;

/// Solves A x = b by LU with partial pivoting. A is taken by value (it is overwritten).
inline std::vector<double> solve_dense(Matrix a, std::vector<double> b) {
  if (a.rows() != a.cols() || static_cast<int>(b.size()) != a.rows())
    throw std::invalid_argument("solve_dense: dimension mismatch");
  std::vector<lapack_int> piv(a.rows());
  const lapack_int info =
      LAPACKE_dgesv(LAPACK_COL_MAJOR, a.rows(), 1, a.data(), a.rows(), piv.data(), b.data(), a.rows());
  if (info > 0) throw SingularMatrixError("dense system is singular (pivot " + std::to_string(info) + ")");
  if (info < 0) throw std::invalid_argument("LAPACKE_dgesv: bad argument " + std::to_string(-info));
  return b;
}

/// Square banded matrix in LAPACK band storage, sized for dgbsv's fill-in.
class BandMatrix {
 public:
  BandMatrix(int n, int kl, int ku) : n_(n), kl_(kl), ku_(ku), ldab_(2 * kl + ku + 1),
                                       ab_(static_cast<std::size_t>(ldab_) * n, 0.0) {}

  int size() const { return n_; }
  bool in_band(int r, int c) const { return r - c <= kl_ && c - r <= ku_; }

  double& at(int r, int c) {
    if (!in_band(r, c)) throw std::out_of_range("BandMatrix: entry outside band");
    return ab_[static_cast<std::size_t>(c) * ldab_ + (kl_ + ku_ + r - c)];
  }
  void add(int r, int c, double v) { at(r, c) += v; }

  /// LU factorization in place; later solves reuse it.
  void factor() {
    piv_.resize(n_);
    const lapack_int info = LAPACKE_dgbtrf(LAPACK_COL_MAJOR, n_, n_, kl_, ku_, ab_.data(), ldab_, piv_.data());
    if (info > 0) throw SingularMatrixError("banded system is singular (pivot " + std::to_string(info) + ")");
    if (info < 0) throw std::invalid_argument("LAPACKE_dgbtrf: bad argument " + std::to_string(-info));
    factored_ = true;
  }

  /// Solves A x = b, factoring first if needed.
  std::vector<double> solve(std::vector<double> b) {
    if (!factored_) factor();
    const lapack_int info = LAPACKE_dgbtrs(LAPACK_COL_MAJOR, 'N', n_, kl_, ku_, 1, ab_.data(), ldab_, piv_.data(),
                                           b.data(), n_);
    if (info < 0) throw std::invalid_argument("LAPACKE_dgbtrs: bad argument " + std::to_string(-info));
    return b;
  }

 private:
  int n_, kl_, ku_, ldab_;
  std::vector<double> ab_;
  std::vector<lapack_int> piv_;
  bool factored_ = false;
};

struct GeneralizedEigen {
  std::vector<std::complex<double>> values;   // NaN/inf entries are dropped
  std::vector<std::vector<std::complex<double>>> vectors;
};

/// Finite eigenpairs of A v = lambda B v (dggev). Pairs with |beta| tiny are dropped.
inline GeneralizedEigen generalized_eigen(Matrix a, Matrix b) {
  const int n = a.rows();
  std::vector<double> alphar(n), alphai(n), beta(n);
  Matrix vr(n, n);
  double dummy = 0.0;
  const lapack_int info = LAPACKE_dggev(LAPACK_COL_MAJOR, 'N', 'V', n, a.data(), n, b.data(), n,
                                        alphar.data(), alphai.data(), beta.data(), &dummy, 1, vr.data(), n);
  if (info != 0) throw std::runtime_error("LAPACKE_dggev failed with info " + std::to_string(info));
  GeneralizedEigen out;
  auto keep = [&](int j) {
    const double scale = std::max(std::abs(alphar[j]), std::abs(alphai[j]));
    return std::abs(beta[j]) > 1e-12 * std::max(1.0, scale);
  };
  for (int j = 0; j < n; ++j) {
    if (alphai[j] == 0.0) {
      if (!keep(j)) continue;
      std::vector<std::complex<double>> v(n);
      for (int r = 0; r < n; ++r) v[r] = vr(r, j);
      out.values.emplace_back(alphar[j] / beta[j], 0.0);
      out.vectors.push_back(std::move(v));
      continue;
    }
    // complex conjugate pair occupies columns j, j+1
    if (j + 1 >= n) break;
    if (keep(j)) {
      std::vector<std::complex<double>> v(n), w(n);
      for (int r = 0; r < n; ++r) {
        v[r] = {vr(r, j), vr(r, j + 1)};
        w[r] = std::conj(v[r]);
      }
      out.values.emplace_back(alphar[j] / beta[j], alphai[j] / beta[j]);
      out.vectors.push_back(std::move(v));
      out.values.emplace_back(alphar[j + 1] / beta[j + 1], alphai[j + 1] / beta[j + 1]);
      out.vectors.push_back(std::move(w));
    }
    ++j;
  }
  return out;
}

/// Finite eigenpairs of the complex pencil A v = lambda B v (zggev).
inline GeneralizedEigen generalized_eigen(CMatrix a, CMatrix b) {
  const int n = a.rows();
  std::vector<std::complex<double>> alpha(n), beta(n);
  CMatrix vr(n, n);
  std::complex<double> dummy;
  auto lc = [](std::complex<double>* p) { return reinterpret_cast<lapack_complex_double*>(p); };
  const lapack_int info = LAPACKE_zggev(LAPACK_COL_MAJOR, 'N', 'V', n, lc(a.data()), n, lc(b.data()), n,
                                        lc(alpha.data()), lc(beta.data()), lc(&dummy), 1, lc(vr.data()), n);
  if (info != 0) throw std::runtime_error("LAPACKE_zggev failed with info " + std::to_string(info));
  GeneralizedEigen out;
  for (int j = 0; j < n; ++j) {
    if (!(std::abs(beta[j]) > 1e-12 * std::max(1.0, std::abs(alpha[j])))) continue;
    std::vector<std::complex<double>> v(n);
    for (int r = 0; r < n; ++r) v[r] = vr(r, j);
    out.values.push_back(alpha[j] / beta[j]);
    out.vectors.push_back(std::move(v));
  }
  return out;
}

}  // namespace photoconv
