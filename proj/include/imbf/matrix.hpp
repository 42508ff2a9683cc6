#pragma once

#include <cstddef>
#include <vector>

#include "imbf/error.hpp"

namespace imbf {

// Dense row-major matrix. Deliberately minimal: just what a small
// feed-forward classifier needs.
template <typename T>
class Matrix {
 public:
  Matrix() = default;
  Matrix(size_t rows, size_t cols, T fill = T{0})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  size_t rows() const { return rows_; }
  size_t cols() const { return cols_; }
  size_t size() const { return data_.size(); }

  T& operator()(size_t r, size_t c) { return data_[r * cols_ + c]; }
  const T& operator()(size_t r, size_t c) const { return data_[r * cols_ + c]; }

  T* row(size_t r) { return data_.data() + r * cols_; }
  const T* row(size_t r) const { return data_.data() + r * cols_; }

  T* data() { return data_.data(); }
  const T* data() const { return data_.data(); }

  bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

  bool operator==(const Matrix& o) const {
    return rows_ == o.rows_ && cols_ == o.cols_ && data_ == o.data_;
  }

 private:
  size_t rows_ = 0;
  size_t cols_ = 0;
  std::vector<T> data_;
};

namespace detail {
inline void require_shapes(bool ok, const char* what) {
  if (!ok) throw runtime_error(ErrorCode::DimMismatch, what);
}
}  // namespace detail

// C = A * B
template <typename T>
void gemm(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c) {
  detail::require_shapes(a.cols() == b.rows() && c.rows() == a.rows() && c.cols() == b.cols(),
                         "gemm: shape mismatch");
  const size_t m = a.rows(), k = a.cols(), n = b.cols();
  for (size_t i = 0; i < m; ++i) {
    T* ci = c.row(i);
    for (size_t x = 0; x < n; ++x) ci[x] = T{0};
    for (size_t p = 0; p < k; ++p) {
      const T aip = a(i, p);
      if (aip == T{0}) continue;
      const T* bp = b.row(p);
      for (size_t x = 0; x < n; ++x) ci[x] += aip * bp[x];
    }
  }
}

// C = A^T * B
template <typename T>
void gemm_at_b(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c) {
  detail::require_shapes(a.rows() == b.rows() && c.rows() == a.cols() && c.cols() == b.cols(),
                         "gemm_at_b: shape mismatch");
  const size_t m = a.cols(), k = a.rows(), n = b.cols();
  for (size_t i = 0; i < m; ++i) {
    T* ci = c.row(i);
    for (size_t x = 0; x < n; ++x) ci[x] = T{0};
  }
  for (size_t p = 0; p < k; ++p) {
    const T* ap = a.row(p);
    const T* bp = b.row(p);
    for (size_t i = 0; i < m; ++i) {
      const T api = ap[i];
      if (api == T{0}) continue;
      T* ci = c.row(i);
      for (size_t x = 0; x < n; ++x) ci[x] += api * bp[x];
    }
  }
}

// C = A * B^T
template <typename T>
void gemm_a_bt(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& c) {
  detail::require_shapes(a.cols() == b.cols() && c.rows() == a.rows() && c.cols() == b.rows(),
                         "gemm_a_bt: shape mismatch");
  const size_t m = a.rows(), k = a.cols(), n = b.rows();
  for (size_t i = 0; i < m; ++i) {
    const T* ai = a.row(i);
    T* ci = c.row(i);
    for (size_t x = 0; x < n; ++x) {
      const T* bx = b.row(x);
      T acc{0};
      for (size_t p = 0; p < k; ++p) acc += ai[p] * bx[p];
      ci[x] = acc;
    }
  }
}

template <typename T>
void add_row_vector(Matrix<T>& m, const std::vector<T>& v) {
  detail::require_shapes(m.cols() == v.size(), "add_row_vector: shape mismatch");
  for (size_t r = 0; r < m.rows(); ++r) {
    T* row = m.row(r);
    for (size_t c = 0; c < m.cols(); ++c) row[c] += v[c];
  }
}

template <typename T>
std::vector<T> column_sums(const Matrix<T>& m) {
  std::vector<T> s(m.cols(), T{0});
  for (size_t r = 0; r < m.rows(); ++r) {
    const T* row = m.row(r);
    for (size_t c = 0; c < m.cols(); ++c) s[c] += row[c];
  }
  return s;
}

}  // namespace imbf
