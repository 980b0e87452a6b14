#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace promofraud {

using Vec = std::vector<double>;

// Dense row-major matrix; just enough structure for the model kernels.
struct Mat {
  int rows = 0;
  int cols = 0;
  Vec v;

  Mat() = default;
  Mat(int r, int c) : rows(r), cols(c), v(static_cast<std::size_t>(r) * c, 0.0) {}

  double& operator()(int r, int c) { return v[static_cast<std::size_t>(r) * cols + c]; }
  double operator()(int r, int c) const {
    return v[static_cast<std::size_t>(r) * cols + c];
  }

  const double* row(int r) const { return v.data() + static_cast<std::size_t>(r) * cols; }
  double* row(int r) { return v.data() + static_cast<std::size_t>(r) * cols; }

  void fill(double x) { std::fill(v.begin(), v.end(), x); }
};

// y[c] = sum_u x[u] * m(u, c)  (row vector times matrix)
inline void vec_mat(const double* x, const Mat& m, double* y) {
  for (int c = 0; c < m.cols; ++c) y[c] = 0.0;
  for (int r = 0; r < m.rows; ++r) {
    const double xr = x[r];
    if (xr == 0.0) continue;
    const double* mrow = m.row(r);
    for (int c = 0; c < m.cols; ++c) y[c] += xr * mrow[c];
  }
}

inline double dot(const double* a, const double* b, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace promofraud
