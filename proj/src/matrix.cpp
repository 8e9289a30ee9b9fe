#include "artic/matrix.hpp"

#include <cmath>

namespace artic {

bool all_finite(const Matrix& m) {
  const double* p = m.data();
  for (std::size_t i = 0; i < m.size(); ++i) {
    if (!std::isfinite(p[i])) return false;
  }
  return true;
}

double sq_distance(const double* a, const double* b, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

double row_distance(const Matrix& a, const Matrix& b, std::size_t r) {
  return std::sqrt(sq_distance(a.row(r), b.row(r), a.cols()));
}

}  // namespace artic
