#include <algorithm>
#include <cmath>

#include "ndstab/delay.hpp"
#include "ndstab/error.hpp"

namespace ndstab {

namespace {

// Higham (2005), degree 13.
constexpr double kPade13[] = {64764752532480000.0, 32382376266240000.0, 7771770303897600.0, 1187353796428800.0,
                              129060195264000.0,   10559470521600.0,    670442572800.0,    33522128640.0,
                              1323241920.0,        40840800.0,          960960.0,          16380.0,
                              182.0,               1.0};
constexpr double kTheta13 = 5.371920351148152;

}  // namespace

Matrix mat_exp(const Matrix& m, double s) {
  if (m.rows() != m.cols()) throw Error(ErrorCode::InvalidArgument, "mat_exp: matrix must be square");
  const auto n = m.rows();
  const Matrix id = Matrix::Identity(n, n);
  if (n == 0) return id;
  Matrix a = s * m;
  if (!a.allFinite()) throw Error(ErrorCode::InvalidArgument, "mat_exp: non-finite input");

  const double norm1 = a.cwiseAbs().colwise().sum().maxCoeff();
  int squarings = 0;
  if (norm1 > kTheta13) {
    squarings = static_cast<int>(std::ceil(std::log2(norm1 / kTheta13)));
    a /= std::ldexp(1.0, squarings);
  }

  const auto& b = kPade13;
  const Matrix a2 = a * a;
  const Matrix a4 = a2 * a2;
  const Matrix a6 = a4 * a2;
  const Matrix u = a * (a6 * (b[13] * a6 + b[11] * a4 + b[9] * a2) + b[7] * a6 + b[5] * a4 + b[3] * a2 + b[1] * id);
  const Matrix v = a6 * (b[12] * a6 + b[10] * a4 + b[8] * a2) + b[6] * a6 + b[4] * a4 + b[2] * a2 + b[0] * id;
  Matrix r = (v - u).partialPivLu().solve(v + u);
  for (int i = 0; i < squarings; ++i) r = r * r;
  return r;
}

Matrix mat_exp_triangular(const Matrix& t_in, double s) {
  const auto n = t_in.rows();
  if (t_in.cols() != n) throw Error(ErrorCode::InvalidArgument, "mat_exp_triangular: matrix must be square");
  const Matrix t = s * t_in;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < i; ++j) {
      if (t(i, j) != 0.0) throw Error(ErrorCode::InvalidArgument, "mat_exp_triangular: matrix is not upper triangular");
    }
  }
  Matrix f = Matrix::Zero(n, n);
  for (Eigen::Index i = 0; i < n; ++i) f(i, i) = std::exp(t(i, i));
  for (Eigen::Index p = 1; p < n; ++p) {
    for (Eigen::Index i = 0; i + p < n; ++i) {
      const Eigen::Index j = i + p;
      const double gap = t(j, j) - t(i, i);
      if (std::abs(gap) < 1e-8 * std::max({1.0, std::abs(t(i, i)), std::abs(t(j, j))})) {
        throw Error(ErrorCode::InvalidArgument, "mat_exp_triangular: repeated diagonal entries");
      }
      double num = t(i, j) * (f(j, j) - f(i, i));
      for (Eigen::Index k = i + 1; k < j; ++k) num += t(i, k) * f(k, j) - f(i, k) * t(k, j);
      f(i, j) = num / gap;
    }
  }
  return f;
}

}  // namespace ndstab
