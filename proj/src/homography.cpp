#include "thermocae/homography.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

namespace thermocae {

Homography Homography::translation(double tx, double ty) { return Homography({1, 0, tx, 0, 1, ty, 0, 0, 1}); }

Homography Homography::scaling(double sx, double sy) { return Homography({sx, 0, 0, 0, sy, 0, 0, 0, 1}); }

Homography Homography::rotation(double degrees, Point2 center) {
  const double r = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(r), s = std::sin(r);
  return translation(center.x, center.y) * Homography({c, -s, 0, s, c, 0, 0, 0, 1}) *
         translation(-center.x, -center.y);
}

Homography Homography::from_points(const std::array<Point2, 4>& src, const std::array<Point2, 4>& dst) {
  Eigen::Matrix<double, 8, 8> a;
  Eigen::Matrix<double, 8, 1> b;
  for (int i = 0; i < 4; ++i) {
    const double x = src[i].x, y = src[i].y, u = dst[i].x, v = dst[i].y;
    a.row(2 * i) << x, y, 1, 0, 0, 0, -u * x, -u * y;
    a.row(2 * i + 1) << 0, 0, 0, x, y, 1, -v * x, -v * y;
    b(2 * i) = u;
    b(2 * i + 1) = v;
  }
  Eigen::FullPivLU<Eigen::Matrix<double, 8, 8>> lu(a);
  if (!lu.isInvertible()) throw DegenerateTransform("homography: corner points are degenerate");
  const Eigen::Matrix<double, 8, 1> h = lu.solve(b);
  return Homography({h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), 1.0});
}

Point2 Homography::apply(Point2 p) const {
  const double x = m_[0] * p.x + m_[1] * p.y + m_[2];
  const double y = m_[3] * p.x + m_[4] * p.y + m_[5];
  const double w = m_[6] * p.x + m_[7] * p.y + m_[8];
  return {x / w, y / w};
}

double Homography::determinant() const {
  return m_[0] * (m_[4] * m_[8] - m_[5] * m_[7]) - m_[1] * (m_[3] * m_[8] - m_[5] * m_[6]) +
         m_[2] * (m_[3] * m_[7] - m_[4] * m_[6]);
}

bool Homography::invertible(double tol) const { return std::abs(determinant()) > tol; }

Homography Homography::inverse() const {
  const double det = determinant();
  if (!(std::abs(det) > 1e-12)) throw DegenerateTransform("homography: matrix is singular");
  const auto& m = m_;
  std::array<double, 9> inv{
      m[4] * m[8] - m[5] * m[7], m[2] * m[7] - m[1] * m[8], m[1] * m[5] - m[2] * m[4],
      m[5] * m[6] - m[3] * m[8], m[0] * m[8] - m[2] * m[6], m[2] * m[3] - m[0] * m[5],
      m[3] * m[7] - m[4] * m[6], m[1] * m[6] - m[0] * m[7], m[0] * m[4] - m[1] * m[3]};
  for (auto& v : inv) v /= det;
  return Homography(inv).normalized();
}

Homography Homography::normalized() const {
  if (std::abs(m_[8]) < 1e-300) return *this;
  std::array<double, 9> n = m_;
  for (auto& v : n) v /= m_[8];
  return Homography(n);
}

Homography operator*(const Homography& a, const Homography& b) {
  std::array<double, 9> r{};
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      double acc = 0.0;
      for (int k = 0; k < 3; ++k) acc += a.m_[i * 3 + k] * b.m_[k * 3 + j];
      r[i * 3 + j] = acc;
    }
  return Homography(r);
}

}  // namespace thermocae
