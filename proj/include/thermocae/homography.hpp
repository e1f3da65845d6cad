#pragma once

#include <array>
#include <stdexcept>
#include <utility>

namespace thermocae {

class DegenerateTransform : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Point2 {
  double x = 0.0;
  double y = 0.0;
};

/// 3x3 projective transform of the plane acting on column vectors (x, y, 1).
class Homography {
 public:
  Homography() : m_{1, 0, 0, 0, 1, 0, 0, 0, 1} {}
  explicit Homography(const std::array<double, 9>& m) : m_(m) {}

  static Homography translation(double tx, double ty);
  static Homography scaling(double sx, double sy);
  /// Rotation by `degrees` about `center`. Positive angles turn +x towards +y
  /// (clockwise on screen, since image y points down).
  static Homography rotation(double degrees, Point2 center);
  /// Maps src[i] -> dst[i] for four points in general position.
  static Homography from_points(const std::array<Point2, 4>& src, const std::array<Point2, 4>& dst);

  double operator()(int r, int c) const { return m_[r * 3 + c]; }
  const std::array<double, 9>& matrix() const { return m_; }

  Point2 apply(Point2 p) const;
  double determinant() const;
  bool invertible(double tol = 1e-12) const;
  /// Throws DegenerateTransform when not invertible.
  Homography inverse() const;
  /// Scaled so m[2][2] == 1 (unchanged when m[2][2] is ~0).
  Homography normalized() const;

  /// (a * b)(p) == a(b(p))
  friend Homography operator*(const Homography& a, const Homography& b);

 private:
  std::array<double, 9> m_;
};

}  // namespace thermocae
