// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

#ifndef WMEVAL_POSE_H_
#define WMEVAL_POSE_H_

#include <array>
#include <cmath>

namespace wmeval {

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  Vec3& operator+=(const Vec3& o) {
    x += o.x;
    y += o.y;
    z += o.z;
    return *this;
  }
  friend Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
  friend Vec3 operator-(const Vec3& a, const Vec3& b) {
    return {a.x - b.x, a.y - b.y, a.z - b.z};
  }
  friend bool operator==(const Vec3&, const Vec3&) = default;
};

// Unit quaternion, (w, x, y, z) order as on the wire.
struct Quat {
  double w = 1.0;
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;

  static Quat Identity() { return {}; }
  static Quat FromAxisAngle(const Vec3& axis, double angle);

  double Norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
  Quat Normalized() const;

  // Hamilton product; `a * b` applies a first, then b in a's body frame.
  friend Quat operator*(const Quat& a, const Quat& b) {
    return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
            a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
            a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
            a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
  }
  friend bool operator==(const Quat&, const Quat&) = default;
};

// Distance that treats q and -q as the same rotation.
double QuatDistance(const Quat& a, const Quat& b);

}  // namespace wmeval

#endif  // WMEVAL_POSE_H_
