// Copyright 2026 The wmeval Authors
// SPDX-License-Identifier: Apache-2.0

#include "wmeval/pose.h"

#include <algorithm>

namespace wmeval {

Quat Quat::FromAxisAngle(const Vec3& axis, double angle) {
  const double n = std::sqrt(axis.x * axis.x + axis.y * axis.y + axis.z * axis.z);
  if (n == 0.0) return Identity();
  const double s = std::sin(angle / 2.0) / n;
  return {std::cos(angle / 2.0), axis.x * s, axis.y * s, axis.z * s};
}

Quat Quat::Normalized() const {
  const double n = Norm();
  return {w / n, x / n, y / n, z / n};
}

double QuatDistance(const Quat& a, const Quat& b) {
  const auto diff = [](const Quat& p, const Quat& q, double sign) {
    const double dw = p.w - sign * q.w, dx = p.x - sign * q.x;
    const double dy = p.y - sign * q.y, dz = p.z - sign * q.z;
    return std::sqrt(dw * dw + dx * dx + dy * dy + dz * dz);
  };
  return std::min(diff(a, b, 1.0), diff(a, b, -1.0));
}

}  // namespace wmeval
