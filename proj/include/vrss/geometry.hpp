#pragma once

#include <cmath>
#include <optional>

namespace vrss {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    double norm() const { return std::sqrt(x * x + y * y + z * z); }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }

    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }

    Vec3 normalized() const {
        double n = norm();
        return n > 0.0 ? Vec3{x / n, y / n, z / n} : Vec3{0.0, 0.0, 0.0};
    }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

/// Unit quaternion, (w,x,y,z) convention, Hamilton product.
struct Quat {
    double w = 1.0, x = 0.0, y = 0.0, z = 0.0;

    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
    double dot(const Quat& o) const { return w * o.w + x * o.x + y * o.y + z * o.z; }

    Quat normalized() const {
        double n = norm();
        return n > 0.0 ? Quat{w / n, x / n, y / n, z / n} : Quat{1.0, 0.0, 0.0, 0.0};
    }

    Quat conjugate() const { return {w, -x, -y, -z}; }

    Quat operator*(const Quat& o) const {
        return {w * o.w - x * o.x - y * o.y - z * o.z,
                w * o.x + x * o.w + y * o.z - z * o.y,
                w * o.y - x * o.z + y * o.w + z * o.x,
                w * o.z + x * o.y - y * o.x + z * o.w};
    }

    static Quat from_yaw(double radians) {
        return {std::cos(radians / 2.0), 0.0, 0.0, std::sin(radians / 2.0)};
    }
};

/// Rotation angle (radians, in [0, pi]) taking q1 to q2, shortest arc.
/// For unit quaternions the scalar part of q1^-1 * q2 equals dot(q1, q2).
inline double rotation_angle(const Quat& q1, const Quat& q2) {
    double c = std::fabs(q1.dot(q2));
    if (c > 1.0) c = 1.0;
    return 2.0 * std::acos(c);
}

/// Validates that a vector is unit length within 1% and returns it unchanged.
/// Values are deliberately not renormalized: parse -> serialize -> parse must
/// be bit-exact so that replaying a recording over the wire reproduces the
/// offline pipeline to the last ulp.
inline std::optional<Vec3> check_unit(const Vec3& v) {
    double n = v.norm();
    if (n < 0.99 || n > 1.01) return std::nullopt;
    return v;
}

inline std::optional<Quat> check_unit(const Quat& q) {
    double n = q.norm();
    if (n < 0.99 || n > 1.01) return std::nullopt;
    return q;
}

}  // namespace vrss
