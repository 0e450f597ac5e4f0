#pragma once

#include <array>
#include <cmath>

namespace cem {

// Minimal 3-vector templated on the scalar type so the equilibrium solver
// can run on plain doubles or on taped AD scalars.
template <typename Real>
struct Vec3 {
    Real x{}, y{}, z{};

    Vec3() = default;
    Vec3(Real x_, Real y_, Real z_) : x(std::move(x_)), y(std::move(y_)), z(std::move(z_)) {}

    Real& operator[](int i) { return i == 0 ? x : (i == 1 ? y : z); }
    const Real& operator[](int i) const { return i == 0 ? x : (i == 1 ? y : z); }

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator-() const { return {Real(0) - x, Real(0) - y, Real(0) - z}; }
    Vec3 operator*(const Real& s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(const Real& s) const { return {x / s, y / s, z / s}; }

    Vec3& operator+=(const Vec3& o) { x = x + o.x; y = y + o.y; z = z + o.z; return *this; }
    Vec3& operator-=(const Vec3& o) { x = x - o.x; y = y - o.y; z = z - o.z; return *this; }
};

template <typename Real>
Vec3<Real> operator*(const Real& s, const Vec3<Real>& v) { return v * s; }

template <typename Real>
Real dot(const Vec3<Real>& a, const Vec3<Real>& b) {
    return a.x * b.x + a.y * b.y + a.z * b.z;
}

template <typename Real>
Real squared_norm(const Vec3<Real>& v) { return dot(v, v); }

template <typename Real>
Real norm(const Vec3<Real>& v) {
    using std::sqrt;
    return sqrt(squared_norm(v));
}

using Vec3d = Vec3<double>;

inline Vec3d cross(const Vec3d& a, const Vec3d& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline Vec3d normalized(const Vec3d& v) { return v / norm(v); }

}  // namespace cem
