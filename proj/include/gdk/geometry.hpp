#pragma once

#include <array>
#include <cmath>
#include <vector>

#include "gdk/common.hpp"

namespace gdk {

struct Vec2 {
    double x = 0.0, y = 0.0;

    Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(Vec2 o) const { return x * o.x + y * o.y; }
    double cross(Vec2 o) const { return x * o.y - y * o.x; }
    double norm() const { return std::sqrt(x * x + y * y); }
};

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(Vec3 o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(Vec3 o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(Vec3 o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(Vec3 o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm() const { return std::sqrt(x * x + y * y + z * z); }
    Vec3 normalized() const {
        const double n = norm();
        return n > 0.0 ? Vec3{x / n, y / n, z / n} : Vec3{};
    }
};

// Row-major 3x3 matrix, applied to column vectors.
struct Mat3 {
    std::array<double, 9> m{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Mat3 identity() { return Mat3{}; }

    double& at(int r, int c) { return m[static_cast<std::size_t>(r * 3 + c)]; }
    double at(int r, int c) const { return m[static_cast<std::size_t>(r * 3 + c)]; }

    Vec3 apply(Vec3 v) const {
        return {m[0] * v.x + m[1] * v.y + m[2] * v.z, m[3] * v.x + m[4] * v.y + m[5] * v.z,
                m[6] * v.x + m[7] * v.y + m[8] * v.z};
    }

    Mat3 mul(const Mat3& o) const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) {
                double s = 0.0;
                for (int k = 0; k < 3; ++k) s += at(i, k) * o.at(k, j);
                r.at(i, j) = s;
            }
        return r;
    }

    Mat3 transposed() const {
        Mat3 r;
        for (int i = 0; i < 3; ++i)
            for (int j = 0; j < 3; ++j) r.at(i, j) = at(j, i);
        return r;
    }

    static Mat3 from_columns(Vec3 c0, Vec3 c1, Vec3 c2) {
        Mat3 r;
        r.m = {c0.x, c1.x, c2.x, c0.y, c1.y, c2.y, c0.z, c1.z, c2.z};
        return r;
    }

    Vec3 column(int j) const { return {at(0, j), at(1, j), at(2, j)}; }
};

inline Mat3 rotation_x(double rad) {
    const double c = std::cos(rad), s = std::sin(rad);
    Mat3 r;
    r.m = {1, 0, 0, 0, c, -s, 0, s, c};
    return r;
}

inline Mat3 rotation_y(double rad) {
    const double c = std::cos(rad), s = std::sin(rad);
    Mat3 r;
    r.m = {c, 0, s, 0, 1, 0, -s, 0, c};
    return r;
}

inline Mat3 rotation_z(double rad) {
    const double c = std::cos(rad), s = std::sin(rad);
    Mat3 r;
    r.m = {c, -s, 0, s, c, 0, 0, 0, 1};
    return r;
}

// Euler convention used throughout: R = Rx(a) * Ry(b) * Rz(c), angles in degrees.
inline Mat3 rotation_from_euler_deg(Vec3 euler_deg) {
    return rotation_x(deg_to_rad(euler_deg.x))
        .mul(rotation_y(deg_to_rad(euler_deg.y)))
        .mul(rotation_z(deg_to_rad(euler_deg.z)));
}

// Inverse of rotation_from_euler_deg. Gimbal lock (|R02| ~ 1) resolves with c = 0.
inline Vec3 euler_deg_from_rotation(const Mat3& r) {
    const double sy = r.at(0, 2);
    double ax, ay, az;
    if (std::abs(sy) < 1.0 - 1e-12) {
        ay = std::asin(sy);
        ax = std::atan2(-r.at(1, 2), r.at(2, 2));
        az = std::atan2(-r.at(0, 1), r.at(0, 0));
    } else {
        ay = sy > 0 ? kPi / 2.0 : -kPi / 2.0;
        ax = std::atan2(r.at(2, 1), r.at(1, 1));
        az = 0.0;
    }
    return {rad_to_deg(ax), rad_to_deg(ay), rad_to_deg(az)};
}

// Eigen-decomposition of a symmetric 3x3 by cyclic Jacobi rotations.
// Returns eigenvalues (ascending) and matching orthonormal eigenvectors.
inline void jacobi_eigen_sym3(const Mat3& a_in, std::array<double, 3>& eigenvalues,
                              Mat3& eigenvectors) {
    Mat3 a = a_in;
    Mat3 v = Mat3::identity();
    for (int sweep = 0; sweep < 64; ++sweep) {
        double off = std::abs(a.at(0, 1)) + std::abs(a.at(0, 2)) + std::abs(a.at(1, 2));
        if (off < 1e-15) break;
        for (int p = 0; p < 2; ++p) {
            for (int q = p + 1; q < 3; ++q) {
                const double apq = a.at(p, q);
                if (std::abs(apq) < 1e-18) continue;
                const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < 3; ++k) {
                    const double akp = a.at(k, p), akq = a.at(k, q);
                    a.at(k, p) = c * akp - s * akq;
                    a.at(k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < 3; ++k) {
                    const double apk = a.at(p, k), aqk = a.at(q, k);
                    a.at(p, k) = c * apk - s * aqk;
                    a.at(q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < 3; ++k) {
                    const double vkp = v.at(k, p), vkq = v.at(k, q);
                    v.at(k, p) = c * vkp - s * vkq;
                    v.at(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    std::array<int, 3> order = {0, 1, 2};
    std::array<double, 3> lam = {a.at(0, 0), a.at(1, 1), a.at(2, 2)};
    for (int i = 0; i < 2; ++i)
        for (int j = i + 1; j < 3; ++j)
            if (lam[order[j]] < lam[order[i]]) std::swap(order[i], order[j]);
    for (int i = 0; i < 3; ++i) eigenvalues[i] = lam[order[i]];
    eigenvectors = Mat3::from_columns(v.column(order[0]), v.column(order[1]), v.column(order[2]));
}

// --- curve sampling (rendering only; the token pipeline never flattens curves) ---

inline Vec2 quad_bezier_point(Vec2 p0, Vec2 c, Vec2 p1, double t) {
    const double u = 1.0 - t;
    return p0 * (u * u) + c * (2.0 * u * t) + p1 * (t * t);
}

inline Vec2 cubic_bezier_point(Vec2 p0, Vec2 c0, Vec2 c1, Vec2 p1, double t) {
    const double u = 1.0 - t;
    return p0 * (u * u * u) + c0 * (3.0 * u * u * t) + c1 * (3.0 * u * t * t) + p1 * (t * t * t);
}

// Circle center for an arc from p0 to p1 with the given radius and flags.
// Follows the SVG convention: of the two candidate centers, large_arc XOR ccw
// picks the one on the left of p0->p1. Radius too small for the chord is
// clamped to the minimum feasible value.
inline Vec2 arc_center(Vec2 p0, Vec2 p1, double radius, bool large_arc, bool ccw,
                       double* effective_radius = nullptr) {
    const Vec2 chord = p1 - p0;
    const double d = chord.norm();
    double r = radius;
    if (r < d / 2.0) r = d / 2.0;
    if (effective_radius) *effective_radius = r;
    if (d == 0.0) return p0;
    const Vec2 mid = (p0 + p1) * 0.5;
    const double h = std::sqrt(std::max(0.0, r * r - d * d / 4.0));
    const Vec2 n{-chord.y / d, chord.x / d};
    const double side = (large_arc != ccw) ? 1.0 : -1.0;
    return mid + n * (h * side);
}

// Samples an arc into segments+1 points including both endpoints.
inline std::vector<Vec2> sample_arc(Vec2 p0, Vec2 p1, double radius, bool large_arc, bool ccw,
                                    int segments) {
    double r = radius;
    const Vec2 c = arc_center(p0, p1, radius, large_arc, ccw, &r);
    const double a0 = std::atan2(p0.y - c.y, p0.x - c.x);
    const double a1 = std::atan2(p1.y - c.y, p1.x - c.x);
    double delta = a1 - a0;
    if (ccw) {
        while (delta <= 0.0) delta += 2.0 * kPi;
    } else {
        while (delta >= 0.0) delta -= 2.0 * kPi;
    }
    if (large_arc && std::abs(delta) < kPi) delta += (ccw ? 2.0 * kPi : -2.0 * kPi);
    if (!large_arc && std::abs(delta) > kPi) delta += (ccw ? -2.0 * kPi : 2.0 * kPi);
    std::vector<Vec2> pts;
    pts.reserve(static_cast<std::size_t>(segments) + 1);
    for (int i = 0; i <= segments; ++i) {
        const double a = a0 + delta * (static_cast<double>(i) / segments);
        pts.push_back({c.x + r * std::cos(a), c.y + r * std::sin(a)});
    }
    pts.front() = p0;
    pts.back() = p1;
    return pts;
}

}  // namespace gdk
