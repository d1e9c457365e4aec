#pragma once

#include <array>
#include <cmath>
#include <cstddef>

namespace svpic {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    constexpr double& operator[](std::size_t i) { return i == 0 ? x : (i == 1 ? y : z); }
    constexpr const double& operator[](std::size_t i) const { return i == 0 ? x : (i == 1 ? y : z); }

    constexpr Vec3& operator+=(const Vec3& o) { x += o.x; y += o.y; z += o.z; return *this; }
    constexpr Vec3& operator-=(const Vec3& o) { x -= o.x; y -= o.y; z -= o.z; return *this; }
    constexpr Vec3& operator*=(double s) { x *= s; y *= s; z *= s; return *this; }

    friend constexpr bool operator==(const Vec3&, const Vec3&) = default;
};

constexpr Vec3 operator+(Vec3 a, const Vec3& b) { return a += b; }
constexpr Vec3 operator-(Vec3 a, const Vec3& b) { return a -= b; }
constexpr Vec3 operator*(Vec3 a, double s) { return a *= s; }
constexpr Vec3 operator*(double s, Vec3 a) { return a *= s; }
constexpr Vec3 operator/(Vec3 a, double s) { return a *= (1.0 / s); }
constexpr Vec3 operator-(const Vec3& a) { return {-a.x, -a.y, -a.z}; }

constexpr double dot(const Vec3& a, const Vec3& b) { return a.x * b.x + a.y * b.y + a.z * b.z; }

constexpr Vec3 cross(const Vec3& a, const Vec3& b) {
    return {a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x};
}

inline double norm(const Vec3& a) { return std::sqrt(dot(a, a)); }
constexpr double norm2(const Vec3& a) { return dot(a, a); }

inline bool is_finite(const Vec3& a) {
    return std::isfinite(a.x) && std::isfinite(a.y) && std::isfinite(a.z);
}

/// Symmetric-agnostic dense 3x3 matrix, row-major.
struct Mat3 {
    std::array<double, 9> m{};

    constexpr double& operator()(std::size_t i, std::size_t j) { return m[3 * i + j]; }
    constexpr const double& operator()(std::size_t i, std::size_t j) const { return m[3 * i + j]; }

    static constexpr Mat3 identity() {
        Mat3 r;
        r(0, 0) = r(1, 1) = r(2, 2) = 1.0;
        return r;
    }

    static constexpr Mat3 zero() { return Mat3{}; }

    constexpr Mat3& operator+=(const Mat3& o) {
        for (std::size_t i = 0; i < 9; ++i) m[i] += o.m[i];
        return *this;
    }
    constexpr Mat3& operator*=(double s) {
        for (std::size_t i = 0; i < 9; ++i) m[i] *= s;
        return *this;
    }

    constexpr Vec3 row(std::size_t i) const { return {m[3 * i], m[3 * i + 1], m[3 * i + 2]}; }

    constexpr Vec3 operator*(const Vec3& v) const {
        return {dot(row(0), v), dot(row(1), v), dot(row(2), v)};
    }
};

constexpr Mat3 operator+(Mat3 a, const Mat3& b) { return a += b; }
constexpr Mat3 operator*(Mat3 a, double s) { return a *= s; }
constexpr Mat3 operator*(double s, Mat3 a) { return a *= s; }

constexpr Mat3 operator-(const Mat3& a, const Mat3& b) {
    Mat3 r;
    for (std::size_t i = 0; i < 9; ++i) r.m[i] = a.m[i] - b.m[i];
    return r;
}

constexpr Mat3 matmul(const Mat3& a, const Mat3& b) {
    Mat3 r;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t k = 0; k < 3; ++k) r(i, j) += a(i, k) * b(k, j);
    return r;
}

/// a b^T
constexpr Mat3 outer(const Vec3& a, const Vec3& b) {
    Mat3 r;
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 3; ++j) r(i, j) = a[i] * b[j];
    return r;
}

constexpr double trace(const Mat3& a) { return a(0, 0) + a(1, 1) + a(2, 2); }

inline double max_abs(const Mat3& a) {
    double r = 0.0;
    for (double v : a.m) r = std::max(r, std::abs(v));
    return r;
}

/// Jacobi eigensolver for a symmetric 3x3 matrix.
/// Returns eigenvalues in `eval` and orthonormal eigenvectors as the
/// columns of `evec`. Converges in a handful of sweeps at double precision.
inline void sym_eigen(const Mat3& a, Vec3& eval, Mat3& evec) {
    Mat3 d = a;
    evec = Mat3::identity();
    for (int sweep = 0; sweep < 32; ++sweep) {
        double off = d(0, 1) * d(0, 1) + d(0, 2) * d(0, 2) + d(1, 2) * d(1, 2);
        if (off < 1e-300) break;
        for (std::size_t p = 0; p < 2; ++p) {
            for (std::size_t q = p + 1; q < 3; ++q) {
                if (d(p, q) == 0.0) continue;
                const double theta = (d(q, q) - d(p, p)) / (2.0 * d(p, q));
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (std::size_t k = 0; k < 3; ++k) {
                    const double dkp = d(k, p), dkq = d(k, q);
                    d(k, p) = c * dkp - s * dkq;
                    d(k, q) = s * dkp + c * dkq;
                }
                for (std::size_t k = 0; k < 3; ++k) {
                    const double dpk = d(p, k), dqk = d(q, k);
                    d(p, k) = c * dpk - s * dqk;
                    d(q, k) = s * dpk + c * dqk;
                }
                for (std::size_t k = 0; k < 3; ++k) {
                    const double vkp = evec(k, p), vkq = evec(k, q);
                    evec(k, p) = c * vkp - s * vkq;
                    evec(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    eval = {d(0, 0), d(1, 1), d(2, 2)};
}

/// Symmetric PSD square root via eigendecomposition.
/// Eigenvalues below zero are clipped; the caller is expected to have
/// validated that no eigenvalue is meaningfully negative.
inline Mat3 sym_sqrt(const Mat3& a) {
    Vec3 eval;
    Mat3 evec;
    sym_eigen(a, eval, evec);
    Mat3 r;
    for (std::size_t i = 0; i < 3; ++i) {
        const double s = eval[i] > 0.0 ? std::sqrt(eval[i]) : 0.0;
        for (std::size_t j = 0; j < 3; ++j)
            for (std::size_t k = 0; k < 3; ++k) r(j, k) += s * evec(j, i) * evec(k, i);
    }
    return r;
}

/// Rodrigues rotation of v about the axis/angle vector omega.
inline Vec3 rotate(const Vec3& v, const Vec3& omega) {
    const double angle = norm(omega);
    if (angle == 0.0) return v;
    const Vec3 axis = omega / angle;
    const double c = std::cos(angle), s = std::sin(angle);
    return v * c + cross(axis, v) * s + axis * (dot(axis, v) * (1.0 - c));
}

} // namespace svpic
