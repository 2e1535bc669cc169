// Basic point containers and the normalization used throughout the library.
// All coordinates are dimensionless after unit-sphere normalization.

#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace sdn {

struct Vec3 {
    double x = 0.0, y = 0.0, z = 0.0;

    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    Vec3 operator/(double s) const { return {x / s, y / s, z / s}; }
    Vec3& operator+=(const Vec3& o) {
        x += o.x; y += o.y; z += o.z;
        return *this;
    }
    Vec3& operator-=(const Vec3& o) {
        x -= o.x; y -= o.y; z -= o.z;
        return *this;
    }
    bool operator==(const Vec3& o) const = default;

    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    Vec3 cross(const Vec3& o) const {
        return {y * o.z - z * o.y, z * o.x - x * o.z, x * o.y - y * o.x};
    }
    double norm2() const { return x * x + y * y + z * z; }
    double norm() const { return std::sqrt(norm2()); }
    bool finite() const { return std::isfinite(x) && std::isfinite(y) && std::isfinite(z); }
};

inline Vec3 operator*(double s, const Vec3& v) { return v * s; }

using Point3 = Vec3;

/// Ordered point sequence; order is part of identity, indices are stable.
using PointCloud = std::vector<Point3>;

/// Squared Euclidean distance. Every distance comparison in the library uses
/// this one expression so that accelerated and brute-force paths agree
/// bit-for-bit.
inline double dist2(const Point3& a, const Point3& b) {
    const double dx = a.x - b.x, dy = a.y - b.y, dz = a.z - b.z;
    return dx * dx + dy * dy + dz * dz;
}

/// Centering + isotropic scaling. apply() maps into the normalized frame,
/// invert() maps back; the roundtrip is exact to ~1e-16 relative.
struct NormalizationTransform {
    Point3 center{};
    double scale = 1.0;  // > 0

    Point3 apply(const Point3& p) const { return (p - center) / scale; }
    Point3 invert(const Point3& p) const { return p * scale + center; }

    PointCloud apply(const PointCloud& c) const {
        PointCloud out;
        out.reserve(c.size());
        for (const auto& p : c) out.push_back(apply(p));
        return out;
    }
    PointCloud invert(const PointCloud& c) const {
        PointCloud out;
        out.reserve(c.size());
        for (const auto& p : c) out.push_back(invert(p));
        return out;
    }
};

inline void require_nonempty(const PointCloud& cloud) {
    if (cloud.empty()) throw std::invalid_argument("point cloud must contain at least one point");
}

inline Point3 centroid(const PointCloud& cloud) {
    require_nonempty(cloud);
    Vec3 sum{};
    for (const auto& p : cloud) sum += p;
    return sum / static_cast<double>(cloud.size());
}

/// Center at the centroid and scale so the farthest point sits at radius 1.
/// A cloud of coincident points gets scale 1.
inline std::pair<PointCloud, NormalizationTransform> normalize_unit_sphere(const PointCloud& cloud) {
    require_nonempty(cloud);
    NormalizationTransform t;
    t.center = centroid(cloud);
    double max_r2 = 0.0;
    for (const auto& p : cloud) max_r2 = std::max(max_r2, dist2(p, t.center));
    const double r = std::sqrt(max_r2);
    t.scale = r > 0.0 ? r : 1.0;
    return {t.apply(cloud), t};
}

/// Greedy farthest point sampling. The first pick is `start`; every later
/// pick maximizes the minimum distance to the already-selected set, ties
/// broken by the lowest index.
inline std::vector<int> farthest_point_sample(const PointCloud& cloud, int m, int start) {
    const int n = static_cast<int>(cloud.size());
    if (m < 1 || m > n)
        throw std::invalid_argument("farthest_point_sample: m must be in [1, N], got m=" +
                                    std::to_string(m) + " N=" + std::to_string(n));
    if (start < 0 || start >= n) throw std::invalid_argument("farthest_point_sample: start out of range");

    std::vector<int> picked;
    picked.reserve(static_cast<std::size_t>(m));
    picked.push_back(start);
    std::vector<double> min_d2(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) min_d2[i] = dist2(cloud[i], cloud[start]);

    while (static_cast<int>(picked.size()) < m) {
        int best = 0;
        double best_d2 = -1.0;
        for (int i = 0; i < n; ++i) {
            if (min_d2[i] > best_d2) {  // strict: ties keep the lowest index
                best_d2 = min_d2[i];
                best = i;
            }
        }
        picked.push_back(best);
        for (int i = 0; i < n; ++i) min_d2[i] = std::min(min_d2[i], dist2(cloud[i], cloud[best]));
    }
    return picked;
}

}  // namespace sdn
