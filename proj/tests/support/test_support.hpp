// Procedural meshes and cloud helpers shared by the test suites.

#pragma once

#include <array>
#include <cmath>
#include <map>
#include <vector>

#include "sdn/geometry.hpp"
#include "sdn/mesh.hpp"
#include "sdn/rng.hpp"

namespace testsupport {

/// Axis-aligned cube centered at the origin with half-extent 0.5:
/// 8 vertices, 12 triangles.
inline sdn::TriangleMesh make_cube(double half = 0.5) {
    sdn::TriangleMesh m;
    for (int i = 0; i < 8; ++i)
        m.vertices.push_back({(i & 1) ? half : -half, (i & 2) ? half : -half, (i & 4) ? half : -half});
    const int faces[6][4] = {
        {0, 2, 3, 1},  // z = -h
        {4, 5, 7, 6},  // z = +h
        {0, 1, 5, 4},  // y = -h
        {2, 6, 7, 3},  // y = +h
        {0, 4, 6, 2},  // x = -h
        {1, 3, 7, 5},  // x = +h
    };
    for (const auto& f : faces) {
        m.triangles.push_back({f[0], f[1], f[2]});
        m.triangles.push_back({f[0], f[2], f[3]});
    }
    return m;
}

/// Unit right square in the z = 0 plane, two triangles.
inline sdn::TriangleMesh make_unit_square() {
    sdn::TriangleMesh m;
    m.vertices = {{0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}};
    m.triangles = {{0, 1, 2}, {0, 2, 3}};
    return m;
}

/// Icosphere of the given subdivision level, vertices on the unit sphere.
inline sdn::TriangleMesh make_icosphere(int subdivisions = 2) {
    const double t = (1.0 + std::sqrt(5.0)) / 2.0;
    std::vector<sdn::Point3> verts = {
        {-1, t, 0}, {1, t, 0}, {-1, -t, 0}, {1, -t, 0}, {0, -1, t},  {0, 1, t},
        {0, -1, -t}, {0, 1, -t}, {t, 0, -1}, {t, 0, 1}, {-t, 0, -1}, {-t, 0, 1}};
    for (auto& v : verts) v = v / v.norm();
    std::vector<std::array<int, 3>> tris = {
        {0, 11, 5}, {0, 5, 1},  {0, 1, 7},   {0, 7, 10}, {0, 10, 11}, {1, 5, 9},  {5, 11, 4},
        {11, 10, 2}, {10, 7, 6}, {7, 1, 8},  {3, 9, 4},  {3, 4, 2},   {3, 2, 6},  {3, 6, 8},
        {3, 8, 9},  {4, 9, 5},  {2, 4, 11},  {6, 2, 10}, {8, 6, 7},   {9, 8, 1}};

    for (int level = 0; level < subdivisions; ++level) {
        std::map<std::pair<int, int>, int> midpoint;
        auto mid = [&](int a, int b) {
            const auto key = std::minmax(a, b);
            auto it = midpoint.find(key);
            if (it != midpoint.end()) return it->second;
            sdn::Point3 m = (verts[a] + verts[b]) / 2.0;
            m = m / m.norm();
            verts.push_back(m);
            const int idx = static_cast<int>(verts.size()) - 1;
            midpoint.emplace(key, idx);
            return idx;
        };
        std::vector<std::array<int, 3>> next;
        next.reserve(tris.size() * 4);
        for (const auto& tr : tris) {
            const int ab = mid(tr[0], tr[1]), bc = mid(tr[1], tr[2]), ca = mid(tr[2], tr[0]);
            next.push_back({tr[0], ab, ca});
            next.push_back({tr[1], bc, ab});
            next.push_back({tr[2], ca, bc});
            next.push_back({ab, bc, ca});
        }
        tris = std::move(next);
    }
    sdn::TriangleMesh m;
    m.vertices = std::move(verts);
    m.triangles = std::move(tris);
    return m;
}

/// Latitude/longitude sphere of radius 1 (different tessellation than the
/// icosphere; used as a training shape).
inline sdn::TriangleMesh make_uv_sphere(int rings = 16, int segments = 24) {
    sdn::TriangleMesh m;
    m.vertices.push_back({0, 0, 1});
    for (int r = 1; r < rings; ++r) {
        const double phi = M_PI * r / rings;
        for (int s = 0; s < segments; ++s) {
            const double theta = 2.0 * M_PI * s / segments;
            m.vertices.push_back(
                {std::sin(phi) * std::cos(theta), std::sin(phi) * std::sin(theta), std::cos(phi)});
        }
    }
    m.vertices.push_back({0, 0, -1});
    const int south = static_cast<int>(m.vertices.size()) - 1;
    auto ring_vertex = [&](int r, int s) { return 1 + (r - 1) * segments + (s % segments); };
    for (int s = 0; s < segments; ++s) m.triangles.push_back({0, ring_vertex(1, s), ring_vertex(1, s + 1)});
    for (int r = 1; r + 1 < rings; ++r)
        for (int s = 0; s < segments; ++s) {
            m.triangles.push_back({ring_vertex(r, s), ring_vertex(r + 1, s), ring_vertex(r + 1, s + 1)});
            m.triangles.push_back({ring_vertex(r, s), ring_vertex(r + 1, s + 1), ring_vertex(r, s + 1)});
        }
    for (int s = 0; s < segments; ++s)
        m.triangles.push_back({south, ring_vertex(rings - 1, s + 1), ring_vertex(rings - 1, s)});
    return m;
}

/// Uniform random cloud in [-1, 1]^3.
inline sdn::PointCloud random_cloud(int n, std::uint64_t seed, std::uint64_t stream = 1000) {
    sdn::RngStream rng({seed}, stream);
    sdn::PointCloud c;
    c.reserve(n);
    for (int i = 0; i < n; ++i) {
        const double x = 2.0 * rng.uniform() - 1.0;
        const double y = 2.0 * rng.uniform() - 1.0;
        const double z = 2.0 * rng.uniform() - 1.0;
        c.push_back({x, y, z});
    }
    return c;
}

}  // namespace testsupport
