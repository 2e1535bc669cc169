// Triangle meshes: OBJ loading, exact point-to-triangle / point-to-mesh
// squared distance (BVH-accelerated, identical to an exhaustive scan), and
// surface sampling (uniform-area and Poisson-disk via sample elimination).

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <queue>
#include <sstream>
#include <string>
#include <vector>

#include "sdn/geometry.hpp"
#include "sdn/kdtree.hpp"
#include "sdn/rng.hpp"

namespace sdn {

struct TriangleMesh {
    std::vector<Point3> vertices;
    std::vector<std::array<int, 3>> triangles;  // indices into vertices
};

inline double triangle_area(const Point3& a, const Point3& b, const Point3& c) {
    return 0.5 * (b - a).cross(c - a).norm();
}

namespace detail {
// Triangles with cross-product norm below this are rejected as degenerate.
inline constexpr double kDegenerateCross2 = 1e-30;

inline bool triangle_degenerate(const Point3& a, const Point3& b, const Point3& c) {
    return (b - a).cross(c - a).norm2() < kDegenerateCross2;
}
}  // namespace detail

inline void validate_mesh(const TriangleMesh& mesh) {
    const int nv = static_cast<int>(mesh.vertices.size());
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        for (int idx : mesh.triangles[t])
            if (idx < 0 || idx >= nv)
                throw std::runtime_error("mesh: triangle " + std::to_string(t) +
                                         " references vertex " + std::to_string(idx) +
                                         " out of bounds (vertex count " + std::to_string(nv) + ")");
        const auto& tr = mesh.triangles[t];
        if (detail::triangle_degenerate(mesh.vertices[tr[0]], mesh.vertices[tr[1]], mesh.vertices[tr[2]]))
            throw std::runtime_error("mesh: triangle " + std::to_string(t) + " has zero area");
    }
}

/// Parse the OBJ subset 'v x y z' / 'f i j k...': 1-based indices, polygons
/// fan-triangulated, normals/texcoords/materials ignored.
inline TriangleMesh load_obj(std::istream& in, const std::string& name = "<stream>") {
    TriangleMesh mesh;
    std::string line;
    std::size_t lineno = 0;
    auto fail = [&](const std::string& msg) -> std::runtime_error {
        return std::runtime_error(name + ":" + std::to_string(lineno) + ": " + msg);
    };
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ls(line);
        std::string tag;
        if (!(ls >> tag) || tag[0] == '#') continue;
        if (tag == "v") {
            Point3 p;
            if (!(ls >> p.x >> p.y >> p.z)) throw fail("malformed vertex record");
            if (!p.finite()) throw fail("non-finite vertex coordinate");
            mesh.vertices.push_back(p);
        } else if (tag == "f") {
            std::vector<int> poly;
            std::string corner;
            while (ls >> corner) {
                // accept i, i/t, i//n, i/t/n; only the vertex index is used
                const std::string head = corner.substr(0, corner.find('/'));
                int idx = 0;
                try {
                    idx = std::stoi(head);
                } catch (const std::exception&) {
                    throw fail("malformed face corner '" + corner + "'");
                }
                if (idx < 1) throw fail("face index must be positive (1-based), got " + head);
                // vertices must precede the faces that use them
                if (idx > static_cast<int>(mesh.vertices.size()))
                    throw fail("face references vertex " + head + " but only " +
                               std::to_string(mesh.vertices.size()) + " vertices are defined");
                poly.push_back(idx - 1);
            }
            if (poly.size() < 3) throw fail("face needs at least 3 vertices");
            for (std::size_t i = 1; i + 1 < poly.size(); ++i)
                mesh.triangles.push_back({poly[0], poly[static_cast<int>(i)], poly[i + 1]});
        }
        // all other record types (vn, vt, usemtl, ...) are ignored
    }
    validate_mesh(mesh);
    return mesh;
}

inline TriangleMesh load_obj_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    return load_obj(in, path.string());
}

inline std::string format_obj(const TriangleMesh& mesh) {
    std::string out;
    char buf[128];
    for (const auto& v : mesh.vertices) {
        std::snprintf(buf, sizeof(buf), "v %.9g %.9g %.9g\n", v.x, v.y, v.z);
        out += buf;
    }
    for (const auto& t : mesh.triangles) {
        std::snprintf(buf, sizeof(buf), "f %d %d %d\n", t[0] + 1, t[1] + 1, t[2] + 1);
        out += buf;
    }
    return out;
}

/// Exact squared distance from q to the closed triangle (a, b, c).
/// Voronoi-region classification after Ericson, Real-Time Collision Detection.
inline double point_to_triangle_sq(const Point3& q, const Point3& a, const Point3& b, const Point3& c) {
    if (detail::triangle_degenerate(a, b, c))
        throw std::invalid_argument("point_to_triangle_sq: degenerate triangle");

    const Vec3 ab = b - a, ac = c - a, aq = q - a;
    const double d1 = ab.dot(aq), d2 = ac.dot(aq);
    if (d1 <= 0.0 && d2 <= 0.0) return dist2(q, a);  // vertex a

    const Vec3 bq = q - b;
    const double d3 = ab.dot(bq), d4 = ac.dot(bq);
    if (d3 >= 0.0 && d4 <= d3) return dist2(q, b);  // vertex b

    const double vc = d1 * d4 - d3 * d2;
    if (vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0) {  // edge ab
        const double v = d1 / (d1 - d3);
        return (q - (a + ab * v)).norm2();
    }

    const Vec3 cq = q - c;
    const double d5 = ab.dot(cq), d6 = ac.dot(cq);
    if (d6 >= 0.0 && d5 <= d6) return dist2(q, c);  // vertex c

    const double vb = d5 * d2 - d1 * d6;
    if (vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0) {  // edge ac
        const double w = d2 / (d2 - d6);
        return (q - (a + ac * w)).norm2();
    }

    const double va = d3 * d6 - d5 * d4;
    if (va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0) {  // edge bc
        const double w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return (q - (b + (c - b) * w)).norm2();
    }

    // interior
    const double denom = 1.0 / (va + vb + vc);
    const double v = vb * denom, w = vc * denom;
    return (q - (a + ab * v + ac * w)).norm2();
}

/// Exhaustive point-to-mesh squared distance (min over all triangles).
inline double point_to_mesh_sq(const Point3& q, const TriangleMesh& mesh) {
    if (mesh.triangles.empty()) throw std::invalid_argument("point_to_mesh_sq: mesh has no triangles");
    double best = std::numeric_limits<double>::infinity();
    for (const auto& t : mesh.triangles)
        best = std::min(best, point_to_triangle_sq(q, mesh.vertices[t[0]], mesh.vertices[t[1]],
                                                   mesh.vertices[t[2]]));
    return best;
}

/// AABB-tree accelerated point-to-mesh distance. Pruning is conservative, so
/// results equal the exhaustive scan exactly. Immutable after construction;
/// concurrent queries are safe.
class MeshDistance {
public:
    explicit MeshDistance(const TriangleMesh& mesh) {
        if (mesh.triangles.empty()) throw std::invalid_argument("MeshDistance: mesh has no triangles");
        validate_mesh(mesh);
        tris_.reserve(mesh.triangles.size());
        for (const auto& t : mesh.triangles)
            tris_.push_back({mesh.vertices[t[0]], mesh.vertices[t[1]], mesh.vertices[t[2]]});
        order_.resize(tris_.size());
        for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int>(i);
        build(0, static_cast<int>(tris_.size()));
    }

    double point_to_mesh_sq(const Point3& q) const {
        double best = std::numeric_limits<double>::infinity();
        query(0, q, best);
        return best;
    }

private:
    struct Tri {
        Point3 a, b, c;
        Point3 center() const { return (a + b + c) / 3.0; }
    };
    struct Node {
        Vec3 lo, hi;
        int begin = 0, end = 0;
        int left = -1, right = -1;  // leaf when left < 0
    };

    std::vector<Tri> tris_;
    std::vector<int> order_;
    std::vector<Node> nodes_;

    static constexpr int kLeafTris = 4;

    int build(int begin, int end) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back({});
        Node n;
        n.begin = begin;
        n.end = end;
        n.lo = n.hi = tris_[order_[begin]].a;
        for (int i = begin; i < end; ++i) {
            const Tri& t = tris_[order_[i]];
            for (const Point3& p : {t.a, t.b, t.c}) {
                n.lo = {std::min(n.lo.x, p.x), std::min(n.lo.y, p.y), std::min(n.lo.z, p.z)};
                n.hi = {std::max(n.hi.x, p.x), std::max(n.hi.y, p.y), std::max(n.hi.z, p.z)};
            }
        }
        if (end - begin > kLeafTris) {
            const Vec3 ext = n.hi - n.lo;
            const int axis = (ext.y > ext.x) ? (ext.z > ext.y ? 2 : 1) : (ext.z > ext.x ? 2 : 0);
            const int mid = begin + (end - begin) / 2;
            std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                             [&](int p, int q2) {
                                 const Point3 cp = tris_[p].center(), cq = tris_[q2].center();
                                 const double vp = axis == 0 ? cp.x : axis == 1 ? cp.y : cp.z;
                                 const double vq = axis == 0 ? cq.x : axis == 1 ? cq.y : cq.z;
                                 return vp < vq || (vp == vq && p < q2);
                             });
            nodes_[id] = n;
            const int l = build(begin, mid);
            const int r = build(mid, end);
            nodes_[id].left = l;
            nodes_[id].right = r;
            return id;
        }
        nodes_[id] = n;
        return id;
    }

    static double box_dist2(const Node& n, const Point3& q) {
        const double dx = std::max({n.lo.x - q.x, 0.0, q.x - n.hi.x});
        const double dy = std::max({n.lo.y - q.y, 0.0, q.y - n.hi.y});
        const double dz = std::max({n.lo.z - q.z, 0.0, q.z - n.hi.z});
        return dx * dx + dy * dy + dz * dz;
    }

    void query(int id, const Point3& q, double& best) const {
        const Node& n = nodes_[id];
        if (n.left < 0) {
            for (int i = n.begin; i < n.end; ++i) {
                const Tri& t = tris_[order_[i]];
                best = std::min(best, point_to_triangle_sq(q, t.a, t.b, t.c));
            }
            return;
        }
        const double dl = box_dist2(nodes_[n.left], q), dr = box_dist2(nodes_[n.right], q);
        const int first = dl <= dr ? n.left : n.right;
        const int second = dl <= dr ? n.right : n.left;
        if (box_dist2(nodes_[first], q) <= best) query(first, q, best);
        if (box_dist2(nodes_[second], q) <= best) query(second, q, best);
    }
};

struct SamplingConfig {
    enum class Method { UniformArea, PoissonDisk };
    int target_count = 1000;
    double oversample_factor = 4.0;  // Poisson disk only
    Method method = Method::PoissonDisk;
};

namespace detail {

// Area-proportional triangle choice + uniform barycentric point.
// Each sample consumes a fixed window of 4 counters.
inline PointCloud sample_uniform_area(const TriangleMesh& mesh, int count, RngSeed seed) {
    std::vector<double> cum(mesh.triangles.size());
    double total = 0.0;
    for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
        const auto& tr = mesh.triangles[t];
        total += triangle_area(mesh.vertices[tr[0]], mesh.vertices[tr[1]], mesh.vertices[tr[2]]);
        cum[t] = total;
    }
    PointCloud out;
    out.reserve(static_cast<std::size_t>(count));
    const RngStream base(seed, streams::kSurfaceSampling);
    for (int i = 0; i < count; ++i) {
        RngStream rng = base.at(static_cast<std::uint64_t>(i) * 4);
        const double pick = rng.uniform() * total;
        const std::size_t t = std::min(
            static_cast<std::size_t>(std::lower_bound(cum.begin(), cum.end(), pick) - cum.begin()),
            cum.size() - 1);
        const auto& tr = mesh.triangles[t];
        const double r1 = std::sqrt(rng.uniform());
        const double r2 = rng.uniform();
        const Point3 &a = mesh.vertices[tr[0]], &b = mesh.vertices[tr[1]], &c = mesh.vertices[tr[2]];
        out.push_back(a * (1.0 - r1) + b * (r1 * (1.0 - r2)) + c * (r1 * r2));
    }
    return out;
}

// Greedy sample elimination: repeatedly drop the point with the smallest
// nearest-neighbor distance (ties: lowest index) until `target` remain.
inline PointCloud eliminate_to(const PointCloud& candidates, int target) {
    const int m = static_cast<int>(candidates.size());
    if (target >= m) return candidates;
    const SpatialIndex index(candidates);
    std::vector<char> alive(candidates.size(), 1);
    int alive_count = m;

    auto nn_dist2 = [&](int i) {
        for (int k = 2; ; k = std::min(2 * k, m)) {
            const auto nb = index.knn(candidates[i], k);
            for (int j : nb)
                if (j != i && alive[j]) return dist2(candidates[i], candidates[j]);
            if (k == m) return std::numeric_limits<double>::infinity();
        }
    };

    using Entry = std::pair<double, int>;
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> queue;
    for (int i = 0; i < m; ++i) queue.push({nn_dist2(i), i});

    while (alive_count > target && !queue.empty()) {
        const auto [d, i] = queue.top();
        queue.pop();
        if (!alive[i]) continue;
        const double now = nn_dist2(i);
        if (now > d) {  // stale: neighbors died, distance grew
            queue.push({now, i});
            continue;
        }
        alive[i] = 0;
        --alive_count;
    }
    PointCloud out;
    out.reserve(static_cast<std::size_t>(target));
    for (int i = 0; i < m; ++i)
        if (alive[i]) out.push_back(candidates[i]);
    return out;
}

}  // namespace detail

/// Sample a point cloud from the mesh surface. Deterministic given seed.
inline PointCloud sample_surface(const TriangleMesh& mesh, const SamplingConfig& cfg, RngSeed seed) {
    if (cfg.target_count < 1) throw std::invalid_argument("sample_surface: target_count must be >= 1");
    if (cfg.oversample_factor < 1.0)
        throw std::invalid_argument("sample_surface: oversample_factor must be >= 1");
    if (mesh.triangles.empty()) throw std::invalid_argument("sample_surface: mesh has no triangles");
    if (cfg.method == SamplingConfig::Method::UniformArea)
        return detail::sample_uniform_area(mesh, cfg.target_count, seed);
    const int oversampled =
        static_cast<int>(std::ceil(cfg.oversample_factor * static_cast<double>(cfg.target_count)));
    return detail::eliminate_to(detail::sample_uniform_area(mesh, oversampled, seed), cfg.target_count);
}

}  // namespace sdn
