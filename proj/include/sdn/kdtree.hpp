// Exact k-d tree over an immutable point cloud snapshot.
//
// Queries are defined to agree with a brute-force linear scan *exactly*:
// same squared distances (computed by sdn::dist2), same candidate ordering
// (ascending distance, distance ties broken by ascending point index).
// Pruning is conservative at equality so tied candidates are never skipped.
// Safe for concurrent read-only queries after construction.

#pragma once

#include <algorithm>
#include <string>
#include <utility>
#include <vector>

#include "sdn/geometry.hpp"

namespace sdn {

class SpatialIndex {
public:
    explicit SpatialIndex(PointCloud points) : pts_(std::move(points)) {
        require_nonempty(pts_);
        order_.resize(pts_.size());
        for (std::size_t i = 0; i < order_.size(); ++i) order_[i] = static_cast<int>(i);
        nodes_.reserve(2 * pts_.size() / kLeafSize + 2);
        build(0, static_cast<int>(pts_.size()));
    }

    std::size_t size() const { return pts_.size(); }
    const PointCloud& points() const { return pts_; }

    /// k nearest stored points to q, sorted by (squared distance, index).
    std::vector<int> knn(const Point3& q, int k) const {
        if (k < 1 || k > static_cast<int>(pts_.size()))
            throw std::invalid_argument("knn: k must be in [1, N], got k=" + std::to_string(k) +
                                        " N=" + std::to_string(pts_.size()));
        std::vector<std::pair<double, int>> heap;  // max-heap on (dist2, index)
        heap.reserve(static_cast<std::size_t>(k));
        search(0, q, k, heap);
        std::sort(heap.begin(), heap.end());
        std::vector<int> out(heap.size());
        for (std::size_t i = 0; i < heap.size(); ++i) out[i] = heap[i].second;
        return out;
    }

    int nearest(const Point3& q) const { return nearest_with_dist2(q).first; }

    /// Index of the nearest stored point and its squared distance.
    std::pair<int, double> nearest_with_dist2(const Point3& q) const {
        std::vector<std::pair<double, int>> heap;
        heap.reserve(1);
        search(0, q, 1, heap);
        return {heap.front().second, heap.front().first};
    }

private:
    static constexpr int kLeafSize = 12;

    struct Node {
        int axis = -1;       // -1 marks a leaf
        double split = 0.0;  // splitting coordinate
        int begin = 0, end = 0;
        int left = -1, right = -1;
    };

    PointCloud pts_;
    std::vector<int> order_;  // permutation of point indices, partitioned by the tree
    std::vector<Node> nodes_;

    static double coord(const Point3& p, int axis) { return axis == 0 ? p.x : axis == 1 ? p.y : p.z; }

    int build(int begin, int end) {
        const int id = static_cast<int>(nodes_.size());
        nodes_.push_back({});
        Node n;
        n.begin = begin;
        n.end = end;
        if (end - begin <= kLeafSize) {
            nodes_[id] = n;
            return id;
        }
        // Split on the axis of largest extent, at the median.
        Vec3 lo = pts_[order_[begin]], hi = lo;
        for (int i = begin + 1; i < end; ++i) {
            const Point3& p = pts_[order_[i]];
            lo = {std::min(lo.x, p.x), std::min(lo.y, p.y), std::min(lo.z, p.z)};
            hi = {std::max(hi.x, p.x), std::max(hi.y, p.y), std::max(hi.z, p.z)};
        }
        const Vec3 ext = hi - lo;
        int axis = 0;
        if (ext.y > coord(ext, axis)) axis = 1;
        if (ext.z > coord(ext, axis)) axis = 2;
        if (coord(ext, axis) == 0.0) {  // all points coincide: leaf
            nodes_[id] = n;
            return id;
        }
        const int mid = begin + (end - begin) / 2;
        std::nth_element(order_.begin() + begin, order_.begin() + mid, order_.begin() + end,
                         [&](int a, int b) {
                             const double ca = coord(pts_[a], axis), cb = coord(pts_[b], axis);
                             return ca < cb || (ca == cb && a < b);
                         });
        n.axis = axis;
        n.split = coord(pts_[order_[mid]], axis);
        nodes_[id] = n;
        const int l = build(begin, mid);
        const int r = build(mid, end);
        nodes_[id].left = l;
        nodes_[id].right = r;
        return id;
    }

    // Accept candidate (d2, idx) if the heap is not full or it beats the
    // current worst in (distance, index) order.
    static void offer(std::vector<std::pair<double, int>>& heap, int k, double d2, int idx) {
        const std::pair<double, int> cand{d2, idx};
        if (static_cast<int>(heap.size()) < k) {
            heap.push_back(cand);
            std::push_heap(heap.begin(), heap.end());
        } else if (cand < heap.front()) {
            std::pop_heap(heap.begin(), heap.end());
            heap.back() = cand;
            std::push_heap(heap.begin(), heap.end());
        }
    }

    void search(int node_id, const Point3& q, int k, std::vector<std::pair<double, int>>& heap) const {
        const Node& n = nodes_[node_id];
        if (n.axis < 0) {
            for (int i = n.begin; i < n.end; ++i) {
                const int idx = order_[i];
                offer(heap, k, dist2(q, pts_[idx]), idx);
            }
            return;
        }
        const double diff = coord(q, n.axis) - n.split;
        const int near = diff < 0.0 ? n.left : n.right;
        const int far = diff < 0.0 ? n.right : n.left;
        search(near, q, k, heap);
        // Visit the far side unless every point there is strictly worse than
        // the current worst candidate (<=  keeps distance ties reachable).
        if (static_cast<int>(heap.size()) < k || diff * diff <= heap.front().first) search(far, q, k, heap);
    }
};

/// k nearest neighbors of q, sorted by ascending distance, ties by index.
inline std::vector<int> knn_query(const SpatialIndex& index, const Point3& q, int k) {
    return index.knn(q, k);
}

/// Index of the stored point nearest to q.
inline int nearest_point(const SpatialIndex& index, const Point3& q) { return index.nearest(q); }

}  // namespace sdn
