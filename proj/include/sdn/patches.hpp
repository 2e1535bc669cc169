// Patch extraction: kNN neighborhoods around farthest-point-sampled seeds,
// guaranteed to cover every point of the parent cloud.

#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "sdn/geometry.hpp"
#include "sdn/kdtree.hpp"

namespace sdn {

struct Patch {
    std::vector<int> indices;           // unique, within parent bounds; contains seed
    int seed = 0;                       // parent-cloud index of the seed point
    NormalizationTransform transform;   // centroid/radius of this patch's points
};

/// Split a cloud into kNN patches of `patch_size` points around FPS seeds
/// (start index 0). Seed count starts at max(1, ceil(ratio*N/patch_size))
/// and is raised automatically until the patches cover every index. When
/// patch_size >= N a single patch spans the whole cloud.
inline std::vector<Patch> extract_patches(const PointCloud& cloud, int patch_size = 1000,
                                          double coverage_ratio = 3.0) {
    require_nonempty(cloud);
    if (patch_size < 1) throw std::invalid_argument("extract_patches: patch_size must be >= 1");
    const int n = static_cast<int>(cloud.size());

    auto finish = [&](std::vector<Patch>& patches) {
        for (auto& p : patches) {
            PointCloud pts;
            pts.reserve(p.indices.size());
            for (int i : p.indices) pts.push_back(cloud[i]);
            p.transform = normalize_unit_sphere(pts).second;
        }
        return patches;
    };

    if (patch_size >= n) {
        std::vector<Patch> patches(1);
        patches[0].seed = 0;
        patches[0].indices.resize(cloud.size());
        for (int i = 0; i < n; ++i) patches[0].indices[i] = i;
        return finish(patches);
    }

    const SpatialIndex index(cloud);
    int seed_count = std::max(1, static_cast<int>(std::ceil(coverage_ratio * n / patch_size)));
    for (;;) {
        seed_count = std::min(seed_count, n);
        const std::vector<int> seeds = farthest_point_sample(cloud, seed_count, 0);
        std::vector<Patch> patches(seeds.size());
        std::vector<char> covered(cloud.size(), 0);
        for (std::size_t s = 0; s < seeds.size(); ++s) {
            patches[s].seed = seeds[s];
            patches[s].indices = index.knn(cloud[seeds[s]], patch_size);
            for (int i : patches[s].indices) covered[i] = 1;
        }
        if (std::find(covered.begin(), covered.end(), 0) == covered.end()) return finish(patches);
        if (seed_count == n) return finish(patches);  // unreachable: self-seeding covers all
        seed_count += std::max(1, seed_count / 2);
    }
}

}  // namespace sdn
