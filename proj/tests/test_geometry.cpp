#include <catch2/catch_amalgamated.hpp>

#include <set>
#include <sstream>

#include "sdn/geometry.hpp"
#include "sdn/kdtree.hpp"
#include "sdn/patches.hpp"
#include "sdn/xyz_io.hpp"
#include "support/oracles.hpp"
#include "support/test_support.hpp"

using namespace sdn;

TEST_CASE("knn_query basics") {
    const PointCloud axis{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
    const SpatialIndex index(axis);

    SECTION("nearest two by inspection") {
        REQUIRE(knn_query(index, {0.9, 0, 0}, 2) == std::vector<int>{1, 0});
    }
    SECTION("query at a stored point returns it first") {
        for (int i = 0; i < 4; ++i) REQUIRE(knn_query(index, axis[i], 1) == std::vector<int>{i});
    }
    SECTION("distance ties break by ascending index") {
        const SpatialIndex two(PointCloud{{-1, 0, 0}, {1, 0, 0}});
        REQUIRE(knn_query(two, {0, 0, 0}, 1) == std::vector<int>{0});
    }
    SECTION("k beyond N is rejected") {
        REQUIRE_THROWS_AS(knn_query(index, {0, 0, 0}, 5), std::invalid_argument);
        REQUIRE_THROWS_AS(knn_query(index, {0, 0, 0}, 0), std::invalid_argument);
    }
}

TEST_CASE("nearest_point") {
    SECTION("single candidate") {
        const SpatialIndex index(PointCloud{{0, 0, 0}});
        REQUIRE(nearest_point(index, {1, 0, 0}) == 0);
    }
    SECTION("coincident query") {
        const auto cloud = testsupport::random_cloud(10, 5);
        const SpatialIndex index(cloud);
        REQUIRE(nearest_point(index, cloud[3]) == 3);
    }
    SECTION("brute force over both candidates") {
        const SpatialIndex index(PointCloud{{0, 0, 0}, {2, 0, 0}});
        REQUIRE(nearest_point(index, {0.9, 0, 0}) == 0);
    }
}

TEST_CASE("index agrees with brute-force scan exactly") {
    int query_count = 0;
    for (int trial = 0; trial < 10; ++trial) {
        const int n = 20 + trial * 48;  // up to 452
        const auto cloud = testsupport::random_cloud(n, 100 + trial);
        const SpatialIndex index(cloud);
        RngStream rng({static_cast<std::uint64_t>(trial)}, 2000);
        for (int q = 0; q < 20; ++q) {
            const Point3 query{3 * rng.uniform() - 1.5, 3 * rng.uniform() - 1.5, 3 * rng.uniform() - 1.5};
            const int k = 1 + static_cast<int>(rng.uniform() * std::min(n, 25));
            REQUIRE(index.knn(query, k) == oracles::brute_knn(cloud, query, k));
            ++query_count;
        }
    }
    REQUIRE(query_count == 200);
}

TEST_CASE("farthest_point_sample") {
    const PointCloud square{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {1, 1, 0}};

    SECTION("unit square picks the diagonal opposite") {
        // brute force over the three candidates: d2 to corner 0 is 1, 1, 2
        REQUIRE(farthest_point_sample(square, 2, 0) == std::vector<int>{0, 3});
    }
    SECTION("m = N exhausts all indices") {
        const auto picked = farthest_point_sample(square, 4, 0);
        REQUIRE(std::set<int>(picked.begin(), picked.end()) == std::set<int>{0, 1, 2, 3});
    }
    SECTION("m = 1 returns the start") {
        REQUIRE(farthest_point_sample(square, 1, 2) == std::vector<int>{2});
    }
    SECTION("deterministic") {
        const auto cloud = testsupport::random_cloud(200, 7);
        REQUIRE(farthest_point_sample(cloud, 50, 0) == farthest_point_sample(cloud, 50, 0));
    }
    SECTION("m out of range") {
        REQUIRE_THROWS_AS(farthest_point_sample(square, 5, 0), std::invalid_argument);
    }
}

TEST_CASE("normalize_unit_sphere") {
    SECTION("two-point hand computation") {
        const auto [out, t] = normalize_unit_sphere({{0, 0, 0}, {2, 0, 0}});
        REQUIRE(out[0].x == Catch::Approx(-1.0));
        REQUIRE(out[1].x == Catch::Approx(1.0));
        REQUIRE(t.center.x == Catch::Approx(1.0));
        REQUIRE(t.scale == Catch::Approx(1.0));
    }
    SECTION("idempotence within 1e-6") {
        const auto cloud = testsupport::random_cloud(300, 11);
        const auto [normalized, t1] = normalize_unit_sphere(cloud);
        const auto [again, t2] = normalize_unit_sphere(normalized);
        REQUIRE(t2.center.norm() < 1e-6);
        REQUIRE(std::abs(t2.scale - 1.0) < 1e-6);
    }
    SECTION("roundtrip within 1e-6 relative") {
        const auto cloud = testsupport::random_cloud(100, 13);
        const auto [normalized, t] = normalize_unit_sphere(cloud);
        const auto back = t.invert(normalized);
        for (std::size_t i = 0; i < cloud.size(); ++i)
            REQUIRE((back[i] - cloud[i]).norm() < 1e-6 * (1.0 + cloud[i].norm()));
    }
    SECTION("degenerate cloud gets scale 1") {
        const auto [out, t] = normalize_unit_sphere({{2, 2, 2}, {2, 2, 2}});
        REQUIRE(t.scale == 1.0);
        REQUIRE(out[0].norm() == 0.0);
    }
}

TEST_CASE("extract_patches") {
    SECTION("patch spans the cloud when patch_size >= N") {
        const auto cloud = testsupport::random_cloud(1000, 17);
        const auto patches = extract_patches(cloud, 1000, 3.0);
        REQUIRE(patches.size() == 1);
        REQUIRE(patches[0].indices.size() == 1000);
    }
    SECTION("coverage invariant") {
        for (int trial = 0; trial < 4; ++trial) {
            const int n = 50 + trial * 137;
            const auto cloud = testsupport::random_cloud(n, 19 + trial);
            const auto patches = extract_patches(cloud, 40, 3.0);
            std::vector<char> covered(cloud.size(), 0);
            for (const auto& p : patches) {
                REQUIRE(std::set<int>(p.indices.begin(), p.indices.end()).size() == p.indices.size());
                bool has_seed = false;
                for (int i : p.indices) {
                    REQUIRE(i >= 0);
                    REQUIRE(i < n);
                    covered[i] = 1;
                    has_seed |= i == p.seed;
                }
                REQUIRE(has_seed);
            }
            REQUIRE(std::count(covered.begin(), covered.end(), 1) == n);
        }
    }
    SECTION("seed-count formula") {
        const auto cloud = testsupport::random_cloud(3000, 23);
        const auto patches = extract_patches(cloud, 1000, 3.0);
        REQUIRE(patches.size() == 9);
        for (const auto& p : patches) REQUIRE(p.indices.size() == 1000);
    }
    SECTION("per-patch transform normalizes the patch") {
        const auto cloud = testsupport::random_cloud(500, 29);
        const auto patches = extract_patches(cloud, 120, 3.0);
        for (const auto& p : patches) {
            double max_r = 0.0;
            for (int i : p.indices) max_r = std::max(max_r, p.transform.apply(cloud[i]).norm());
            REQUIRE(max_r == Catch::Approx(1.0).margin(1e-9));
        }
    }
}

TEST_CASE("xyz io") {
    SECTION("comments and blank lines are skipped") {
        std::istringstream in("# header\n\n 1 2 3\n0.5\t0.25 -1e-3\n");
        const auto cloud = read_xyz(in);
        REQUIRE(cloud.size() == 2);
        REQUIRE(cloud[1].z == Catch::Approx(-1e-3));
    }
    SECTION("parse errors carry the line number") {
        std::istringstream in("1 2 3\n4 5\n");
        REQUIRE_THROWS_WITH(read_xyz(in, "f.xyz"), Catch::Matchers::ContainsSubstring("f.xyz:2"));
        std::istringstream trailing("1 2 3 junk\n");
        REQUIRE_THROWS_AS(read_xyz(trailing), std::runtime_error);
        std::istringstream nan("1 2 nan\n");
        REQUIRE_THROWS_AS(read_xyz(nan), std::runtime_error);
    }
    SECTION("write/read roundtrip at 6 significant digits") {
        const auto cloud = testsupport::random_cloud(50, 31);
        std::istringstream in(format_xyz(cloud));
        const auto back = read_xyz(in);
        REQUIRE(back.size() == cloud.size());
        for (std::size_t i = 0; i < cloud.size(); ++i)
            REQUIRE((back[i] - cloud[i]).norm() < 1e-5);
    }
}
