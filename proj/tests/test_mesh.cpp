#include <catch2/catch_amalgamated.hpp>

#include <sstream>

#include "sdn/mesh.hpp"
#include "sdn/rng.hpp"
#include "support/test_support.hpp"

using namespace sdn;

TEST_CASE("load_obj") {
    SECTION("cube as vertices and fan-triangulated quads") {
        std::istringstream in(format_obj(testsupport::make_cube()));
        const auto mesh = load_obj(in);
        REQUIRE(mesh.vertices.size() == 8);
        REQUIRE(mesh.triangles.size() == 12);
    }
    SECTION("quad faces are fan-triangulated") {
        std::istringstream in(
            "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\n"
            "f 1/1/1 2//2 3 4\n");
        const auto mesh = load_obj(in);
        REQUIRE(mesh.vertices.size() == 4);
        REQUIRE(mesh.triangles.size() == 2);
    }
    SECTION("out-of-bounds face index") {
        std::istringstream in("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 99\n");
        REQUIRE_THROWS_WITH(load_obj(in), Catch::Matchers::ContainsSubstring("99"));
    }
    SECTION("zero-area triangle is rejected") {
        std::istringstream in("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 2\n");
        REQUIRE_THROWS_WITH(load_obj(in), Catch::Matchers::ContainsSubstring("zero area"));
    }
    SECTION("malformed records report the line") {
        std::istringstream in("v 0 0 0\nv bad 0 0\n");
        REQUIRE_THROWS_WITH(load_obj(in, "m.obj"), Catch::Matchers::ContainsSubstring("m.obj:2"));
    }
}

TEST_CASE("point_to_triangle_sq") {
    const Point3 a{0, 0, 0}, b{1, 0, 0}, c{0, 1, 0};

    SECTION("perpendicular foot in the interior") {
        REQUIRE(point_to_triangle_sq({0.25, 0.25, 0.5}, a, b, c) == Catch::Approx(0.25));
    }
    SECTION("zero on the triangle") {
        REQUIRE(point_to_triangle_sq({0.25, 0.25, 0.0}, a, b, c) == 0.0);
        REQUIRE(point_to_triangle_sq(b, a, b, c) == 0.0);
    }
    SECTION("nearest feature is a vertex") {
        REQUIRE(point_to_triangle_sq({2, 0, 0}, a, b, c) == Catch::Approx(1.0));
    }
    SECTION("brute-force barycentric grid agreement") {
        RngStream rng({41}, 3000);
        for (int trial = 0; trial < 20; ++trial) {
            const Point3 ta{rng.uniform(), rng.uniform(), rng.uniform()};
            const Point3 tb{rng.uniform() + 1.0, rng.uniform(), rng.uniform()};
            const Point3 tc{rng.uniform(), rng.uniform() + 1.0, rng.uniform()};
            const Point3 q{3 * rng.uniform() - 1, 3 * rng.uniform() - 1, 3 * rng.uniform() - 1};
            double brute = std::numeric_limits<double>::infinity();
            const int g = 120;
            for (int i = 0; i <= g; ++i)
                for (int j = 0; j <= g - i; ++j) {
                    const double u = static_cast<double>(i) / g, v = static_cast<double>(j) / g;
                    const Point3 p = ta * (1.0 - u - v) + tb * u + tc * v;
                    brute = std::min(brute, dist2(q, p));
                }
            const double exact = point_to_triangle_sq(q, ta, tb, tc);
            REQUIRE(exact <= brute + 1e-12);
            REQUIRE(brute - exact < 1e-3);  // grid resolution bound
        }
    }
    SECTION("invariant under vertex permutation") {
        RngStream rng({43}, 3100);
        for (int trial = 0; trial < 30; ++trial) {
            const Point3 ta{rng.normal(), rng.normal(), rng.normal()};
            const Point3 tb{rng.normal(), rng.normal(), rng.normal()};
            const Point3 tc{rng.normal(), rng.normal(), rng.normal()};
            const Point3 q{rng.normal(), rng.normal(), rng.normal()};
            const double ref = point_to_triangle_sq(q, ta, tb, tc);
            for (const auto& [x, y, z] : {std::array{ta, tc, tb}, std::array{tb, ta, tc},
                                          std::array{tb, tc, ta}, std::array{tc, ta, tb},
                                          std::array{tc, tb, ta}}) {
                REQUIRE(point_to_triangle_sq(q, x, y, z) ==
                        Catch::Approx(ref).epsilon(1e-12).margin(1e-15));
            }
        }
    }
    SECTION("degenerate triangle rejected") {
        REQUIRE_THROWS_AS(point_to_triangle_sq({0, 0, 0}, a, a, c), std::invalid_argument);
    }
}

TEST_CASE("point_to_mesh_sq") {
    const auto cube = testsupport::make_cube();

    SECTION("zero on any face") {
        REQUIRE(point_to_mesh_sq({0.5, 0.1, 0.2}, cube) < 1e-24);
    }
    SECTION("cube center sees the half-extent squared") {
        REQUIRE(point_to_mesh_sq({0, 0, 0}, cube) == Catch::Approx(0.25));
    }
    SECTION("accelerated equals exhaustive exactly") {
        const auto ico = testsupport::make_icosphere(2);
        const MeshDistance fast(ico);
        RngStream rng({47}, 3200);
        for (int q = 0; q < 100; ++q) {
            const Point3 p{4 * rng.uniform() - 2, 4 * rng.uniform() - 2, 4 * rng.uniform() - 2};
            REQUIRE(fast.point_to_mesh_sq(p) == point_to_mesh_sq(p, ico));
        }
    }
}

TEST_CASE("sample_surface") {
    SECTION("samples stay on the unit square") {
        const auto square = testsupport::make_unit_square();
        SamplingConfig cfg;
        cfg.target_count = 500;
        cfg.method = SamplingConfig::Method::UniformArea;
        const auto cloud = sample_surface(square, cfg, {7});
        REQUIRE(cloud.size() == 500);
        for (const auto& p : cloud) {
            REQUIRE(p.z == 0.0);
            REQUIRE(p.x >= 0.0);
            REQUIRE(p.x <= 1.0);
            REQUIRE(p.y >= 0.0);
            REQUIRE(p.y <= 1.0);
        }
    }
    SECTION("triangle choice is area-proportional") {
        // areas 9 : 1, well separated in x so samples classify trivially
        TriangleMesh mesh;
        mesh.vertices = {{0, 0, 0}, {3, 0, 0}, {0, 6, 0}, {10, 0, 0}, {11, 0, 0}, {10, 2, 0}};
        mesh.triangles = {{0, 1, 2}, {3, 4, 5}};
        SamplingConfig cfg;
        cfg.target_count = 10000;
        cfg.method = SamplingConfig::Method::UniformArea;
        const auto cloud = sample_surface(mesh, cfg, {11});
        const auto big = static_cast<int>(
            std::count_if(cloud.begin(), cloud.end(), [](const Point3& p) { return p.x < 5.0; }));
        // binomial n=10000, p=0.9: 3 sigma = 90
        REQUIRE(big > 9000 - 90);
        REQUIRE(big < 9000 + 90);
    }
    SECTION("poisson disk spreads at least as well as uniform") {
        const auto ico = testsupport::make_icosphere(1);
        SamplingConfig uniform;
        uniform.target_count = 300;
        uniform.method = SamplingConfig::Method::UniformArea;
        SamplingConfig poisson = uniform;
        poisson.method = SamplingConfig::Method::PoissonDisk;
        const auto u = sample_surface(ico, uniform, {13});
        const auto p = sample_surface(ico, poisson, {13});
        REQUIRE(p.size() == u.size());
        auto min_spacing = [](const PointCloud& c) {
            double best = std::numeric_limits<double>::infinity();
            for (std::size_t i = 0; i < c.size(); ++i)
                for (std::size_t j = i + 1; j < c.size(); ++j) best = std::min(best, dist2(c[i], c[j]));
            return best;
        };
        REQUIRE(min_spacing(p) >= min_spacing(u));
    }
    SECTION("samples lie on the mesh") {
        const auto ico = testsupport::make_icosphere(1);
        SamplingConfig cfg;
        cfg.target_count = 200;
        const auto cloud = sample_surface(ico, cfg, {17});
        const MeshDistance dist(ico);
        for (const auto& p : cloud) REQUIRE(dist.point_to_mesh_sq(p) < 1e-12);
    }
    SECTION("deterministic given seed") {
        const auto ico = testsupport::make_icosphere(1);
        SamplingConfig cfg;
        cfg.target_count = 150;
        REQUIRE(sample_surface(ico, cfg, {19}) == sample_surface(ico, cfg, {19}));
        REQUIRE(sample_surface(ico, cfg, {19}) != sample_surface(ico, cfg, {20}));
    }
    SECTION("zero target is rejected") {
        SamplingConfig cfg;
        cfg.target_count = 0;
        REQUIRE_THROWS_AS(sample_surface(testsupport::make_cube(), cfg, {1}), std::invalid_argument);
    }
}
