#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "sdn/noise.hpp"
#include "support/test_support.hpp"

using namespace sdn;

namespace {

Vec3 mean_of(const std::vector<Vec3>& v) {
    Vec3 m{};
    for (const auto& x : v) m += x;
    return m / static_cast<double>(v.size());
}

}  // namespace

TEST_CASE("sample_noise") {
    SECTION("sigma 0 produces zero vectors") {
        for (const auto& v : sample_noise(NoiseModel::isotropic_gaussian(0.0), 64, {3}))
            REQUIRE(v == Vec3{});
    }
    SECTION("isotropic gaussian statistics") {
        const double sigma = 0.02;
        const std::size_t n = 100000;
        const auto draws = sample_noise(NoiseModel::isotropic_gaussian(sigma), n, {5});
        const Vec3 mean = mean_of(draws);
        const double tol = 4.0 * sigma / std::sqrt(static_cast<double>(n));
        REQUIRE(std::abs(mean.x) < tol);
        REQUIRE(std::abs(mean.y) < tol);
        REQUIRE(std::abs(mean.z) < tol);
        double var = 0.0;
        for (const auto& v : draws) var += (v - mean).norm2();
        const double stddev = std::sqrt(var / (3.0 * n));
        REQUIRE(stddev == Catch::Approx(sigma).epsilon(0.02));
    }
    SECTION("discrete draws stay on the support") {
        const auto model = NoiseModel::discrete({{0.01, 0, 0}, {-0.01, 0, 0}}, {0.5, 0.5});
        bool saw_plus = false, saw_minus = false;
        for (const auto& v : sample_noise(model, 500, {7})) {
            REQUIRE((v == Vec3{0.01, 0, 0} || v == Vec3{-0.01, 0, 0}));
            saw_plus |= v.x > 0;
            saw_minus |= v.x < 0;
        }
        REQUIRE(saw_plus);
        REQUIRE(saw_minus);
    }
    SECTION("mode-zero families have near-zero empirical mean") {
        const std::size_t n = 100000;
        const std::vector<NoiseModel> models = {
            NoiseModel::isotropic_gaussian(0.05),
            NoiseModel::anisotropic_gaussian({4e-4, 1e-4, 0.0, 9e-4, 0.0, 1e-4}),
            NoiseModel::laplace(0.03),
            NoiseModel::uniform_ball(0.05),
        };
        for (const auto& m : models) {
            const auto draws = sample_noise(m, n, {11});
            const Vec3 mean = mean_of(draws);
            REQUIRE(mean.norm() < 4.0 * 0.1 / std::sqrt(static_cast<double>(n)));
        }
    }
    SECTION("anisotropic covariance is reproduced") {
        const std::array<double, 6> cov{4e-4, 1e-4, 0.0, 9e-4, 0.0, 1e-4};
        const auto draws = sample_noise(NoiseModel::anisotropic_gaussian(cov), 200000, {13});
        double xx = 0, xy = 0, yy = 0, zz = 0;
        for (const auto& v : draws) {
            xx += v.x * v.x;
            xy += v.x * v.y;
            yy += v.y * v.y;
            zz += v.z * v.z;
        }
        const double n = static_cast<double>(draws.size());
        REQUIRE(xx / n == Catch::Approx(4e-4).epsilon(0.05));
        REQUIRE(xy / n == Catch::Approx(1e-4).epsilon(0.10));
        REQUIRE(yy / n == Catch::Approx(9e-4).epsilon(0.05));
        REQUIRE(zz / n == Catch::Approx(1e-4).epsilon(0.05));
    }
    SECTION("unidirectional noise stays on its line") {
        const Vec3 d{0.6, 0.8, 0.0};
        const auto draws = sample_noise(NoiseModel::unidirectional(d, 0.05), 1000, {17});
        for (const auto& v : draws) REQUIRE(std::abs(v.cross(d).norm()) < 1e-12);
    }
    SECTION("invalid parameters are rejected") {
        REQUIRE_THROWS_AS(NoiseModel::isotropic_gaussian(-0.1), std::invalid_argument);
        REQUIRE_THROWS_AS(NoiseModel::discrete({{0, 0, 0}}, {0.7}), std::invalid_argument);
        REQUIRE_THROWS_AS(NoiseModel::unidirectional({1, 1, 0}, 0.1), std::invalid_argument);
        // not positive semi-definite
        REQUIRE_THROWS_AS(NoiseModel::anisotropic_gaussian({1.0, 0, 0, 1.0, 0, -1.0}),
                          std::invalid_argument);
    }
}

TEST_CASE("perturb") {
    const auto cloud = testsupport::random_cloud(200, 23);

    SECTION("sigma 0 is the identity") {
        REQUIRE(perturb(cloud, NoiseModel::isotropic_gaussian(0.0), {3}) == cloud);
    }
    SECTION("deterministic given seed") {
        const auto model = NoiseModel::isotropic_gaussian(0.02);
        REQUIRE(perturb(cloud, model, {29}) == perturb(cloud, model, {29}));
        REQUIRE(perturb(cloud, model, {29}) != perturb(cloud, model, {30}));
    }
    SECTION("offsets match sample_noise with the same seed") {
        const auto model = NoiseModel::laplace(0.01);
        const auto noisy = perturb(cloud, model, {31});
        const auto noise = sample_noise(model, cloud.size(), {31});
        REQUIRE(noisy.size() == cloud.size());
        for (std::size_t i = 0; i < cloud.size(); ++i)
            REQUIRE((noisy[i] - cloud[i] - noise[i]).norm() < 1e-15);
    }
}

TEST_CASE("noise spec grammar") {
    SECTION("roundtrip through format") {
        for (const char* spec :
             {"gaussian:0.02", "laplace:0.01", "uniform_ball:0.03",
              "anisotropic:0.0004,0.0001,0,0.0009,0,0.0001", "unidirectional:0,0,1,0.02",
              "discrete:0.01,0,0,0.5;-0.01,0,0,0.5"}) {
            const auto model = parse_noise_spec(spec);
            REQUIRE(format_noise_spec(parse_noise_spec(format_noise_spec(model))) ==
                    format_noise_spec(model));
        }
    }
    SECTION("direction is normalized at parse") {
        const auto model = parse_noise_spec("unidirectional:3,4,0,0.1");
        REQUIRE(model.direction.norm() == Catch::Approx(1.0));
    }
    SECTION("bad specs are rejected") {
        REQUIRE_THROWS_AS(parse_noise_spec("gauss:0.1"), std::invalid_argument);
        REQUIRE_THROWS_AS(parse_noise_spec("gaussian:abc"), std::invalid_argument);
        REQUIRE_THROWS_AS(parse_noise_spec("gaussian:0.1,0.2"), std::invalid_argument);
        REQUIRE_THROWS_AS(parse_noise_spec("discrete:0,0,0"), std::invalid_argument);
    }
}
