// Perturbation models for corrupting clean clouds. Magnitude parameters are
// in units of the normalized (unit-sphere) coordinate frame. All sampling is
// counter-based: point i draws from a fixed 8-counter window, so streams can
// be partitioned across points without a shared generator.

#pragma once

#include <array>
#include <cmath>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "sdn/geometry.hpp"
#include "sdn/rng.hpp"

namespace sdn {

struct NoiseModel {
    enum class Kind {
        IsotropicGaussian,    // sigma
        AnisotropicGaussian,  // covariance (SPD, possibly semi-definite)
        Laplace,              // per-axis Laplace(0, b)
        UniformBall,          // uniform in the solid ball of given radius
        Discrete,             // fixed offsets with probabilities
        Unidirectional,       // Gaussian magnitude along a fixed unit direction
    };

    Kind kind = Kind::IsotropicGaussian;
    double sigma = 0.0;                    // IsotropicGaussian, Unidirectional
    std::array<double, 6> cov{};           // xx, xy, xz, yy, yz, zz
    double b = 0.0;                        // Laplace
    double radius = 0.0;                   // UniformBall
    std::vector<Vec3> offsets;             // Discrete
    std::vector<double> probabilities;     // Discrete
    Vec3 direction{0.0, 0.0, 1.0};         // Unidirectional, unit norm

    static NoiseModel isotropic_gaussian(double sigma) {
        NoiseModel m;
        m.kind = Kind::IsotropicGaussian;
        m.sigma = sigma;
        m.validate();
        return m;
    }
    static NoiseModel anisotropic_gaussian(const std::array<double, 6>& cov) {
        NoiseModel m;
        m.kind = Kind::AnisotropicGaussian;
        m.cov = cov;
        m.validate();
        return m;
    }
    static NoiseModel laplace(double b) {
        NoiseModel m;
        m.kind = Kind::Laplace;
        m.b = b;
        m.validate();
        return m;
    }
    static NoiseModel uniform_ball(double radius) {
        NoiseModel m;
        m.kind = Kind::UniformBall;
        m.radius = radius;
        m.validate();
        return m;
    }
    static NoiseModel discrete(std::vector<Vec3> offsets, std::vector<double> probabilities) {
        NoiseModel m;
        m.kind = Kind::Discrete;
        m.offsets = std::move(offsets);
        m.probabilities = std::move(probabilities);
        m.validate();
        return m;
    }
    static NoiseModel unidirectional(const Vec3& direction, double sigma) {
        NoiseModel m;
        m.kind = Kind::Unidirectional;
        m.direction = direction;
        m.sigma = sigma;
        m.validate();
        return m;
    }

    void validate() const {
        switch (kind) {
            case Kind::IsotropicGaussian:
                if (!(sigma >= 0.0)) throw std::invalid_argument("noise: sigma must be >= 0");
                break;
            case Kind::AnisotropicGaussian:
                chol_factor();  // throws if not positive semi-definite
                break;
            case Kind::Laplace:
                if (!(b >= 0.0)) throw std::invalid_argument("noise: laplace scale must be >= 0");
                break;
            case Kind::UniformBall:
                if (!(radius >= 0.0)) throw std::invalid_argument("noise: ball radius must be >= 0");
                break;
            case Kind::Discrete: {
                if (offsets.empty() || offsets.size() != probabilities.size())
                    throw std::invalid_argument("noise: discrete offsets/probabilities mismatch");
                double sum = 0.0;
                for (double p : probabilities) {
                    if (!(p >= 0.0)) throw std::invalid_argument("noise: negative probability");
                    sum += p;
                }
                if (std::abs(sum - 1.0) > 1e-9)
                    throw std::invalid_argument("noise: discrete probabilities must sum to 1");
                break;
            }
            case Kind::Unidirectional:
                if (std::abs(direction.norm() - 1.0) > 1e-6)
                    throw std::invalid_argument("noise: direction must be a unit vector");
                if (!(sigma >= 0.0)) throw std::invalid_argument("noise: sigma must be >= 0");
                break;
        }
    }

    /// Factor L with L L^T = cov, via symmetric eigendecomposition so that
    /// semi-definite covariances are accepted.
    Eigen::Matrix3d chol_factor() const {
        Eigen::Matrix3d sigma_mat;
        sigma_mat << cov[0], cov[1], cov[2],
                     cov[1], cov[3], cov[4],
                     cov[2], cov[4], cov[5];
        Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> eig(sigma_mat);
        Eigen::Vector3d ev = eig.eigenvalues();
        const double tol = 1e-12 * std::max(1.0, ev.cwiseAbs().maxCoeff());
        for (int i = 0; i < 3; ++i) {
            if (ev[i] < -tol)
                throw std::invalid_argument("noise: covariance is not positive semi-definite");
            ev[i] = std::sqrt(std::max(ev[i], 0.0));
        }
        return eig.eigenvectors() * ev.asDiagonal();
    }
};

namespace detail {
inline constexpr std::uint64_t kNoiseStride = 8;  // counters per 3-vector draw

inline Vec3 draw_noise(const NoiseModel& m, RngStream rng) {
    switch (m.kind) {
        case NoiseModel::Kind::IsotropicGaussian: {
            const double n0 = rng.normal(), n1 = rng.normal(), n2 = rng.normal();
            return {m.sigma * n0, m.sigma * n1, m.sigma * n2};
        }
        case NoiseModel::Kind::AnisotropicGaussian: {
            const Eigen::Matrix3d l = m.chol_factor();
            const Eigen::Vector3d n(rng.normal(), rng.normal(), rng.normal());
            const Eigen::Vector3d v = l * n;
            return {v[0], v[1], v[2]};
        }
        case NoiseModel::Kind::Laplace: {
            auto lap = [&]() {
                const double u = rng.uniform() - 0.5;
                const double s = u < 0.0 ? -1.0 : 1.0;
                return -m.b * s * std::log1p(-2.0 * std::abs(u));
            };
            const double l0 = lap(), l1 = lap(), l2 = lap();
            return {l0, l1, l2};
        }
        case NoiseModel::Kind::UniformBall: {
            const Vec3 g{rng.normal(), rng.normal(), rng.normal()};
            const double n = g.norm();
            const Vec3 dir = n > 0.0 ? g / n : Vec3{0.0, 0.0, 1.0};
            const double r = m.radius * std::cbrt(rng.uniform());
            return dir * r;
        }
        case NoiseModel::Kind::Discrete: {
            const double u = rng.uniform();
            double cum = 0.0;
            for (std::size_t i = 0; i < m.offsets.size(); ++i) {
                cum += m.probabilities[i];
                if (u < cum) return m.offsets[i];
            }
            return m.offsets.back();
        }
        case NoiseModel::Kind::Unidirectional:
            return m.direction * (m.sigma * rng.normal());
    }
    return {};
}
}  // namespace detail

/// `count` i.i.d. draws from the model; draw i is a pure function of
/// (model, seed, i).
inline std::vector<Vec3> sample_noise(const NoiseModel& model, std::size_t count, RngSeed seed,
                                      std::uint64_t stream = streams::kNoise) {
    model.validate();
    std::vector<Vec3> out;
    out.reserve(count);
    const RngStream base(seed, stream);
    for (std::size_t i = 0; i < count; ++i)
        out.push_back(detail::draw_noise(model, base.at(i * detail::kNoiseStride)));
    return out;
}

/// x_i = y_i + n_i; same length, same order.
inline PointCloud perturb(const PointCloud& cloud, const NoiseModel& model, RngSeed seed,
                          std::uint64_t stream = streams::kNoise) {
    const auto noise = sample_noise(model, cloud.size(), seed, stream);
    PointCloud out;
    out.reserve(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i) out.push_back(cloud[i] + noise[i]);
    return out;
}

/// Parse the CLI noise grammar:
///   gaussian:SIGMA
///   anisotropic:XX,XY,XZ,YY,YZ,ZZ   (covariance, upper triangle)
///   laplace:B
///   uniform_ball:R
///   unidirectional:DX,DY,DZ,SIGMA   (direction is normalized)
///   discrete:DX,DY,DZ,P;DX,DY,DZ,P;...
inline NoiseModel parse_noise_spec(std::string_view spec) {
    const auto colon = spec.find(':');
    const std::string kind(spec.substr(0, colon));
    const std::string args(colon == std::string_view::npos ? "" : spec.substr(colon + 1));
    auto split = [](const std::string& s, char sep) {
        std::vector<std::string> parts;
        std::string cur;
        std::istringstream in(s);
        while (std::getline(in, cur, sep)) parts.push_back(cur);
        return parts;
    };
    auto to_reals = [&](const std::string& s) {
        std::vector<double> vals;
        for (const auto& p : split(s, ',')) {
            std::size_t pos = 0;
            double v = 0.0;
            try {
                v = std::stod(p, &pos);
            } catch (const std::exception&) {
                throw std::invalid_argument("noise spec: bad number '" + p + "'");
            }
            if (pos != p.size()) throw std::invalid_argument("noise spec: bad number '" + p + "'");
            vals.push_back(v);
        }
        return vals;
    };

    if (kind == "gaussian") {
        const auto v = to_reals(args);
        if (v.size() != 1) throw std::invalid_argument("noise spec: gaussian:SIGMA");
        return NoiseModel::isotropic_gaussian(v[0]);
    }
    if (kind == "anisotropic") {
        const auto v = to_reals(args);
        if (v.size() != 6) throw std::invalid_argument("noise spec: anisotropic:XX,XY,XZ,YY,YZ,ZZ");
        return NoiseModel::anisotropic_gaussian({v[0], v[1], v[2], v[3], v[4], v[5]});
    }
    if (kind == "laplace") {
        const auto v = to_reals(args);
        if (v.size() != 1) throw std::invalid_argument("noise spec: laplace:B");
        return NoiseModel::laplace(v[0]);
    }
    if (kind == "uniform_ball") {
        const auto v = to_reals(args);
        if (v.size() != 1) throw std::invalid_argument("noise spec: uniform_ball:R");
        return NoiseModel::uniform_ball(v[0]);
    }
    if (kind == "unidirectional") {
        const auto v = to_reals(args);
        if (v.size() != 4) throw std::invalid_argument("noise spec: unidirectional:DX,DY,DZ,SIGMA");
        Vec3 d{v[0], v[1], v[2]};
        const double n = d.norm();
        if (n == 0.0) throw std::invalid_argument("noise spec: zero direction");
        return NoiseModel::unidirectional(d / n, v[3]);
    }
    if (kind == "discrete") {
        std::vector<Vec3> offsets;
        std::vector<double> probs;
        for (const auto& group : split(args, ';')) {
            const auto v = to_reals(group);
            if (v.size() != 4) throw std::invalid_argument("noise spec: discrete:DX,DY,DZ,P;...");
            offsets.push_back({v[0], v[1], v[2]});
            probs.push_back(v[3]);
        }
        return NoiseModel::discrete(std::move(offsets), std::move(probs));
    }
    throw std::invalid_argument("noise spec: unknown model '" + kind + "'");
}

/// Render a model back into the grammar accepted by parse_noise_spec.
inline std::string format_noise_spec(const NoiseModel& m) {
    char buf[256];
    switch (m.kind) {
        case NoiseModel::Kind::IsotropicGaussian:
            std::snprintf(buf, sizeof(buf), "gaussian:%.9g", m.sigma);
            return buf;
        case NoiseModel::Kind::AnisotropicGaussian:
            std::snprintf(buf, sizeof(buf), "anisotropic:%.9g,%.9g,%.9g,%.9g,%.9g,%.9g", m.cov[0],
                          m.cov[1], m.cov[2], m.cov[3], m.cov[4], m.cov[5]);
            return buf;
        case NoiseModel::Kind::Laplace:
            std::snprintf(buf, sizeof(buf), "laplace:%.9g", m.b);
            return buf;
        case NoiseModel::Kind::UniformBall:
            std::snprintf(buf, sizeof(buf), "uniform_ball:%.9g", m.radius);
            return buf;
        case NoiseModel::Kind::Unidirectional:
            std::snprintf(buf, sizeof(buf), "unidirectional:%.9g,%.9g,%.9g,%.9g", m.direction.x,
                          m.direction.y, m.direction.z, m.sigma);
            return buf;
        case NoiseModel::Kind::Discrete: {
            std::string out = "discrete:";
            for (std::size_t i = 0; i < m.offsets.size(); ++i) {
                std::snprintf(buf, sizeof(buf), "%s%.9g,%.9g,%.9g,%.9g", i ? ";" : "", m.offsets[i].x,
                              m.offsets[i].y, m.offsets[i].z, m.probabilities[i]);
                out += buf;
            }
            return out;
        }
    }
    return "";
}

}  // namespace sdn
