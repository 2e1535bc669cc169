// Closed-form and empirical score fields of the noise-convolved distribution,
// used to validate the denoising dynamics independent of any learned model.
// The empirical model convolves the empirical measure on a support cloud with
// an isotropic Gaussian; its log-density and score are exact (up to the
// omitted normalizer) and mutually consistent.

#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include "sdn/geometry.hpp"

namespace sdn {

struct EmpiricalConvolvedModel {
    PointCloud support;  // |Y| >= 1
    double sigma = 0.0;  // > 0

    void validate() const {
        if (support.empty()) throw std::invalid_argument("oracle: empty support cloud");
        if (!(sigma > 0.0)) throw std::invalid_argument("oracle: sigma must be > 0");
    }
};

/// log sum_j exp(-|x - y_j|^2 / (2 sigma^2)), max-shift stabilized.
/// Exact up to the additive normalizing constant.
inline double empirical_log_density(const EmpiricalConvolvedModel& model, const Point3& x) {
    model.validate();
    const double inv = 1.0 / (2.0 * model.sigma * model.sigma);
    double max_e = -std::numeric_limits<double>::infinity();
    for (const auto& y : model.support) max_e = std::max(max_e, -dist2(x, y) * inv);
    double acc = 0.0;
    for (const auto& y : model.support) acc += std::exp(-dist2(x, y) * inv - max_e);
    return max_e + std::log(acc);
}

/// Gradient of empirical_log_density: softmax-weighted sum of (y_j - x)/sigma^2.
inline Vec3 empirical_score(const EmpiricalConvolvedModel& model, const Point3& x) {
    model.validate();
    const double inv = 1.0 / (2.0 * model.sigma * model.sigma);
    double max_e = -std::numeric_limits<double>::infinity();
    for (const auto& y : model.support) max_e = std::max(max_e, -dist2(x, y) * inv);
    double denom = 0.0;
    Vec3 num{};
    for (const auto& y : model.support) {
        const double w = std::exp(-dist2(x, y) * inv - max_e);
        denom += w;
        num += (y - x) * w;
    }
    return num / (denom * model.sigma * model.sigma);
}

/// Uniform density on the plane z = 0 convolved with an isotropic Gaussian
/// (canonical frame; callers rotate their data, not the oracle).
struct PlaneGaussianModel {
    double sigma = 0.0;  // > 0

    void validate() const {
        if (!(sigma > 0.0)) throw std::invalid_argument("oracle: sigma must be > 0");
    }
};

/// Exact score of the plane model: (0, 0, -z / sigma^2).
inline Vec3 plane_score(const PlaneGaussianModel& model, const Point3& x) {
    model.validate();
    return {0.0, 0.0, -x.z / (model.sigma * model.sigma)};
}

/// Score rescaled so its magnitude equals the distance to the surface,
/// mirroring the trained target: (0, 0, -z).
inline Vec3 normalized_plane_score(const PlaneGaussianModel& model, const Point3& x) {
    model.validate();
    return {0.0, 0.0, -x.z};
}

}  // namespace sdn
