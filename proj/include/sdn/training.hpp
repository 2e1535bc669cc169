// Training: ground-truth score targets, the neighborhood-sampled
// score-matching loss over anchors, and the adaptive-moment optimizer loop.

#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "sdn/errors.hpp"
#include "sdn/geometry.hpp"
#include "sdn/kdtree.hpp"
#include "sdn/network.hpp"
#include "sdn/noise.hpp"
#include "sdn/rng.hpp"

namespace sdn {

struct TrainConfig {
    double sigma_min = 0.005;  // fractions of the bounding-sphere radius
    double sigma_max = 0.02;
    int neighborhood_samples = 8;  // m, Monte-Carlo samples per anchor
    int anchors_per_patch = 128;
    double learning_rate = 1e-3;
    double adam_beta1 = 0.9;
    double adam_beta2 = 0.999;
    double adam_eps = 1e-8;
    int iterations = 2000;

    enum class LossVariant { Neighborhood, PointOnly };
    LossVariant loss = LossVariant::Neighborhood;

    void validate() const {
        if (!(sigma_min > 0.0 && sigma_max <= 0.1 && sigma_min <= sigma_max))
            throw std::invalid_argument("train: sigma range must lie within (0, 0.1]");
        if (neighborhood_samples < 1) throw std::invalid_argument("train: need m >= 1 samples");
        if (anchors_per_patch < 1) throw std::invalid_argument("train: need >= 1 anchor");
        if (iterations < 0) throw std::invalid_argument("train: negative iteration count");
        if (!(learning_rate > 0.0)) throw std::invalid_argument("train: learning rate must be > 0");
    }
};

/// s(x) = NN(x, Y) - x: the vector from x to the nearest clean point.
inline Vec3 ground_truth_score(const Point3& x, const SpatialIndex& clean_index) {
    return clean_index.points()[clean_index.nearest(x)] - x;
}

/// m i.i.d. isotropic Gaussian draws centered at x_i. Sample s uses the
/// counter window [8s, 8s+8) of the given stream.
inline std::vector<Point3> sample_neighborhood(const Point3& x_i, double std_dev, int m, RngSeed seed,
                                               std::uint64_t stream = streams::kTrainNeighborhood,
                                               std::uint64_t counter_base = 0) {
    if (std_dev < 0.0) throw std::invalid_argument("sample_neighborhood: std must be >= 0");
    if (m < 1) throw std::invalid_argument("sample_neighborhood: m must be >= 1");
    std::vector<Point3> out;
    out.reserve(static_cast<std::size_t>(m));
    const RngStream base(seed, stream);
    for (int s = 0; s < m; ++s) {
        RngStream rng = base.at(counter_base + static_cast<std::uint64_t>(s) * 8);
        out.push_back(x_i + Vec3{std_dev * rng.normal(), std_dev * rng.normal(), std_dev * rng.normal()});
    }
    return out;
}

/// A clean patch, its perturbed version, and the corruption scale, all in the
/// patch-local frame (centered/scaled by the *noisy* patch's own transform,
/// matching what the denoiser sees at test time).
struct TrainingPair {
    PointCloud clean;   // local frame, index-aligned with noisy
    PointCloud noisy;
    double sigma_local = 0.0;
    NormalizationTransform to_local;
    SpatialIndex clean_index;  // over clean
};

inline TrainingPair make_training_pair(const PointCloud& clean_patch, double sigma, RngSeed seed,
                                       std::uint64_t noise_stream) {
    require_nonempty(clean_patch);
    const PointCloud noisy_global =
        perturb(clean_patch, NoiseModel::isotropic_gaussian(sigma), seed, noise_stream);
    auto [noisy_local, t] = normalize_unit_sphere(noisy_global);
    PointCloud clean_local = t.apply(clean_patch);
    SpatialIndex idx(clean_local);
    return {std::move(clean_local), std::move(noisy_local), sigma / t.scale, t, std::move(idx)};
}

namespace detail {

// Draw `count` distinct indices from [0, n) by partial Fisher-Yates.
inline std::vector<int> sample_without_replacement(int n, int count, RngStream rng) {
    std::vector<int> idx(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) idx[i] = i;
    for (int t = 0; t < count; ++t) {
        const int j = t + static_cast<int>(rng.uniform() * (n - t));
        std::swap(idx[t], idx[j]);
    }
    idx.resize(static_cast<std::size_t>(count));
    return idx;
}

}  // namespace detail

/// Monte-Carlo score-matching loss for one training pair: per anchor, the
/// mean squared error between the ground-truth and predicted score over its
/// neighborhood samples; averaged over anchors. The point-only variant
/// replaces each anchor's sample set with {x_i}. When `grad` is non-null the
/// exact parameter gradient is accumulated into it.
inline double patch_loss(const TrainingPair& pair, const ScoreNetworkParams& params,
                         const NetworkConfig& net_cfg, const TrainConfig& cfg, RngSeed seed,
                         std::uint64_t step = 0, std::vector<double>* grad = nullptr) {
    cfg.validate();
    const int n = static_cast<int>(pair.noisy.size());
    const int anchor_count = std::min(cfg.anchors_per_patch, n);
    const int m = cfg.loss == TrainConfig::LossVariant::PointOnly ? 1 : cfg.neighborhood_samples;

    const std::vector<int> anchors = detail::sample_without_replacement(
        n, anchor_count, RngStream(seed, streams::per_step(streams::kTrainAnchors, step)));

    std::vector<Point3> queries;
    std::vector<int> row_anchors;
    queries.reserve(static_cast<std::size_t>(anchor_count) * m);
    row_anchors.reserve(queries.capacity());
    for (int a = 0; a < anchor_count; ++a) {
        const Point3& x_i = pair.noisy[anchors[a]];
        if (cfg.loss == TrainConfig::LossVariant::PointOnly) {
            queries.push_back(x_i);
            row_anchors.push_back(anchors[a]);
        } else {
            const auto samples =
                sample_neighborhood(x_i, pair.sigma_local, m, seed,
                                    streams::per_step(streams::kTrainNeighborhood, step),
                                    static_cast<std::uint64_t>(a) * m * 8);
            for (const auto& q : samples) {
                queries.push_back(q);
                row_anchors.push_back(anchors[a]);
            }
        }
    }

    const FeatureForward ff = extract_features_cached(pair.noisy, params, net_cfg);
    const ScoreForward sf = score_forward(queries, row_anchors, ff.features, pair.noisy, params, net_cfg);

    const int rows = static_cast<int>(queries.size());
    RowMat residual(rows, 3);
    for (int r = 0; r < rows; ++r) {
        const Vec3 target = ground_truth_score(queries[r], pair.clean_index);
        residual(r, 0) = sf.out(r, 0) - target.x;
        residual(r, 1) = sf.out(r, 1) - target.y;
        residual(r, 2) = sf.out(r, 2) - target.z;
    }
    const double loss = residual.squaredNorm() / rows;

    if (grad) {
        RowMat d_out = residual * (2.0 / rows);
        RowMat d_features = RowMat::Zero(ff.features.count, ff.features.dim);
        score_backward(sf, d_out, params, net_cfg, *grad, d_features);
        features_backward(ff, d_features, params, net_cfg, *grad);
    }
    return loss;
}

struct TrainResult {
    ScoreNetworkParams params;
    std::vector<std::pair<int, double>> loss_history;  // (step, loss)
};

/// Optimize the network over a pool of clean patches (global-normalized
/// frame). One patch per step; fresh noise and sigma each step; fully
/// deterministic given the seed. Throws NumericError naming the step if the
/// loss goes non-finite.
inline TrainResult train(const std::vector<PointCloud>& clean_patches, const TrainConfig& cfg,
                         const NetworkConfig& net_cfg, RngSeed seed) {
    cfg.validate();
    net_cfg.validate();
    if (clean_patches.empty()) throw std::invalid_argument("train: need at least one patch");

    TrainResult result;
    result.params = init_params(net_cfg, seed);
    const std::size_t p = result.params.values.size();
    std::vector<double> grad(p), m1(p, 0.0), m2(p, 0.0);

    const RngStream pick_rng(seed, streams::kTrainPatchPick);
    const RngStream sigma_rng(seed, streams::kTrainSigma);
    result.loss_history.reserve(static_cast<std::size_t>(cfg.iterations));

    for (int step = 0; step < cfg.iterations; ++step) {
        const std::size_t pick = std::min(
            clean_patches.size() - 1,
            static_cast<std::size_t>(pick_rng.at(step).uniform() * clean_patches.size()));
        const double sigma =
            cfg.sigma_min + sigma_rng.at(step).uniform() * (cfg.sigma_max - cfg.sigma_min);

        const TrainingPair pair =
            make_training_pair(clean_patches[pick], sigma, seed,
                               streams::per_step(streams::kTrainNoise, static_cast<std::uint64_t>(step)));

        std::fill(grad.begin(), grad.end(), 0.0);
        const double loss = patch_loss(pair, result.params, net_cfg, cfg, seed,
                                       static_cast<std::uint64_t>(step), &grad);
        if (!std::isfinite(loss))
            throw NumericError("train: non-finite loss at step " + std::to_string(step));

        const double t = static_cast<double>(step + 1);
        const double rate = cfg.learning_rate * std::sqrt(1.0 - std::pow(cfg.adam_beta2, t)) /
                            (1.0 - std::pow(cfg.adam_beta1, t));
        for (std::size_t i = 0; i < p; ++i) {
            m1[i] = cfg.adam_beta1 * m1[i] + (1.0 - cfg.adam_beta1) * grad[i];
            m2[i] = cfg.adam_beta2 * m2[i] + (1.0 - cfg.adam_beta2) * grad[i] * grad[i];
            result.params.values[i] -= rate * m1[i] / (std::sqrt(m2[i]) + cfg.adam_eps);
        }
        result.loss_history.emplace_back(step, loss);
    }
    return result;
}

/// Loss history as `step,loss` CSV.
inline std::string format_loss_csv(const std::vector<std::pair<int, double>>& history) {
    std::string out = "step,loss\n";
    char buf[64];
    for (const auto& [step, loss] : history) {
        std::snprintf(buf, sizeof(buf), "%d,%.9g\n", step, loss);
        out += buf;
    }
    return out;
}

}  // namespace sdn
