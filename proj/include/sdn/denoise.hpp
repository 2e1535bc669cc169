// Inference: the ensemble score field (frozen at the input positions),
// gradient-ascent updates with a decaying step schedule, whole-cloud patch
// orchestration, the direct-displacement ablation, and upsampling by
// denoising jittered copies.
//
// denoise_cloud composes per-point displacements: each output point is its
// input plus the patch-local displacement mapped back through the patch and
// global transforms. A zero score field therefore reproduces the input
// bit-for-bit.

#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "sdn/errors.hpp"
#include "sdn/geometry.hpp"
#include "sdn/kdtree.hpp"
#include "sdn/network.hpp"
#include "sdn/noise.hpp"
#include "sdn/oracle.hpp"
#include "sdn/patches.hpp"
#include "sdn/rng.hpp"

namespace sdn {

/// Decaying step sizes alpha_t = alpha1 * gamma^(t-1), t = 1..T.
/// Strictly non-increasing by construction; alpha1 < 1.
struct StepSchedule {
    double alpha1;
    double gamma;
    int steps;

    StepSchedule(double alpha1_, double gamma_, int steps_)
        : alpha1(alpha1_), gamma(gamma_), steps(steps_) {
        if (!(alpha1 > 0.0 && alpha1 < 1.0))
            throw std::invalid_argument("schedule: alpha1 must lie in (0, 1)");
        if (!(gamma > 0.0 && gamma <= 1.0))
            throw std::invalid_argument("schedule: gamma must lie in (0, 1]");
        if (steps < 1) throw std::invalid_argument("schedule: need at least one step");
    }

    double alpha(int t) const { return alpha1 * std::pow(gamma, t - 1); }
};

struct DenoiseConfig {
    enum class Mode { GradientAscent, DirectDisplacement };
    int ensemble_k = 4;
    StepSchedule schedule{0.2, 0.95, 30};
    int patch_size = 1000;
    double coverage_ratio = 3.0;
    Mode mode = Mode::GradientAscent;

    void validate() const {
        if (ensemble_k < 1) throw std::invalid_argument("denoise: ensemble K must be >= 1");
        if (patch_size < 1) throw std::invalid_argument("denoise: patch_size must be >= 1");
    }
};

/// Localized per-anchor scores S_j(x) for one patch (local frame).
class PatchScoreSource {
public:
    virtual ~PatchScoreSource() = default;
    virtual Vec3 score(int anchor, const Point3& x) const = 0;
    /// True when score() ignores the anchor (analytic oracles); lets the
    /// ensemble skip averaging identical values.
    virtual bool anchor_independent() const { return false; }
};

/// Learned scores: features extracted once from the input patch and frozen
/// for the whole trajectory; only query points move.
class NetworkScoreSource : public PatchScoreSource {
public:
    NetworkScoreSource(const PointCloud& patch, std::shared_ptr<const ScoreNetworkParams> params,
                       NetworkConfig cfg)
        : anchors_(patch),
          params_(std::move(params)),
          cfg_(std::move(cfg)),
          features_(extract_features(patch, *params_, cfg_)) {}

    Vec3 score(int anchor, const Point3& x) const override {
        return sdn::score(x, anchor, features_, anchors_, *params_, cfg_);
    }

    const FeatureSet& features() const { return features_; }

private:
    PointCloud anchors_;
    std::shared_ptr<const ScoreNetworkParams> params_;
    NetworkConfig cfg_;
    FeatureSet features_;
};

/// Oracle scores: sigma^2-scaled gradient of the empirical convolved
/// log-density, so the field magnitude approximates distance-to-surface like
/// the trained target does.
class EmpiricalOracleSource : public PatchScoreSource {
public:
    explicit EmpiricalOracleSource(EmpiricalConvolvedModel model) : model_(std::move(model)) {
        model_.validate();
    }

    Vec3 score(int, const Point3& x) const override {
        return empirical_score(model_, x) * (model_.sigma * model_.sigma);
    }

    bool anchor_independent() const override { return true; }

private:
    EmpiricalConvolvedModel model_;
};

/// E_i(x) = (1/K) sum over the K anchors nearest to x_i's *original*
/// position of S_j(x). Neighborhoods are resolved once at construction and
/// reused for every step.
class ScoreField {
public:
    ScoreField(std::shared_ptr<const PatchScoreSource> source, const PointCloud& anchor_positions,
               int ensemble_k)
        : source_(std::move(source)), k_(ensemble_k) {
        if (!source_) throw std::invalid_argument("ScoreField: null source");
        if (k_ < 1 || k_ > static_cast<int>(anchor_positions.size()))
            throw std::invalid_argument("ScoreField: ensemble K must lie in [1, patch size]");
        count_ = static_cast<int>(anchor_positions.size());
        const SpatialIndex index(anchor_positions);
        knn_.resize(static_cast<std::size_t>(count_) * k_);
        for (int i = 0; i < count_; ++i) {
            const auto nb = index.knn(anchor_positions[i], k_);
            for (int s = 0; s < k_; ++s) knn_[static_cast<std::size_t>(i) * k_ + s] = nb[s];
        }
    }

    int size() const { return count_; }

    Vec3 ensemble_score(int anchor, const Point3& x) const {
        if (anchor < 0 || anchor >= count_) throw std::invalid_argument("ensemble_score: bad anchor");
        if (source_->anchor_independent())
            return source_->score(knn_[static_cast<std::size_t>(anchor) * k_], x);
        Vec3 sum{};
        for (int s = 0; s < k_; ++s)
            sum += source_->score(knn_[static_cast<std::size_t>(anchor) * k_ + s], x);
        return sum / static_cast<double>(k_);
    }

private:
    std::shared_ptr<const PatchScoreSource> source_;
    int k_;
    int count_ = 0;
    std::vector<int> knn_;
};

inline Vec3 ensemble_score(const ScoreField& field, int anchor, const Point3& x) {
    return field.ensemble_score(anchor, x);
}

/// x_i(t) = x_i(t-1) + alpha_t * E_i(x_i(t-1)), all points in lockstep.
inline PointCloud gradient_ascent(const PointCloud& patch, const ScoreField& field,
                                  const StepSchedule& schedule) {
    if (static_cast<int>(patch.size()) != field.size())
        throw std::invalid_argument("gradient_ascent: patch/field size mismatch");
    PointCloud positions = patch;
    for (int t = 1; t <= schedule.steps; ++t) {
        const double alpha = schedule.alpha(t);
        for (std::size_t i = 0; i < positions.size(); ++i) {
            positions[i] += field.ensemble_score(static_cast<int>(i), positions[i]) * alpha;
            if (!positions[i].finite())
                throw NumericError("gradient_ascent: non-finite update for point " +
                                   std::to_string(i) + " at step " + std::to_string(t));
        }
    }
    return positions;
}

/// Ablation update: y_i = x_i + E_i(x_i), applied once.
inline PointCloud direct_displacement(const PointCloud& patch, const ScoreField& field) {
    if (static_cast<int>(patch.size()) != field.size())
        throw std::invalid_argument("direct_displacement: patch/field size mismatch");
    PointCloud out = patch;
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] += field.ensemble_score(static_cast<int>(i), out[i]);
        if (!out[i].finite())
            throw NumericError("direct_displacement: non-finite update for point " + std::to_string(i));
    }
    return out;
}

/// Builds the per-patch score source. Receives the patch in its local frame
/// plus the patch and global transforms so oracle sources can map their
/// support and scale into the same frame.
using ScoreSourceFactory = std::function<std::shared_ptr<const PatchScoreSource>(
    const PointCloud& local_patch, const NormalizationTransform& patch_transform,
    const NormalizationTransform& global_transform)>;

inline ScoreSourceFactory network_score_factory(ScoreNetworkParams params, NetworkConfig cfg) {
    auto shared = std::make_shared<const ScoreNetworkParams>(std::move(params));
    return [shared, cfg](const PointCloud& local_patch, const NormalizationTransform&,
                         const NormalizationTransform&) -> std::shared_ptr<const PatchScoreSource> {
        return std::make_shared<NetworkScoreSource>(local_patch, shared, cfg);
    };
}

/// Oracle factory: `clean_world` in the input cloud's frame, `sigma_norm`
/// as a fraction of the input's bounding-sphere radius.
inline ScoreSourceFactory empirical_oracle_factory(PointCloud clean_world, double sigma_norm) {
    auto shared = std::make_shared<const PointCloud>(std::move(clean_world));
    return [shared, sigma_norm](const PointCloud&, const NormalizationTransform& patch_transform,
                                const NormalizationTransform& global_transform)
               -> std::shared_ptr<const PatchScoreSource> {
        EmpiricalConvolvedModel model;
        model.support = patch_transform.apply(global_transform.apply(*shared));
        model.sigma = sigma_norm / patch_transform.scale;
        return std::make_shared<EmpiricalOracleSource>(std::move(model));
    };
}

/// Whole-cloud denoising: normalize to the unit sphere, extract patches,
/// run the per-patch update in each patch's local frame, stitch by nearest
/// seed (among the patches containing the point, ties to the lowest patch
/// id), and compose the displacement back onto the input.
inline PointCloud denoise_cloud(const PointCloud& cloud, const ScoreSourceFactory& factory,
                                const DenoiseConfig& cfg) {
    cfg.validate();
    require_nonempty(cloud);
    const auto [normalized, global_t] = normalize_unit_sphere(cloud);
    const auto patches = extract_patches(normalized, cfg.patch_size, cfg.coverage_ratio);

    // displacement of each point in the global-normalized frame, owned by
    // the containing patch with the nearest seed
    std::vector<Vec3> displacement(cloud.size());
    std::vector<double> owner_seed_d2(cloud.size(), std::numeric_limits<double>::infinity());

    for (std::size_t p = 0; p < patches.size(); ++p) {
        const Patch& patch = patches[p];
        PointCloud local;
        local.reserve(patch.indices.size());
        for (int idx : patch.indices) local.push_back(patch.transform.apply(normalized[idx]));

        PointCloud moved;
        try {
            const auto source = factory(local, patch.transform, global_t);
            const ScoreField field(source, local, cfg.ensemble_k);
            moved = cfg.mode == DenoiseConfig::Mode::GradientAscent
                        ? gradient_ascent(local, field, cfg.schedule)
                        : direct_displacement(local, field);
        } catch (const NumericError& e) {
            throw NumericError("patch " + std::to_string(p) + ": " + e.what());
        } catch (const std::invalid_argument& e) {
            throw std::invalid_argument("patch " + std::to_string(p) + ": " + e.what());
        }

        const Point3& seed_pos = normalized[patch.seed];
        for (std::size_t r = 0; r < patch.indices.size(); ++r) {
            const int idx = patch.indices[r];
            const double seed_d2 = dist2(normalized[idx], seed_pos);
            if (seed_d2 < owner_seed_d2[idx]) {  // strict: first (lowest) patch wins ties
                owner_seed_d2[idx] = seed_d2;
                displacement[idx] = (moved[r] - local[r]) * patch.transform.scale;
            }
        }
    }

    PointCloud out;
    out.reserve(cloud.size());
    for (std::size_t i = 0; i < cloud.size(); ++i)
        out.push_back(cloud[i] + displacement[i] * global_t.scale);
    return out;
}

inline PointCloud denoise_cloud(const PointCloud& cloud, const ScoreNetworkParams& params,
                                const NetworkConfig& net_cfg, const DenoiseConfig& cfg) {
    return denoise_cloud(cloud, network_score_factory(params, net_cfg), cfg);
}

/// r independent Gaussian jitters of the cloud, concatenated (rN points).
/// sigma is a fraction of the input's bounding-sphere radius; copy j uses
/// its own noise stream.
inline PointCloud jitter_concat(const PointCloud& cloud, int r, double sigma, RngSeed seed) {
    require_nonempty(cloud);
    if (r < 1) throw std::invalid_argument("jitter_concat: r must be >= 1");
    double max_r2 = 0.0;
    const Point3 c = centroid(cloud);
    for (const auto& p : cloud) max_r2 = std::max(max_r2, dist2(p, c));
    const double radius = std::sqrt(max_r2);
    const NoiseModel model = NoiseModel::isotropic_gaussian(sigma * (radius > 0.0 ? radius : 1.0));
    PointCloud out;
    out.reserve(cloud.size() * static_cast<std::size_t>(r));
    for (int j = 0; j < r; ++j) {
        const PointCloud jittered =
            perturb(cloud, model, seed, streams::per_step(streams::kUpsample, static_cast<std::uint64_t>(j)));
        out.insert(out.end(), jittered.begin(), jittered.end());
    }
    return out;
}

/// Upsample by denoising r jittered copies of the input.
inline PointCloud upsample_via_denoise(const PointCloud& cloud, int r, double sigma,
                                       const ScoreSourceFactory& factory, const DenoiseConfig& cfg,
                                       RngSeed seed) {
    return denoise_cloud(jitter_concat(cloud, r, sigma, seed), factory, cfg);
}

inline PointCloud upsample_via_denoise(const PointCloud& cloud, int r, double sigma,
                                       const ScoreNetworkParams& params, const NetworkConfig& net_cfg,
                                       const DenoiseConfig& cfg, RngSeed seed) {
    return upsample_via_denoise(cloud, r, sigma, network_score_factory(params, net_cfg), cfg, seed);
}

}  // namespace sdn
