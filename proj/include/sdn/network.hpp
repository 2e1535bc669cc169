// The learnable score model: per-point features from densely concatenated
// dynamic graph convolution blocks, and a localized score MLP evaluated at
// coordinates relative to an anchor point. Forward passes cache what the
// hand-written reverse-mode backward needs; gradients are exact for the
// fixed architecture (ReLU subgradient 0 at 0, max-aggregation routed to the
// argmax edge with ties to the lowest neighbor index).
//
// Parameter vector layout (row-major, biases after their weight matrix):
//   for each block b:   W_b  (width_b x 2*in_b),  b_b  (width_b)
//   for each MLP layer: W    (out x in),          b    (out)
// with in_0 = 3, in_b = width_{b-1}; the MLP input is 3 + sum(widths) and
// its final layer has 3 outputs.

#pragma once

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "sdn/errors.hpp"
#include "sdn/geometry.hpp"
#include "sdn/kdtree.hpp"
#include "sdn/rng.hpp"

namespace sdn {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct NetworkConfig {
    int graph_k = 16;
    std::vector<int> block_widths = {32, 64, 128};
    std::vector<int> score_hidden = {128, 64};

    int feature_dim() const { return std::accumulate(block_widths.begin(), block_widths.end(), 0); }

    std::size_t param_count() const {
        std::size_t total = 0;
        int in = 3;
        for (int w : block_widths) {
            total += static_cast<std::size_t>(w) * (2 * in) + w;
            in = w;
        }
        in = 3 + feature_dim();
        for (int h : score_hidden) {
            total += static_cast<std::size_t>(h) * in + h;
            in = h;
        }
        total += static_cast<std::size_t>(3) * in + 3;
        return total;
    }

    void validate() const {
        if (graph_k < 1) throw std::invalid_argument("network: graph_k must be >= 1");
        if (block_widths.empty()) throw std::invalid_argument("network: need at least one block");
        for (int w : block_widths)
            if (w < 1) throw std::invalid_argument("network: block width must be >= 1");
        for (int h : score_hidden)
            if (h < 1) throw std::invalid_argument("network: hidden width must be >= 1");
    }
};

struct ScoreNetworkParams {
    std::vector<double> values;
};

namespace detail {

struct Slice {
    std::size_t off = 0;
    int rows = 0, cols = 0;  // cols == 1 for bias vectors
};

struct ParamLayout {
    std::vector<Slice> block_w, block_b;
    std::vector<Slice> mlp_w, mlp_b;  // hidden layers then the 3-output layer
    std::size_t total = 0;

    static ParamLayout of(const NetworkConfig& cfg) {
        ParamLayout l;
        std::size_t off = 0;
        auto push = [&off](std::vector<Slice>& dst, int rows, int cols) {
            dst.push_back({off, rows, cols});
            off += static_cast<std::size_t>(rows) * cols;
        };
        int in = 3;
        for (int w : cfg.block_widths) {
            push(l.block_w, w, 2 * in);
            push(l.block_b, w, 1);
            in = w;
        }
        in = 3 + cfg.feature_dim();
        for (int h : cfg.score_hidden) {
            push(l.mlp_w, h, in);
            push(l.mlp_b, h, 1);
            in = h;
        }
        push(l.mlp_w, 3, in);
        push(l.mlp_b, 3, 1);
        l.total = off;
        return l;
    }
};

inline Eigen::Map<const RowMat> cmat(const std::vector<double>& v, const Slice& s) {
    return {v.data() + s.off, s.rows, s.cols};
}
inline Eigen::Map<const Eigen::VectorXd> cvec(const std::vector<double>& v, const Slice& s) {
    return {v.data() + s.off, s.rows};
}
inline Eigen::Map<RowMat> mmat(std::vector<double>& v, const Slice& s) {
    return {v.data() + s.off, s.rows, s.cols};
}
inline Eigen::Map<Eigen::VectorXd> mvec(std::vector<double>& v, const Slice& s) {
    return {v.data() + s.off, s.rows};
}

inline void check_params(const ScoreNetworkParams& params, const NetworkConfig& cfg) {
    cfg.validate();
    if (params.values.size() != cfg.param_count())
        throw std::invalid_argument("network: parameter vector has length " +
                                    std::to_string(params.values.size()) + ", config implies " +
                                    std::to_string(cfg.param_count()));
}

}  // namespace detail

/// Fan-in-scaled uniform weights, zero biases, zero final score layer (so an
/// untrained network scores identically zero). Element at flat offset p is
/// drawn at counter p, independent of everything else.
inline ScoreNetworkParams init_params(const NetworkConfig& cfg, RngSeed seed) {
    cfg.validate();
    const auto layout = detail::ParamLayout::of(cfg);
    ScoreNetworkParams params;
    params.values.assign(layout.total, 0.0);
    const RngStream base(seed, streams::kParamInit);
    auto fill = [&](const detail::Slice& w) {
        const double s = 1.0 / std::sqrt(static_cast<double>(w.cols));
        for (std::size_t i = 0; i < static_cast<std::size_t>(w.rows) * w.cols; ++i)
            params.values[w.off + i] = s * (2.0 * base.at(w.off + i).uniform() - 1.0);
    };
    for (const auto& w : layout.block_w) fill(w);
    for (std::size_t i = 0; i + 1 < layout.mlp_w.size(); ++i) fill(layout.mlp_w[i]);
    // biases and the last MLP layer stay zero
    return params;
}

struct FeatureSet {
    int count = 0;
    int dim = 0;
    RowMat values;  // count x dim, row i = h_i
};

namespace detail {

struct BlockCache {
    std::vector<int> neighbors;    // count x k, row-major point indices
    std::vector<int> argmax_slot;  // count x width, winning neighbor slot
    RowMat input;                  // count x in
    RowMat output;                 // count x width
};

// k nearest other points in coordinate space (self excluded), per point.
inline std::vector<int> coordinate_graph(const PointCloud& pts, int k) {
    const SpatialIndex index(pts);
    const int n = static_cast<int>(pts.size());
    std::vector<int> nb(static_cast<std::size_t>(n) * k);
    for (int i = 0; i < n; ++i) {
        const auto found = index.knn(pts[i], k + 1);
        int written = 0;
        for (int j : found) {
            if (j == i) continue;
            nb[static_cast<std::size_t>(i) * k + written] = j;
            if (++written == k) break;
        }
        if (written != k) throw std::logic_error("coordinate_graph: internal neighbor shortfall");
    }
    return nb;
}

// k nearest other rows in feature space. Distances are accumulated per pair
// in fixed column order, so results are invariant to row permutation.
inline std::vector<int> feature_graph(const RowMat& h, int k) {
    const int n = static_cast<int>(h.rows());
    const int d = static_cast<int>(h.cols());
    std::vector<int> nb(static_cast<std::size_t>(n) * k);
    std::vector<std::pair<double, int>> cand;
    cand.reserve(n - 1);
    for (int i = 0; i < n; ++i) {
        cand.clear();
        const double* hi = h.data() + static_cast<std::size_t>(i) * d;
        for (int j = 0; j < n; ++j) {
            if (j == i) continue;
            const double* hj = h.data() + static_cast<std::size_t>(j) * d;
            double d2 = 0.0;
            for (int c = 0; c < d; ++c) {
                const double diff = hi[c] - hj[c];
                d2 += diff * diff;
            }
            cand.emplace_back(d2, j);
        }
        std::nth_element(cand.begin(), cand.begin() + (k - 1), cand.end());
        std::sort(cand.begin(), cand.begin() + k);
        for (int s = 0; s < k; ++s) nb[static_cast<std::size_t>(i) * k + s] = cand[s].second;
    }
    return nb;
}

// Shared edge transform + max aggregation for one block. The per-point edge
// GEMM has identical shape for every point, so identical inputs give
// bit-identical outputs regardless of position in the cloud.
inline void block_forward(const std::vector<double>& values, const Slice& ws, const Slice& bs,
                          BlockCache& cache, int k) {
    const auto w = cmat(values, ws);
    const auto b = cvec(values, bs);
    const int n = static_cast<int>(cache.input.rows());
    const int d = static_cast<int>(cache.input.cols());
    const int width = ws.rows;
    cache.output.resize(n, width);
    cache.argmax_slot.assign(static_cast<std::size_t>(n) * width, 0);

    RowMat edge(k, 2 * d);
    RowMat z(k, width);
    for (int i = 0; i < n; ++i) {
        for (int s = 0; s < k; ++s) {
            const int j = cache.neighbors[static_cast<std::size_t>(i) * k + s];
            edge.row(s).head(d) = cache.input.row(i);
            edge.row(s).tail(d) = cache.input.row(j) - cache.input.row(i);
        }
        z.noalias() = edge * w.transpose();
        z.rowwise() += b.transpose();
        for (int c = 0; c < width; ++c) {
            double best = z(0, c);
            int best_slot = 0;
            int best_idx = cache.neighbors[static_cast<std::size_t>(i) * k];
            for (int s = 1; s < k; ++s) {
                const int j = cache.neighbors[static_cast<std::size_t>(i) * k + s];
                const double v = z(s, c);
                if (v > best || (v == best && j < best_idx)) {
                    best = v;
                    best_slot = s;
                    best_idx = j;
                }
            }
            cache.output(i, c) = best > 0.0 ? best : 0.0;
            cache.argmax_slot[static_cast<std::size_t>(i) * width + c] = best_slot;
        }
    }
}

}  // namespace detail

/// Forward pass of the feature extractor with the per-block caches needed by
/// features_backward.
struct FeatureForward {
    std::vector<detail::BlockCache> blocks;
    FeatureSet features;
};

inline FeatureForward extract_features_cached(const PointCloud& patch, const ScoreNetworkParams& params,
                                              const NetworkConfig& cfg) {
    detail::check_params(params, cfg);
    const int n = static_cast<int>(patch.size());
    if (n <= cfg.graph_k)
        throw std::invalid_argument("extract_features: need more than graph_k=" +
                                    std::to_string(cfg.graph_k) + " points, got " + std::to_string(n));
    const auto layout = detail::ParamLayout::of(cfg);

    FeatureForward ff;
    ff.blocks.resize(cfg.block_widths.size());

    RowMat h(n, 3);
    for (int i = 0; i < n; ++i) h.row(i) << patch[i].x, patch[i].y, patch[i].z;

    for (std::size_t b = 0; b < cfg.block_widths.size(); ++b) {
        auto& cache = ff.blocks[b];
        cache.input = std::move(h);
        cache.neighbors = b == 0 ? detail::coordinate_graph(patch, cfg.graph_k)
                                 : detail::feature_graph(cache.input, cfg.graph_k);
        detail::block_forward(params.values, layout.block_w[b], layout.block_b[b], cache, cfg.graph_k);
        h = cache.output;
    }

    ff.features.count = n;
    ff.features.dim = cfg.feature_dim();
    ff.features.values.resize(n, ff.features.dim);
    int col = 0;
    for (const auto& cache : ff.blocks) {
        ff.features.values.middleCols(col, cache.output.cols()) = cache.output;
        col += static_cast<int>(cache.output.cols());
    }
    if (!ff.features.values.allFinite()) throw NumericError("extract_features: non-finite feature");
    return ff;
}

/// Per-point features h_i for a centered/scaled patch.
inline FeatureSet extract_features(const PointCloud& patch, const ScoreNetworkParams& params,
                                   const NetworkConfig& cfg) {
    return extract_features_cached(patch, params, cfg).features;
}

namespace detail {

// One score-unit evaluation: v = [x - x_anchor, h_anchor] through the MLP.
// Matrix-vector products keep single and batched evaluations bit-identical.
inline void score_unit_forward(const std::vector<double>& values, const ParamLayout& layout,
                               const Eigen::VectorXd& input, std::vector<Eigen::VectorXd>& acts) {
    acts.clear();
    Eigen::VectorXd v = input;
    for (std::size_t l = 0; l + 1 < layout.mlp_w.size(); ++l) {
        Eigen::VectorXd next = cmat(values, layout.mlp_w[l]) * v + cvec(values, layout.mlp_b[l]);
        next = next.cwiseMax(0.0);
        acts.push_back(next);
        v = std::move(next);
    }
    acts.push_back(cmat(values, layout.mlp_w.back()) * v + cvec(values, layout.mlp_b.back()));
}

}  // namespace detail

/// S_i(x): the localized score at x for anchor i; depends on x only through
/// x - x_i and the anchor's feature vector.
inline Vec3 score(const Point3& x, int anchor, const FeatureSet& features,
                  const PointCloud& anchor_positions, const ScoreNetworkParams& params,
                  const NetworkConfig& cfg) {
    detail::check_params(params, cfg);
    if (anchor < 0 || anchor >= features.count) throw std::invalid_argument("score: anchor out of range");
    if (static_cast<int>(anchor_positions.size()) != features.count)
        throw std::invalid_argument("score: anchor positions / features size mismatch");
    const auto layout = detail::ParamLayout::of(cfg);
    Eigen::VectorXd input(3 + features.dim);
    const Vec3 rel = x - anchor_positions[anchor];
    input << rel.x, rel.y, rel.z, features.values.row(anchor).transpose();
    std::vector<Eigen::VectorXd> acts;
    detail::score_unit_forward(params.values, layout, input, acts);
    const Eigen::VectorXd& out = acts.back();
    return {out[0], out[1], out[2]};
}

/// Batched score evaluations (row r: query r against anchors[r]) with cached
/// activations for the backward pass. Rows are evaluated independently.
struct ScoreForward {
    std::vector<int> anchors;
    RowMat input;                 // B x (3 + F)
    std::vector<RowMat> hidden;   // post-ReLU activations per hidden layer
    RowMat out;                   // B x 3
};

inline ScoreForward score_forward(const std::vector<Point3>& queries, const std::vector<int>& anchors,
                                  const FeatureSet& features, const PointCloud& anchor_positions,
                                  const ScoreNetworkParams& params, const NetworkConfig& cfg) {
    detail::check_params(params, cfg);
    if (queries.size() != anchors.size())
        throw std::invalid_argument("score_forward: queries/anchors size mismatch");
    const auto layout = detail::ParamLayout::of(cfg);
    const int b_rows = static_cast<int>(queries.size());
    const int in_dim = 3 + features.dim;

    ScoreForward sf;
    sf.anchors = anchors;
    sf.input.resize(b_rows, in_dim);
    sf.hidden.resize(cfg.score_hidden.size());
    for (std::size_t l = 0; l < cfg.score_hidden.size(); ++l)
        sf.hidden[l].resize(b_rows, cfg.score_hidden[l]);
    sf.out.resize(b_rows, 3);

    std::vector<Eigen::VectorXd> acts;
    Eigen::VectorXd input(in_dim);
    for (int r = 0; r < b_rows; ++r) {
        const int a = anchors[r];
        if (a < 0 || a >= features.count) throw std::invalid_argument("score_forward: anchor out of range");
        const Vec3 rel = queries[r] - anchor_positions[a];
        input << rel.x, rel.y, rel.z, features.values.row(a).transpose();
        sf.input.row(r) = input.transpose();
        detail::score_unit_forward(params.values, layout, input, acts);
        for (std::size_t l = 0; l < cfg.score_hidden.size(); ++l) sf.hidden[l].row(r) = acts[l].transpose();
        sf.out.row(r) = acts.back().transpose();
    }
    return sf;
}

/// Reverse pass through the score unit. Accumulates parameter gradients into
/// `grad` (flat, same layout as params) and per-anchor feature gradients into
/// `d_features` (count x F).
inline void score_backward(const ScoreForward& sf, const RowMat& d_out, const ScoreNetworkParams& params,
                           const NetworkConfig& cfg, std::vector<double>& grad, RowMat& d_features) {
    detail::check_params(params, cfg);
    const auto layout = detail::ParamLayout::of(cfg);
    if (grad.size() != layout.total) throw std::invalid_argument("score_backward: bad gradient size");
    const int b_rows = static_cast<int>(sf.out.rows());
    const std::size_t n_hidden = cfg.score_hidden.size();

    Eigen::VectorXd d_cur, d_prev;
    for (int r = 0; r < b_rows; ++r) {
        d_cur = d_out.row(r).transpose();
        for (std::size_t l = n_hidden + 1; l-- > 0;) {
            const auto w = detail::cmat(params.values, layout.mlp_w[l]);
            auto dw = detail::mmat(grad, layout.mlp_w[l]);
            auto db = detail::mvec(grad, layout.mlp_b[l]);
            const auto prev = l == 0 ? sf.input.row(r) : sf.hidden[l - 1].row(r);
            dw.noalias() += d_cur * prev;
            db += d_cur;
            d_prev.noalias() = w.transpose() * d_cur;
            if (l > 0) {
                // ReLU subgradient: 0 at 0
                for (int c = 0; c < d_prev.size(); ++c)
                    if (sf.hidden[l - 1](r, c) <= 0.0) d_prev[c] = 0.0;
            }
            d_cur = std::move(d_prev);
        }
        d_features.row(sf.anchors[r]) += d_cur.tail(d_features.cols()).transpose();
    }
}

/// Reverse pass through the feature extractor given per-point feature
/// gradients (count x F). Graph edges are treated as constants.
inline void features_backward(const FeatureForward& ff, const RowMat& d_features,
                              const ScoreNetworkParams& params, const NetworkConfig& cfg,
                              std::vector<double>& grad) {
    detail::check_params(params, cfg);
    const auto layout = detail::ParamLayout::of(cfg);
    if (grad.size() != layout.total) throw std::invalid_argument("features_backward: bad gradient size");
    const int n = ff.features.count;
    const int k = cfg.graph_k;

    RowMat d_out;
    {
        // split the concatenated gradient back into per-block columns
        int col = static_cast<int>(d_features.cols());
        std::vector<RowMat> per_block(ff.blocks.size());
        for (std::size_t b = ff.blocks.size(); b-- > 0;) {
            const int w = static_cast<int>(ff.blocks[b].output.cols());
            col -= w;
            per_block[b] = d_features.middleCols(col, w);
        }
        for (std::size_t b = ff.blocks.size(); b-- > 0;) {
            const auto& cache = ff.blocks[b];
            const int width = static_cast<int>(cache.output.cols());
            const int d = static_cast<int>(cache.input.cols());
            const auto w = detail::cmat(params.values, layout.block_w[b]);
            auto dw = detail::mmat(grad, layout.block_w[b]);
            auto db = detail::mvec(grad, layout.block_b[b]);
            d_out = std::move(per_block[b]);
            RowMat d_in = RowMat::Zero(n, d);
            for (int i = 0; i < n; ++i) {
                for (int c = 0; c < width; ++c) {
                    const double g = d_out(i, c);
                    if (g == 0.0 || cache.output(i, c) <= 0.0) continue;
                    const int slot = cache.argmax_slot[static_cast<std::size_t>(i) * width + c];
                    const int j = cache.neighbors[static_cast<std::size_t>(i) * k + slot];
                    dw.row(c).head(d) += g * cache.input.row(i);
                    dw.row(c).tail(d) += g * (cache.input.row(j) - cache.input.row(i));
                    db(c) += g;
                    d_in.row(i) += g * (w.row(c).head(d) - w.row(c).tail(d));
                    d_in.row(j) += g * w.row(c).tail(d);
                }
            }
            if (b > 0) per_block[b - 1] += d_in;  // dense input feeds the previous block's output
        }
    }
}

}  // namespace sdn
