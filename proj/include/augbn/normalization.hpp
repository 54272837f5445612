#pragma once

#include "augbn/tensor.hpp"

#include <cstddef>
#include <stdexcept>
#include <vector>

namespace augbn {

/// Scale/shift parameters of one BN layer.
template <class Scalar>
struct BnParamsT {
    VecX<Scalar> gamma;
    VecX<Scalar> beta;
    Scalar epsilon = Scalar(1e-5);

    int channels() const { return static_cast<int>(gamma.size()); }

    void validate() const {
        if (gamma.size() != beta.size())
            throw std::invalid_argument("BnParams: gamma/beta length mismatch");
        if (!(epsilon > Scalar(0)))
            throw std::invalid_argument("BnParams: epsilon must be positive");
    }
};

using BnParams = BnParamsT<float>;

/// Weights over {original, augment_1, ..., augment_n}. Stored in double:
/// the sum-to-one tolerance is tighter than f32 rounding allows.
struct AugWeights {
    VecXd w;

    /// Half the mass on the original, the rest split over the augments;
    /// n = 0 degenerates to a single unit weight.
    static AugWeights balanced(int n_augments) {
        if (n_augments < 0)
            throw std::invalid_argument("AugWeights: augment count must be non-negative");
        AugWeights a;
        if (n_augments == 0) {
            a.w = VecXd::Ones(1);
        } else {
            a.w.resize(n_augments + 1);
            a.w[0] = 0.5;
            for (int i = 1; i <= n_augments; ++i) a.w[i] = 0.5 / n_augments;
        }
        a.validate();
        return a;
    }

    static AugWeights from_vector(VecXd values) {
        AugWeights a;
        a.w = std::move(values);
        a.validate();
        return a;
    }

    int count() const { return static_cast<int>(w.size()); }

    void validate() const {
        if (w.size() < 1) throw std::invalid_argument("AugWeights: empty");
        double sum = 0.0;
        for (Eigen::Index i = 0; i < w.size(); ++i) {
            if (w[i] < 0.0) throw std::invalid_argument("AugWeights: negative weight");
            sum += w[i];
        }
        if (std::abs(sum - 1.0) > 1e-9)
            throw std::invalid_argument("AugWeights: weights must sum to 1");
    }
};

namespace detail {

// Weighted per-channel moments over a set of equally shaped (C,H,W)
// feature planes: weighted mean of spatial means, then the weighted second
// moment about that mean. Double accumulation throughout.
template <class Scalar>
ChannelStatsT<Scalar> weighted_plane_stats(const std::vector<const Scalar*>& planes, int C, int H,
                                           int W, const AugWeights& weights) {
    if (static_cast<int>(planes.size()) != weights.count())
        throw std::invalid_argument("weighted_target_stats: weight/feature count mismatch");
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    ChannelStatsT<Scalar> stats;
    stats.mean.resize(C);
    stats.variance.resize(C);
    for (int c = 0; c < C; ++c) {
        double mu = 0.0;
        for (std::size_t i = 0; i < planes.size(); ++i) {
            Eigen::Map<const VecX<Scalar>> v(planes[i] + static_cast<std::size_t>(c) * plane,
                                             static_cast<Eigen::Index>(plane));
            mu += weights.w[static_cast<Eigen::Index>(i)] *
                  (v.template cast<double>().sum() / static_cast<double>(plane));
        }
        double var = 0.0;
        for (std::size_t i = 0; i < planes.size(); ++i) {
            Eigen::Map<const ArrX<Scalar>> v(planes[i] + static_cast<std::size_t>(c) * plane,
                                             static_cast<Eigen::Index>(plane));
            var += weights.w[static_cast<Eigen::Index>(i)] *
                   ((v.template cast<double>() - mu).square().sum() / static_cast<double>(plane));
        }
        stats.mean[c] = static_cast<Scalar>(mu);
        stats.variance[c] = static_cast<Scalar>(var);
    }
    return stats;
}

// Shared normalization kernel: every BN flavour funnels through this exact
// code path, so stat choices that collapse algebraically also collapse
// bitwise.
template <class Scalar>
void normalize_rows(TensorT<Scalar>& x, int first_row, int row_count,
                    const ChannelStatsT<Scalar>& stats, const BnParamsT<Scalar>& params) {
    const int C = x.dim(1);
    const std::size_t plane = static_cast<std::size_t>(x.dim(2)) * x.dim(3);
    if (stats.channels() != C || params.channels() != C)
        throw std::invalid_argument("bn_forward: channel mismatch");
    params.validate();
    for (int n = first_row; n < first_row + row_count; ++n)
        for (int c = 0; c < C; ++c) {
            const Scalar inv_std =
                Scalar(1) / std::sqrt(stats.variance[c] + params.epsilon);
            const Scalar scale = params.gamma[c] * inv_std;
            const Scalar shift = params.beta[c] - stats.mean[c] * scale;
            Scalar* p = x.data() + (static_cast<std::size_t>(n) * C + c) * plane;
            Eigen::Map<ArrX<Scalar>> v(p, static_cast<Eigen::Index>(plane));
            v = v * scale + shift;
        }
}

} // namespace detail

/// Inference-mode BN: gamma * (x - mean) / sqrt(variance + eps) + beta,
/// rows normalized independently with the given stats.
template <class Scalar>
TensorT<Scalar> bn_forward(const TensorT<Scalar>& x, const ChannelStatsT<Scalar>& stats,
                           const BnParamsT<Scalar>& params) {
    detail::require_rank4(x, "bn_forward");
    TensorT<Scalar> out = x;
    detail::normalize_rows(out, 0, out.dim(0), stats, params);
    return out;
}

/// Weighted target moments over {original, augments} feature tensors,
/// each of shape [1,C,H,W].
template <class Scalar>
ChannelStatsT<Scalar> weighted_target_stats(const std::vector<TensorT<Scalar>>& features,
                                            const AugWeights& weights) {
    if (features.empty()) throw std::invalid_argument("weighted_target_stats: no features");
    for (const auto& f : features) {
        detail::require_rank4(f, "weighted_target_stats");
        if (f.dim(0) != 1 || !f.same_shape(features.front()))
            throw std::invalid_argument("weighted_target_stats: features must share shape [1,C,H,W]");
    }
    std::vector<const Scalar*> planes;
    planes.reserve(features.size());
    for (const auto& f : features) planes.push_back(f.data());
    return detail::weighted_plane_stats<Scalar>(planes, features.front().dim(1),
                                                features.front().dim(2), features.front().dim(3),
                                                weights);
}

/// Row-batched variant: row 0 is the original image's features, rows 1..n
/// the augment features.
template <class Scalar>
ChannelStatsT<Scalar> weighted_row_stats(const TensorT<Scalar>& batch, const AugWeights& weights) {
    detail::require_rank4(batch, "weighted_row_stats");
    std::vector<const Scalar*> planes;
    planes.reserve(static_cast<std::size_t>(batch.dim(0)));
    for (int n = 0; n < batch.dim(0); ++n) planes.push_back(batch.row_data(n));
    return detail::weighted_plane_stats<Scalar>(planes, batch.dim(1), batch.dim(2), batch.dim(3),
                                                weights);
}

/// Convex blend of source and target stats. Default blends variances; with
/// std_blend the standard deviations are blended and re-squared.
template <class Scalar>
ChannelStatsT<Scalar> combine_stats(const ChannelStatsT<Scalar>& source,
                                    const ChannelStatsT<Scalar>& target, Scalar lambda,
                                    bool std_blend = false) {
    if (source.channels() != target.channels())
        throw std::invalid_argument("combine_stats: channel mismatch");
    if (!(lambda >= Scalar(0) && lambda <= Scalar(1)))
        throw std::invalid_argument("combine_stats: lambda must lie in [0,1]");
    ChannelStatsT<Scalar> out;
    out.mean = lambda * source.mean + (Scalar(1) - lambda) * target.mean;
    if (std_blend) {
        VecX<Scalar> s =
            lambda * source.variance.array().sqrt().matrix() +
            (Scalar(1) - lambda) * target.variance.array().sqrt().matrix();
        out.variance = s.array().square().matrix();
    } else {
        out.variance = lambda * source.variance + (Scalar(1) - lambda) * target.variance;
    }
    return out;
}

/// AugBN layer: estimate target stats from the whole {original, augments}
/// batch, blend with the source prior, normalize every row with the
/// blended stats so augment features stay meaningful for deeper layers.
template <class Scalar>
TensorT<Scalar> augbn_forward(const TensorT<Scalar>& batch, const ChannelStatsT<Scalar>& source,
                              const BnParamsT<Scalar>& params, Scalar lambda,
                              const AugWeights& weights, bool std_blend = false) {
    detail::require_rank4(batch, "augbn_forward");
    if (batch.dim(0) != weights.count())
        throw std::invalid_argument("augbn_forward: batch rows do not match weight count");
    const ChannelStatsT<Scalar> target = weighted_row_stats(batch, weights);
    const ChannelStatsT<Scalar> blended = combine_stats(source, target, lambda, std_blend);
    TensorT<Scalar> out = batch;
    detail::normalize_rows(out, 0, out.dim(0), blended, params);
    return out;
}

/// Multi-prior AugBN: the batch is n_p contiguous replicas of one
/// (n+1)-row group; replica p is normalized with its own group stats
/// blended under priors[p]. Equivalent to per-prior augbn_forward calls,
/// executed in one pass.
template <class Scalar>
TensorT<Scalar> augbn_multiprior_forward(const TensorT<Scalar>& batch,
                                         const ChannelStatsT<Scalar>& source,
                                         const BnParamsT<Scalar>& params,
                                         const std::vector<Scalar>& priors,
                                         const AugWeights& weights, bool std_blend = false) {
    detail::require_rank4(batch, "augbn_multiprior_forward");
    const int n_p = static_cast<int>(priors.size());
    if (n_p < 1) throw std::invalid_argument("augbn_multiprior_forward: no priors");
    if (batch.dim(0) % n_p != 0)
        throw std::invalid_argument("augbn_multiprior_forward: batch extent not divisible by prior count");
    const int group = batch.dim(0) / n_p;
    if (group != weights.count())
        throw std::invalid_argument("augbn_multiprior_forward: group size does not match weight count");

    TensorT<Scalar> out = batch;
    std::vector<const Scalar*> planes(static_cast<std::size_t>(group));
    for (int p = 0; p < n_p; ++p) {
        for (int i = 0; i < group; ++i)
            planes[static_cast<std::size_t>(i)] = batch.row_data(p * group + i);
        const ChannelStatsT<Scalar> target = detail::weighted_plane_stats<Scalar>(
            planes, batch.dim(1), batch.dim(2), batch.dim(3), weights);
        const ChannelStatsT<Scalar> blended = combine_stats(source, target, priors[p], std_blend);
        detail::normalize_rows(out, p * group, group, blended, params);
    }
    return out;
}

} // namespace augbn
