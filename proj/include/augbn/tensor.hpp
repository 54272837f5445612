#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace augbn {

template <class Scalar>
using VecX = Eigen::Vector<Scalar, Eigen::Dynamic>;
template <class Scalar>
using RowMat = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <class Scalar>
using ArrX = Eigen::Array<Scalar, Eigen::Dynamic, 1>;

using VecXf = VecX<float>;
using VecXd = VecX<double>;

/// Dense row-major tensor of rank 1..4 with extents ordered (N, C, H, W).
/// The float instantiation is the value type used throughout; the double
/// instantiation exists for high-precision reference paths.
template <class Scalar>
class TensorT {
public:
    TensorT() = default;

    explicit TensorT(std::vector<int> shape, Scalar fill = Scalar(0))
        : shape_(std::move(shape)), data_(checked_size(shape_), fill) {}

    static TensorT from_data(std::vector<int> shape, std::vector<Scalar> values) {
        TensorT t;
        const std::size_t n = checked_size(shape);
        if (values.size() != n)
            throw std::invalid_argument("Tensor: data length does not match shape");
        t.shape_ = std::move(shape);
        t.data_ = std::move(values);
        return t;
    }

    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
    const std::vector<int>& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    Scalar* data() { return data_.data(); }
    const Scalar* data() const { return data_.data(); }
    std::vector<Scalar>& storage() { return data_; }
    const std::vector<Scalar>& storage() const { return data_; }

    Scalar& operator[](std::size_t i) { return data_[i]; }
    Scalar operator[](std::size_t i) const { return data_[i]; }

    Scalar& operator()(int n, int c, int h, int w) {
        return data_[offset4(n, c, h, w)];
    }
    Scalar operator()(int n, int c, int h, int w) const {
        return data_[offset4(n, c, h, w)];
    }
    Scalar& operator()(int n, int c) { return data_[static_cast<std::size_t>(n) * shape_[1] + c]; }
    Scalar operator()(int n, int c) const { return data_[static_cast<std::size_t>(n) * shape_[1] + c]; }

    Eigen::Map<VecX<Scalar>> vec() {
        return Eigen::Map<VecX<Scalar>>(data_.data(), static_cast<Eigen::Index>(data_.size()));
    }
    Eigen::Map<const VecX<Scalar>> vec() const {
        return Eigen::Map<const VecX<Scalar>>(data_.data(), static_cast<Eigen::Index>(data_.size()));
    }

    bool same_shape(const TensorT& other) const { return shape_ == other.shape_; }

    /// Elements per leading-dimension slice (product of extents 1..rank-1).
    std::size_t row_size() const {
        if (shape_.empty()) return 0;
        return data_.size() / static_cast<std::size_t>(shape_[0]);
    }

    Scalar* row_data(int n) { return data_.data() + static_cast<std::size_t>(n) * row_size(); }
    const Scalar* row_data(int n) const {
        return data_.data() + static_cast<std::size_t>(n) * row_size();
    }

    /// Rows [first, first+count) as a tensor sharing no storage (copy).
    TensorT rows(int first, int count) const {
        if (rank() < 1 || first < 0 || count < 1 || first + count > shape_[0])
            throw std::invalid_argument("Tensor::rows: range out of bounds");
        std::vector<int> s = shape_;
        s[0] = count;
        TensorT out(s);
        std::copy(row_data(first), row_data(first) + row_size() * static_cast<std::size_t>(count),
                  out.data());
        return out;
    }

private:
    std::size_t offset4(int n, int c, int h, int w) const {
        return ((static_cast<std::size_t>(n) * shape_[1] + c) * shape_[2] + h) * shape_[3] + w;
    }

    static std::size_t checked_size(const std::vector<int>& shape) {
        if (shape.empty() || shape.size() > 4)
            throw std::invalid_argument("Tensor: rank must be in 1..4");
        std::size_t n = 1;
        for (int e : shape) {
            if (e < 1) throw std::invalid_argument("Tensor: extents must be positive");
            n *= static_cast<std::size_t>(e);
        }
        return n;
    }

    std::vector<int> shape_;
    std::vector<Scalar> data_;
};

using Tensor = TensorT<float>;

/// Per-channel first and second moments (variance is the population second
/// moment about the mean).
template <class Scalar>
struct ChannelStatsT {
    VecX<Scalar> mean;
    VecX<Scalar> variance;

    int channels() const { return static_cast<int>(mean.size()); }

    void validate() const {
        if (mean.size() != variance.size())
            throw std::invalid_argument("ChannelStats: mean/variance length mismatch");
        for (Eigen::Index c = 0; c < variance.size(); ++c)
            if (!(variance[c] >= Scalar(0)))
                throw std::invalid_argument("ChannelStats: negative variance");
    }
};

using ChannelStats = ChannelStatsT<float>;

namespace detail {

template <class Scalar>
void require_rank4(const TensorT<Scalar>& t, const char* who) {
    if (t.rank() != 4) throw std::invalid_argument(std::string(who) + ": expected a rank-4 tensor");
}

// Unpacks one (C,H,W) image plane set into the im2col matrix: row
// (c*Kh+kh)*Kw+kw holds the input value feeding each output position for
// that kernel tap, with zeros where the tap falls into the padding.
template <class Scalar>
void im2col(const Scalar* img, int C, int H, int W, int Kh, int Kw, int stride, int pad,
            int Ho, int Wo, RowMat<Scalar>& col) {
    for (int c = 0; c < C; ++c) {
        for (int kh = 0; kh < Kh; ++kh) {
            for (int kw = 0; kw < Kw; ++kw) {
                const int r = (c * Kh + kh) * Kw + kw;
                Scalar* dst = col.data() + static_cast<std::size_t>(r) * Ho * Wo;
                for (int oh = 0; oh < Ho; ++oh) {
                    const int ih = oh * stride + kh - pad;
                    Scalar* drow = dst + static_cast<std::size_t>(oh) * Wo;
                    if (ih < 0 || ih >= H) {
                        std::fill(drow, drow + Wo, Scalar(0));
                        continue;
                    }
                    const Scalar* srow = img + (static_cast<std::size_t>(c) * H + ih) * W;
                    if (stride == 1) {
                        const int lo = std::max(0, pad - kw);
                        const int hi = std::min(Wo, W - kw + pad);
                        std::fill(drow, drow + std::max(lo, 0), Scalar(0));
                        if (hi > lo)
                            std::copy(srow + lo + kw - pad, srow + hi + kw - pad, drow + lo);
                        std::fill(drow + std::max(hi, lo), drow + Wo, Scalar(0));
                    } else {
                        for (int ow = 0; ow < Wo; ++ow) {
                            const int iw = ow * stride + kw - pad;
                            drow[ow] = (iw >= 0 && iw < W) ? srow[iw] : Scalar(0);
                        }
                    }
                }
            }
        }
    }
}

inline int conv_out_extent(int in, int kernel, int stride, int pad, const char* who) {
    const int num = in + 2 * pad - kernel;
    if (num < 0)
        throw std::invalid_argument(std::string(who) + ": non-positive output extent");
    return num / stride + 1;
}

} // namespace detail

/// Cross-correlation with zero padding over an NCHW batch.
template <class Scalar>
TensorT<Scalar> conv2d(const TensorT<Scalar>& input, const TensorT<Scalar>& weight,
                       const VecX<Scalar>& bias, int stride, int padding) {
    detail::require_rank4(input, "conv2d input");
    detail::require_rank4(weight, "conv2d weight");
    if (stride < 1) throw std::invalid_argument("conv2d: stride must be positive");
    if (padding < 0) throw std::invalid_argument("conv2d: padding must be non-negative");
    const int N = input.dim(0), Cin = input.dim(1), H = input.dim(2), W = input.dim(3);
    const int Cout = weight.dim(0), Kh = weight.dim(2), Kw = weight.dim(3);
    if (weight.dim(1) != Cin) throw std::invalid_argument("conv2d: channel mismatch");
    if (bias.size() != Cout) throw std::invalid_argument("conv2d: bias length mismatch");
    const int Ho = detail::conv_out_extent(H, Kh, stride, padding, "conv2d");
    const int Wo = detail::conv_out_extent(W, Kw, stride, padding, "conv2d");

    TensorT<Scalar> out({N, Cout, Ho, Wo});
    const int K = Cin * Kh * Kw;
    RowMat<Scalar> col(K, Ho * Wo);
    Eigen::Map<const RowMat<Scalar>> wmat(weight.data(), Cout, K);
    for (int n = 0; n < N; ++n) {
        detail::im2col(input.row_data(n), Cin, H, W, Kh, Kw, stride, padding, Ho, Wo, col);
        Eigen::Map<RowMat<Scalar>> omat(out.row_data(n), Cout, Ho * Wo);
        omat.noalias() = wmat * col;
        omat.colwise() += bias;
    }
    return out;
}

template <class Scalar>
TensorT<Scalar> relu(const TensorT<Scalar>& x) {
    TensorT<Scalar> out = x;
    out.vec() = out.vec().cwiseMax(Scalar(0));
    return out;
}

template <class Scalar>
TensorT<Scalar> avg_pool2d(const TensorT<Scalar>& x, int window, int stride) {
    detail::require_rank4(x, "avg_pool2d");
    const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (window < 1 || stride < 1)
        throw std::invalid_argument("avg_pool2d: window and stride must be positive");
    if (window > H || window > W)
        throw std::invalid_argument("avg_pool2d: window larger than input");
    const int Ho = (H - window) / stride + 1;
    const int Wo = (W - window) / stride + 1;
    TensorT<Scalar> out({N, C, Ho, Wo});
    const double inv = 1.0 / (static_cast<double>(window) * window);
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c)
            for (int oh = 0; oh < Ho; ++oh)
                for (int ow = 0; ow < Wo; ++ow) {
                    double acc = 0.0;
                    for (int kh = 0; kh < window; ++kh)
                        for (int kw = 0; kw < window; ++kw)
                            acc += x(n, c, oh * stride + kh, ow * stride + kw);
                    out(n, c, oh, ow) = static_cast<Scalar>(acc * inv);
                }
    return out;
}

template <class Scalar>
TensorT<Scalar> max_pool2d(const TensorT<Scalar>& x, int window, int stride) {
    detail::require_rank4(x, "max_pool2d");
    const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    if (window < 1 || stride < 1)
        throw std::invalid_argument("max_pool2d: window and stride must be positive");
    if (window > H || window > W)
        throw std::invalid_argument("max_pool2d: window larger than input");
    const int Ho = (H - window) / stride + 1;
    const int Wo = (W - window) / stride + 1;
    TensorT<Scalar> out({N, C, Ho, Wo});
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c)
            for (int oh = 0; oh < Ho; ++oh)
                for (int ow = 0; ow < Wo; ++ow) {
                    Scalar best = x(n, c, oh * stride, ow * stride);
                    for (int kh = 0; kh < window; ++kh)
                        for (int kw = 0; kw < window; ++kw)
                            best = std::max(best, x(n, c, oh * stride + kh, ow * stride + kw));
                    out(n, c, oh, ow) = best;
                }
    return out;
}

template <class Scalar>
TensorT<Scalar> global_avg_pool(const TensorT<Scalar>& x) {
    detail::require_rank4(x, "global_avg_pool");
    const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    TensorT<Scalar> out({N, C, 1, 1});
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    for (int n = 0; n < N; ++n)
        for (int c = 0; c < C; ++c) {
            const Scalar* p = x.data() + (static_cast<std::size_t>(n) * C + c) * plane;
            Eigen::Map<const VecX<Scalar>> v(p, static_cast<Eigen::Index>(plane));
            out(n, c, 0, 0) =
                static_cast<Scalar>(v.template cast<double>().sum() / static_cast<double>(plane));
        }
    return out;
}

/// x[N,D] * weight[K,D]^T + bias[K].
template <class Scalar>
TensorT<Scalar> linear(const TensorT<Scalar>& x, const TensorT<Scalar>& weight,
                       const VecX<Scalar>& bias) {
    if (x.rank() != 2 || weight.rank() != 2)
        throw std::invalid_argument("linear: expected rank-2 tensors");
    const int N = x.dim(0), D = x.dim(1);
    const int K = weight.dim(0);
    if (weight.dim(1) != D) throw std::invalid_argument("linear: inner dimension mismatch");
    if (bias.size() != K) throw std::invalid_argument("linear: bias length mismatch");
    TensorT<Scalar> out({N, K});
    Eigen::Map<const RowMat<Scalar>> xm(x.data(), N, D);
    Eigen::Map<const RowMat<Scalar>> wm(weight.data(), K, D);
    Eigen::Map<RowMat<Scalar>> om(out.data(), N, K);
    om.noalias() = xm * wm.transpose();
    om.rowwise() += bias.transpose();
    return out;
}

/// Max-subtracted softmax; sums accumulated in double.
template <class Scalar>
VecX<Scalar> softmax(const VecX<Scalar>& logits) {
    if (logits.size() < 1) throw std::invalid_argument("softmax: empty input");
    if (!logits.allFinite()) throw std::invalid_argument("softmax: non-finite input");
    const Scalar m = logits.maxCoeff();
    ArrX<Scalar> e = (logits.array() - m).exp();
    const double sum = e.template cast<double>().sum();
    return (e / static_cast<Scalar>(sum)).matrix();
}

/// Per-channel mean and population variance over the instance and spatial
/// axes; reductions accumulate in double (two-pass).
template <class Scalar>
ChannelStatsT<Scalar> channel_moments(const TensorT<Scalar>& x) {
    detail::require_rank4(x, "channel_moments");
    const int N = x.dim(0), C = x.dim(1), H = x.dim(2), W = x.dim(3);
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    const double count = static_cast<double>(N) * static_cast<double>(plane);
    ChannelStatsT<Scalar> stats;
    stats.mean.resize(C);
    stats.variance.resize(C);
    for (int c = 0; c < C; ++c) {
        double sum = 0.0;
        for (int n = 0; n < N; ++n) {
            const Scalar* p = x.data() + (static_cast<std::size_t>(n) * C + c) * plane;
            Eigen::Map<const VecX<Scalar>> v(p, static_cast<Eigen::Index>(plane));
            sum += v.template cast<double>().sum();
        }
        const double mean = sum / count;
        double ss = 0.0;
        for (int n = 0; n < N; ++n) {
            const Scalar* p = x.data() + (static_cast<std::size_t>(n) * C + c) * plane;
            Eigen::Map<const ArrX<Scalar>> v(p, static_cast<Eigen::Index>(plane));
            ss += (v.template cast<double>() - mean).square().sum();
        }
        stats.mean[c] = static_cast<Scalar>(mean);
        stats.variance[c] = static_cast<Scalar>(ss / count);
    }
    return stats;
}

} // namespace augbn
