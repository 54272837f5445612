#include "augbn/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <stdexcept>

namespace augbn {

namespace {

void require_image(const Tensor& img, const char* who) {
    if (img.rank() != 4 || img.dim(0) != 1)
        throw std::invalid_argument(std::string(who) + ": expected a [1,C,H,W] image tensor");
}

} // namespace

std::string to_string(AugmentKind kind) {
    switch (kind) {
    case AugmentKind::GaussianBlur: return "gaussian_blur";
    case AugmentKind::Rotate: return "rotate";
    case AugmentKind::ColorJitter: return "color_jitter";
    case AugmentKind::HorizontalFlip: return "horizontal_flip";
    case AugmentKind::VerticalFlip: return "vertical_flip";
    case AugmentKind::MirrorReflect: return "mirror_reflect";
    }
    return "unknown";
}

AugmentationOp AugmentationOp::gaussian_blur(float sigma_lo, float sigma_hi) {
    AugmentationOp op{AugmentKind::GaussianBlur};
    op.lo = sigma_lo;
    op.hi = sigma_hi;
    op.validate();
    return op;
}

AugmentationOp AugmentationOp::rotate(float angle_lo, float angle_hi) {
    AugmentationOp op{AugmentKind::Rotate};
    op.lo = angle_lo;
    op.hi = angle_hi;
    op.validate();
    return op;
}

AugmentationOp AugmentationOp::color_jitter(float brightness, float contrast, float saturation) {
    AugmentationOp op{AugmentKind::ColorJitter};
    op.brightness = brightness;
    op.contrast = contrast;
    op.saturation = saturation;
    op.validate();
    return op;
}

AugmentationOp AugmentationOp::horizontal_flip() { return {AugmentKind::HorizontalFlip}; }
AugmentationOp AugmentationOp::vertical_flip() { return {AugmentKind::VerticalFlip}; }
AugmentationOp AugmentationOp::mirror_reflect() { return {AugmentKind::MirrorReflect}; }

void AugmentationOp::validate() const {
    switch (kind) {
    case AugmentKind::GaussianBlur:
        if (lo < 0.f || hi < lo || !std::isfinite(hi))
            throw std::invalid_argument("AugmentationOp: invalid blur sigma range");
        break;
    case AugmentKind::Rotate:
        if (!std::isfinite(lo) || !std::isfinite(hi) || hi < lo)
            throw std::invalid_argument("AugmentationOp: invalid rotation range");
        break;
    case AugmentKind::ColorJitter:
        if (!(brightness > 0.f) || !(contrast > 0.f) || !(saturation > 0.f))
            throw std::invalid_argument("AugmentationOp: jitter factors must be positive");
        break;
    default:
        break;
    }
}

void AugmentPlan::validate() const {
    if (pool.empty()) throw std::invalid_argument("AugmentPlan: empty pool");
    if (compose_size < 1 || compose_size > pool_size())
        throw std::invalid_argument("AugmentPlan: compose_size must lie in [1, pool size]");
    if (n_augments < 0) throw std::invalid_argument("AugmentPlan: n_augments must be non-negative");
    for (const auto& op : pool) op.validate();
}

AugmentPlan AugmentPlan::classification_preset(std::uint64_t seed) {
    AugmentPlan plan;
    plan.pool = {
        AugmentationOp::color_jitter(0.4f, 0.4f, 0.4f),
        AugmentationOp::rotate(-30.f, 30.f),
        AugmentationOp::mirror_reflect(),
        AugmentationOp::horizontal_flip(),
        AugmentationOp::vertical_flip(),
    };
    plan.compose_size = 5;
    plan.n_augments = 2;
    plan.seed = seed;
    return plan;
}

AugmentPlan AugmentPlan::dense_preset(std::uint64_t seed) {
    AugmentPlan plan;
    plan.pool = {
        AugmentationOp::gaussian_blur(0.5f, 2.0f),
        AugmentationOp::rotate(-30.f, 30.f),
    };
    plan.compose_size = 2;
    plan.n_augments = 1;
    plan.seed = seed;
    return plan;
}

Tensor gaussian_blur(const Tensor& img, float sigma) {
    require_image(img, "gaussian_blur");
    if (sigma < 0.f || !std::isfinite(sigma))
        throw std::invalid_argument("gaussian_blur: sigma must be finite and non-negative");
    if (sigma == 0.f) return img;

    const int radius = static_cast<int>(std::ceil(3.0 * sigma));
    std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
    double sum = 0.0;
    for (int i = -radius; i <= radius; ++i) {
        const double v = std::exp(-0.5 * (static_cast<double>(i) * i) / (sigma * sigma));
        kernel[static_cast<std::size_t>(i + radius)] = v;
        sum += v;
    }
    for (auto& k : kernel) k /= sum;

    const int C = img.dim(1), H = img.dim(2), W = img.dim(3);
    Tensor horiz({1, C, H, W});
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i) {
                    const int sx = std::clamp(x + i, 0, W - 1);
                    acc += kernel[static_cast<std::size_t>(i + radius)] * img(0, c, y, sx);
                }
                horiz(0, c, y, x) = static_cast<float>(acc);
            }
    Tensor out({1, C, H, W});
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) {
                double acc = 0.0;
                for (int i = -radius; i <= radius; ++i) {
                    const int sy = std::clamp(y + i, 0, H - 1);
                    acc += kernel[static_cast<std::size_t>(i + radius)] * horiz(0, c, sy, x);
                }
                out(0, c, y, x) = static_cast<float>(acc);
            }
    return out;
}

Tensor rotate(const Tensor& img, float angle_degrees) {
    require_image(img, "rotate");
    if (!std::isfinite(angle_degrees)) throw std::invalid_argument("rotate: non-finite angle");

    double cs, sn;
    const double quad = std::fmod(static_cast<double>(angle_degrees), 360.0);
    if (std::fmod(quad, 90.0) == 0.0) {
        // exact path for right-angle rotations
        int q = static_cast<int>(quad / 90.0) % 4;
        if (q < 0) q += 4;
        static constexpr int exact_cos[4] = {1, 0, -1, 0};
        static constexpr int exact_sin[4] = {0, 1, 0, -1};
        cs = exact_cos[q];
        sn = exact_sin[q];
    } else {
        const double rad = static_cast<double>(angle_degrees) * std::numbers::pi / 180.0;
        cs = std::cos(rad);
        sn = std::sin(rad);
    }

    const int C = img.dim(1), H = img.dim(2), W = img.dim(3);
    const double cy = (H - 1) / 2.0, cx = (W - 1) / 2.0;
    Tensor out({1, C, H, W});
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            // inverse mapping: positive angles rotate the image counterclockwise
            const double dx = x - cx, dy = y - cy;
            const double sx = cs * dx + sn * dy + cx;
            const double sy = -sn * dx + cs * dy + cy;
            const int x0 = static_cast<int>(std::floor(sx));
            const int y0 = static_cast<int>(std::floor(sy));
            const double fx = sx - x0, fy = sy - y0;
            for (int c = 0; c < C; ++c) {
                auto sample = [&](int yy, int xx) -> double {
                    if (yy < 0 || yy >= H || xx < 0 || xx >= W) return 0.0;
                    return img(0, c, yy, xx);
                };
                const double v = (1 - fy) * ((1 - fx) * sample(y0, x0) + fx * sample(y0, x0 + 1)) +
                                 fy * ((1 - fx) * sample(y0 + 1, x0) + fx * sample(y0 + 1, x0 + 1));
                out(0, c, y, x) = static_cast<float>(v);
            }
        }
    return out;
}

Tensor horizontal_flip(const Tensor& img) {
    require_image(img, "horizontal_flip");
    const int C = img.dim(1), H = img.dim(2), W = img.dim(3);
    Tensor out({1, C, H, W});
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) out(0, c, y, x) = img(0, c, y, W - 1 - x);
    return out;
}

Tensor vertical_flip(const Tensor& img) {
    require_image(img, "vertical_flip");
    const int C = img.dim(1), H = img.dim(2), W = img.dim(3);
    Tensor out({1, C, H, W});
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) out(0, c, y, x) = img(0, c, H - 1 - y, x);
    return out;
}

Tensor mirror_reflect(const Tensor& img) {
    require_image(img, "mirror_reflect");
    const int C = img.dim(1), H = img.dim(2), W = img.dim(3);
    if (H != W) throw std::invalid_argument("mirror_reflect: image must be square");
    Tensor out({1, C, H, W});
    for (int c = 0; c < C; ++c)
        for (int y = 0; y < H; ++y)
            for (int x = 0; x < W; ++x) out(0, c, y, x) = img(0, c, x, y);
    return out;
}

namespace detail {

Tensor apply_jitter(const Tensor& img, float brightness_factor, float contrast_factor,
                    float saturation_factor) {
    require_image(img, "color_jitter");
    const int C = img.dim(1), H = img.dim(2), W = img.dim(3);
    Tensor out = img;

    out.vec() = out.vec() * brightness_factor;

    const double mean = out.vec().cast<double>().sum() / static_cast<double>(out.size());
    out.vec() = (out.vec().array() * contrast_factor +
                 static_cast<float>(mean) * (1.f - contrast_factor))
                    .matrix();

    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double gray = 0.0;
            for (int c = 0; c < C; ++c) gray += out(0, c, y, x);
            gray /= C;
            for (int c = 0; c < C; ++c)
                out(0, c, y, x) = static_cast<float>(gray + saturation_factor *
                                                                (out(0, c, y, x) - gray));
        }

    out.vec() = out.vec().cwiseMax(0.f).cwiseMin(1.f);
    return out;
}

} // namespace detail

Tensor color_jitter(const Tensor& img, float brightness, float contrast, float saturation,
                    Rng& rng) {
    if (!(brightness > 0.f) || !(contrast > 0.f) || !(saturation > 0.f))
        throw std::invalid_argument("color_jitter: factors must be positive");
    const float fb = static_cast<float>(rng.uniform(1.0 - brightness, 1.0 + brightness));
    const float fc = static_cast<float>(rng.uniform(1.0 - contrast, 1.0 + contrast));
    const float fs = static_cast<float>(rng.uniform(1.0 - saturation, 1.0 + saturation));
    return detail::apply_jitter(img, fb, fc, fs);
}

ComposedAugment rand_choose_k(const std::vector<AugmentationOp>& pool, int k_compose, Rng& rng) {
    const int m = static_cast<int>(pool.size());
    if (k_compose < 1 || k_compose > m)
        throw std::invalid_argument("rand_choose_k: k_compose out of range");

    // Partial Fisher-Yates: a uniformly random ordered k-subset, which is
    // both the uniform choice without replacement and the uniform shuffle.
    std::vector<int> idx(static_cast<std::size_t>(m));
    std::iota(idx.begin(), idx.end(), 0);
    for (int i = 0; i < k_compose; ++i) {
        const int j = i + static_cast<int>(rng.uniform_int(static_cast<std::uint64_t>(m - i)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }

    ComposedAugment comp;
    comp.steps.reserve(static_cast<std::size_t>(k_compose));
    for (int i = 0; i < k_compose; ++i) {
        const AugmentationOp& op = pool[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
        SampledAugment s{op.kind};
        switch (op.kind) {
        case AugmentKind::GaussianBlur:
        case AugmentKind::Rotate:
            s.a = static_cast<float>(rng.uniform(op.lo, op.hi));
            break;
        case AugmentKind::ColorJitter:
            s.a = static_cast<float>(rng.uniform(1.0 - op.brightness, 1.0 + op.brightness));
            s.b = static_cast<float>(rng.uniform(1.0 - op.contrast, 1.0 + op.contrast));
            s.c = static_cast<float>(rng.uniform(1.0 - op.saturation, 1.0 + op.saturation));
            break;
        default:
            break;
        }
        comp.steps.push_back(s);
    }
    return comp;
}

Tensor ComposedAugment::apply(const Tensor& img) const {
    Tensor cur = img;
    for (const auto& s : steps) {
        switch (s.kind) {
        case AugmentKind::GaussianBlur: cur = gaussian_blur(cur, s.a); break;
        case AugmentKind::Rotate: cur = rotate(cur, s.a); break;
        case AugmentKind::ColorJitter: cur = detail::apply_jitter(cur, s.a, s.b, s.c); break;
        case AugmentKind::HorizontalFlip: cur = horizontal_flip(cur); break;
        case AugmentKind::VerticalFlip: cur = vertical_flip(cur); break;
        case AugmentKind::MirrorReflect: cur = mirror_reflect(cur); break;
        }
    }
    return cur;
}

Tensor generate_augmented_batch(const Tensor& img, const AugmentPlan& plan) {
    require_image(img, "generate_augmented_batch");
    plan.validate();
    const int C = img.dim(1), H = img.dim(2), W = img.dim(3);
    Tensor batch({plan.n_augments + 1, C, H, W});
    std::copy(img.data(), img.data() + img.size(), batch.row_data(0));
    for (int i = 1; i <= plan.n_augments; ++i) {
        Rng rng(plan.seed, static_cast<std::uint64_t>(i));
        const ComposedAugment comp = rand_choose_k(plan.pool, plan.compose_size, rng);
        const Tensor aug = comp.apply(img);
        std::copy(aug.data(), aug.data() + aug.size(), batch.row_data(i));
    }
    return batch;
}

} // namespace augbn
