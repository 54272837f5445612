#pragma once

#include "augbn/rng.hpp"
#include "augbn/tensor.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace augbn {

enum class AugmentKind {
    GaussianBlur,
    Rotate,
    ColorJitter,
    HorizontalFlip,
    VerticalFlip,
    MirrorReflect,
};

std::string to_string(AugmentKind kind);

/// One entry of the augmentation pool. Continuous parameters are ranges;
/// concrete values are drawn when a composition is sampled.
struct AugmentationOp {
    AugmentKind kind;
    float lo = 0.f;          // GaussianBlur: sigma range; Rotate: angle range (degrees)
    float hi = 0.f;
    float brightness = 0.f;  // ColorJitter factor half-ranges
    float contrast = 0.f;
    float saturation = 0.f;

    static AugmentationOp gaussian_blur(float sigma_lo, float sigma_hi);
    static AugmentationOp rotate(float angle_lo, float angle_hi);
    static AugmentationOp color_jitter(float brightness, float contrast, float saturation);
    static AugmentationOp horizontal_flip();
    static AugmentationOp vertical_flip();
    static AugmentationOp mirror_reflect();

    void validate() const;
};

/// A sampled op with concrete parameters (blur sigma, rotation angle, or
/// the three jitter factors).
struct SampledAugment {
    AugmentKind kind;
    float a = 0.f;
    float b = 0.f;
    float c = 0.f;
};

/// An ordered composition of sampled ops; pure function of the image.
struct ComposedAugment {
    std::vector<SampledAugment> steps;

    Tensor apply(const Tensor& img) const;
};

/// Pool plus sampling parameters for one prediction's augmented batch.
struct AugmentPlan {
    std::vector<AugmentationOp> pool;
    int compose_size = 1;
    int n_augments = 0;
    std::uint64_t seed = 0;

    int pool_size() const { return static_cast<int>(pool.size()); }
    void validate() const;

    /// rotation / mirror reflect / both flips / color jitter, all composed
    /// (k = m = 5), two augment images.
    static AugmentPlan classification_preset(std::uint64_t seed);

    /// blur + rotation, one augment image (k = m = 2).
    static AugmentPlan dense_preset(std::uint64_t seed);
};

/// Separable Gaussian blur, kernel radius ceil(3*sigma), kernel normalized
/// to sum 1, clamp-to-edge borders. sigma = 0 is the identity.
Tensor gaussian_blur(const Tensor& img, float sigma);

/// Rotation about the image center, bilinear resampling, zeros outside the
/// frame. Multiples of 90 degrees use exact cos/sin so index permutations
/// are reproduced exactly.
Tensor rotate(const Tensor& img, float angle_degrees);

Tensor horizontal_flip(const Tensor& img);
Tensor vertical_flip(const Tensor& img);

/// Transpose about the main diagonal; requires H == W.
Tensor mirror_reflect(const Tensor& img);

/// Brightness/contrast/saturation jitter with factors drawn from
/// [1-x, 1+x]; output clamped to [0,1].
Tensor color_jitter(const Tensor& img, float brightness, float contrast, float saturation,
                    Rng& rng);

/// Uniformly chooses k_compose distinct ops from the pool in uniformly
/// random order and samples their continuous parameters.
ComposedAugment rand_choose_k(const std::vector<AugmentationOp>& pool, int k_compose, Rng& rng);

/// Row 0 is the unmodified image; rows 1..n are independent compositions.
/// Deterministic in (img, plan): augment i draws from substream i of the
/// plan seed.
Tensor generate_augmented_batch(const Tensor& img, const AugmentPlan& plan);

namespace detail {

/// Jitter with fixed factors (the sampled form of color_jitter).
Tensor apply_jitter(const Tensor& img, float brightness_factor, float contrast_factor,
                    float saturation_factor);

} // namespace detail

} // namespace augbn
