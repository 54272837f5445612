#include "augbn/normalization.hpp"

#include "oracle.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>

using namespace augbn;

namespace {

BnParams identity_params(int c, float eps = 1e-12f) {
    BnParams p;
    p.gamma = VecXf::Ones(c);
    p.beta = VecXf::Zero(c);
    p.epsilon = eps;
    return p;
}

ChannelStats make_stats(std::vector<float> mean, std::vector<float> var) {
    ChannelStats s;
    s.mean = Eigen::Map<VecXf>(mean.data(), static_cast<Eigen::Index>(mean.size()));
    s.variance = Eigen::Map<VecXf>(var.data(), static_cast<Eigen::Index>(var.size()));
    return s;
}

} // namespace

TEST_SUITE("normalization") {

TEST_CASE("aug weights: balanced construction and invariants") {
    AugWeights w0 = AugWeights::balanced(0);
    CHECK(w0.count() == 1);
    CHECK(w0.w[0] == 1.0);

    AugWeights w3 = AugWeights::balanced(3);
    CHECK(w3.count() == 4);
    CHECK(w3.w[0] == 0.5);
    for (int i = 1; i <= 3; ++i) CHECK(w3.w[i] == doctest::Approx(1.0 / 6.0).epsilon(1e-12));
    CHECK(std::abs(w3.w.sum() - 1.0) <= 1e-9);

    VecXd bad(2);
    bad << 0.7, 0.4;
    CHECK_THROWS_AS(AugWeights::from_vector(bad), std::invalid_argument);
    VecXd neg(2);
    neg << 1.5, -0.5;
    CHECK_THROWS_AS(AugWeights::from_vector(neg), std::invalid_argument);
}

TEST_CASE("bn_forward identity stats reproduce the input") {
    Rng rng(21);
    Tensor x = oracle::random_tensor({2, 3, 4, 4}, rng);
    ChannelStats s = make_stats({0, 0, 0}, {1, 1, 1});
    Tensor y = bn_forward(x, s, identity_params(3));
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(std::abs(y[i] - x[i]) <= 1e-6f);
}

TEST_CASE("bn_forward hand case") {
    Tensor x = Tensor::from_data({1, 1, 2, 2}, {1.f, 3.f, 5.f, 7.f});
    ChannelStats s = make_stats({4.f}, {5.f});
    Tensor y = bn_forward(x, s, identity_params(1));
    const float inv = 1.f / std::sqrt(5.f);
    CHECK(y[0] == doctest::Approx(-3.f * inv).epsilon(1e-6));
    CHECK(y[1] == doctest::Approx(-1.f * inv).epsilon(1e-6));
    CHECK(y[2] == doctest::Approx(1.f * inv).epsilon(1e-6));
    CHECK(y[3] == doctest::Approx(3.f * inv).epsilon(1e-6));
}

TEST_CASE("bn_forward gamma=0 yields beta everywhere") {
    Rng rng(22);
    Tensor x = oracle::random_tensor({1, 2, 3, 3}, rng);
    BnParams p;
    p.gamma = VecXf::Zero(2);
    p.beta = VecXf(2);
    p.beta << 0.25f, -1.f;
    ChannelStats s = make_stats({0.3f, -0.4f}, {2.f, 0.5f});
    Tensor y = bn_forward(x, s, p);
    for (int c = 0; c < 2; ++c)
        for (int h = 0; h < 3; ++h)
            for (int w = 0; w < 3; ++w) CHECK(y(0, c, h, w) == p.beta[c]);
}

TEST_CASE("bn_forward channel mismatch") {
    Tensor x({1, 3, 2, 2});
    ChannelStats s = make_stats({0, 0}, {1, 1});
    CHECK_THROWS_AS(bn_forward(x, s, identity_params(3)), std::invalid_argument);
}

TEST_CASE("weighted_target_stats degenerate and duplicate cases") {
    Rng rng(23);
    Tensor f = oracle::random_tensor({1, 2, 3, 3}, rng);
    ChannelStats single = weighted_target_stats<float>({f}, AugWeights::balanced(0));
    ChannelStats direct = channel_moments(f);
    for (int c = 0; c < 2; ++c) {
        CHECK(single.mean[c] == doctest::Approx(direct.mean[c]).epsilon(1e-6));
        CHECK(single.variance[c] == doctest::Approx(direct.variance[c]).epsilon(1e-6));
    }

    ChannelStats dup = weighted_target_stats<float>({f, f}, AugWeights::balanced(1));
    for (int c = 0; c < 2; ++c) {
        CHECK(dup.mean[c] == doctest::Approx(direct.mean[c]).epsilon(1e-6));
        CHECK(dup.variance[c] == doctest::Approx(direct.variance[c]).epsilon(1e-6));
    }
}

TEST_CASE("weighted_target_stats hand case") {
    Tensor f = Tensor::from_data({1, 1, 2, 2}, {1.f, 3.f, 5.f, 7.f});
    Tensor fhat = Tensor::from_data({1, 1, 2, 2}, {3.f, 3.f, 3.f, 3.f});
    ChannelStats s = weighted_target_stats<float>({f, fhat}, AugWeights::balanced(1));
    CHECK(s.mean[0] == doctest::Approx(3.5f).epsilon(1e-6));
    CHECK(s.variance[0] == doctest::Approx(2.75f).epsilon(1e-6));
}

TEST_CASE("weighted_target_stats shape and weight errors") {
    Tensor a({1, 2, 2, 2});
    Tensor b({1, 2, 3, 3});
    CHECK_THROWS_AS(weighted_target_stats<float>({a, b}, AugWeights::balanced(1)),
                    std::invalid_argument);
    CHECK_THROWS_AS(weighted_target_stats<float>({a}, AugWeights::balanced(1)),
                    std::invalid_argument);
}

TEST_CASE("weighted stats match the brute-force reference on random shapes") {
    Rng rng(201);
    for (int trial = 0; trial < 100; ++trial) {
        const int m = 1 + static_cast<int>(rng.uniform_int(4));
        const int c = 1 + static_cast<int>(rng.uniform_int(8));
        const int h = 1 + static_cast<int>(rng.uniform_int(6));
        const int w = 1 + static_cast<int>(rng.uniform_int(6));
        Tensor batch = oracle::random_tensor({m, c, h, w}, rng);
        AugWeights wt = AugWeights::balanced(m - 1);
        ChannelStats got = weighted_row_stats(batch, wt);
        ChannelStats ref = oracle::weighted_row_stats_ref(batch, wt);
        for (int ch = 0; ch < c; ++ch) {
            CHECK(std::abs(got.mean[ch] - ref.mean[ch]) <= 1e-6);
            CHECK(std::abs(got.variance[ch] - ref.variance[ch]) <= 1e-6);
            CHECK(got.variance[ch] >= 0.f);
        }
    }
}

TEST_CASE("target mean is a convex combination of per-feature spatial means") {
    Rng rng(202);
    for (int trial = 0; trial < 20; ++trial) {
        const int m = 2 + static_cast<int>(rng.uniform_int(4));
        Tensor batch = oracle::random_tensor({m, 3, 4, 4}, rng);
        AugWeights wt = AugWeights::balanced(m - 1);
        ChannelStats s = weighted_row_stats(batch, wt);
        for (int c = 0; c < 3; ++c) {
            float lo = std::numeric_limits<float>::max();
            float hi = std::numeric_limits<float>::lowest();
            for (int i = 0; i < m; ++i) {
                ChannelStats one = channel_moments(batch.rows(i, 1));
                lo = std::min(lo, one.mean[c]);
                hi = std::max(hi, one.mean[c]);
            }
            CHECK(s.mean[c] >= lo - 1e-6f);
            CHECK(s.mean[c] <= hi + 1e-6f);
        }
    }
}

TEST_CASE("combine_stats endpoints and arithmetic") {
    ChannelStats src = make_stats({0.f}, {1.f});
    ChannelStats tgt = make_stats({3.5f}, {2.75f});

    ChannelStats at1 = combine_stats(src, tgt, 1.f);
    CHECK(at1.mean[0] == src.mean[0]);
    CHECK(at1.variance[0] == src.variance[0]);

    ChannelStats at0 = combine_stats(src, tgt, 0.f);
    CHECK(at0.mean[0] == tgt.mean[0]);
    CHECK(at0.variance[0] == tgt.variance[0]);

    ChannelStats mid = combine_stats(src, tgt, 0.5f);
    CHECK(mid.mean[0] == doctest::Approx(1.75f));
    CHECK(mid.variance[0] == doctest::Approx(1.875f));

    CHECK_THROWS_AS(combine_stats(src, tgt, 1.5f), std::invalid_argument);
    CHECK_THROWS_AS(combine_stats(src, tgt, -0.1f), std::invalid_argument);
    ChannelStats wide = make_stats({0.f, 1.f}, {1.f, 1.f});
    CHECK_THROWS_AS(combine_stats(src, wide, 0.5f), std::invalid_argument);
}

TEST_CASE("combine_stats mean is monotone in lambda") {
    ChannelStats src = make_stats({2.f, -1.f}, {1.f, 4.f});
    ChannelStats tgt = make_stats({-3.f, 5.f}, {2.f, 0.5f});
    float prev0 = combine_stats(src, tgt, 0.f).mean[0];
    float prev1 = combine_stats(src, tgt, 0.f).mean[1];
    for (int i = 1; i <= 10; ++i) {
        const float lam = static_cast<float>(i) / 10.f;
        ChannelStats s = combine_stats(src, tgt, lam);
        CHECK(s.mean[0] >= prev0 - 1e-7f); // target 0 < source 0: increasing
        CHECK(s.mean[1] <= prev1 + 1e-7f);
        prev0 = s.mean[0];
        prev1 = s.mean[1];
    }
}

TEST_CASE("combine_stats std_blend variant squares the blended deviations") {
    ChannelStats src = make_stats({0.f}, {4.f});
    ChannelStats tgt = make_stats({1.f}, {1.f});
    ChannelStats s = combine_stats(src, tgt, 0.5f, true);
    // (0.5*2 + 0.5*1)^2 = 2.25 vs variance blend 2.5
    CHECK(s.variance[0] == doctest::Approx(2.25f));
    ChannelStats v = combine_stats(src, tgt, 0.5f, false);
    CHECK(v.variance[0] == doctest::Approx(2.5f));
}

TEST_CASE("blended-mean estimator variance scales by (1-lambda)^2") {
    // Monte Carlo across 10,000 draws of the target mean estimate.
    for (const float lam : {0.3f, 0.7f}) {
        Rng rng(7777);
        const int trials = 10000;
        ChannelStats src = make_stats({1.25f}, {2.f});
        std::vector<double> target(trials), blended(trials);
        for (int t = 0; t < trials; ++t) {
            const float draw = static_cast<float>(rng.normal(3.0, 1.5));
            ChannelStats tgt = make_stats({draw}, {1.f});
            ChannelStats mix = combine_stats(src, tgt, lam);
            target[t] = draw;
            blended[t] = mix.mean[0];
        }
        auto sample_var = [](const std::vector<double>& v) {
            double mean = 0.0;
            for (double x : v) mean += x;
            mean /= static_cast<double>(v.size());
            double ss = 0.0;
            for (double x : v) ss += (x - mean) * (x - mean);
            return ss / static_cast<double>(v.size() - 1);
        };
        const double ratio = sample_var(blended) / sample_var(target);
        const double expected = (1.0 - lam) * (1.0 - lam);
        CHECK(std::abs(ratio - expected) <= 0.10 * expected);
    }
}

TEST_CASE("augbn_forward at lambda=1 equals bn_forward with source stats") {
    Rng rng(203);
    Tensor batch = oracle::random_tensor({3, 4, 5, 5}, rng);
    ChannelStats src;
    src.mean = VecXf::Random(4);
    src.variance = (VecXf::Random(4).array().abs() + 0.1f).matrix();
    BnParams p;
    p.gamma = VecXf::Random(4);
    p.beta = VecXf::Random(4);
    p.epsilon = 1e-5f;
    Tensor a = augbn_forward(batch, src, p, 1.f, AugWeights::balanced(2));
    Tensor b = bn_forward(batch, src, p);
    CHECK(std::memcmp(a.data(), b.data(), a.size() * sizeof(float)) == 0);
}

TEST_CASE("augbn_forward at lambda=0, n=0 is instance normalization") {
    Rng rng(204);
    Tensor batch = oracle::random_tensor({1, 3, 8, 8}, rng, -2.0, 5.0);
    ChannelStats src = make_stats({100.f, -50.f, 0.f}, {1e4f, 1e2f, 1.f});
    BnParams p = identity_params(3, 1e-7f);
    Tensor out = augbn_forward(batch, src, p, 0.f, AugWeights::balanced(0));
    ChannelStats s = channel_moments(out);
    for (int c = 0; c < 3; ++c) {
        CHECK(std::abs(s.mean[c]) <= 1e-4f);
        CHECK(std::abs(s.variance[c] - 1.f) <= 1e-4f);
    }
}

TEST_CASE("augbn_forward hand value from the weighted-stats example") {
    Tensor batch({2, 1, 2, 2});
    const float forig[4] = {1.f, 3.f, 5.f, 7.f};
    const float faug[4] = {3.f, 3.f, 3.f, 3.f};
    for (int i = 0; i < 4; ++i) {
        batch.row_data(0)[i] = forig[i];
        batch.row_data(1)[i] = faug[i];
    }
    ChannelStats src = make_stats({0.f}, {1.f});
    Tensor out = augbn_forward(batch, src, identity_params(1), 0.5f, AugWeights::balanced(1));
    // blended mean 1.75, variance 1.875; the F=1 element maps to -0.5477
    CHECK(out(0, 0, 0, 0) == doctest::Approx(-0.5477f).epsilon(1e-3));
    CHECK(out(0, 0, 0, 0) ==
          doctest::Approx((1.f - 1.75f) / std::sqrt(1.875f)).epsilon(1e-5));
}

TEST_CASE("multi-prior forward equals per-prior calls") {
    Rng rng(205);
    const int group = 3;
    Tensor base = oracle::random_tensor({group, 2, 4, 4}, rng);
    const std::vector<float> priors = {0.f, 0.4f, 0.75f, 1.f};
    Tensor big({group * static_cast<int>(priors.size()), 2, 4, 4});
    for (std::size_t p = 0; p < priors.size(); ++p)
        std::copy(base.data(), base.data() + base.size(),
                  big.row_data(static_cast<int>(p) * group));

    ChannelStats src;
    src.mean = VecXf::Random(2);
    src.variance = (VecXf::Random(2).array().abs() + 0.2f).matrix();
    BnParams p;
    p.gamma = VecXf::Random(2);
    p.beta = VecXf::Random(2);

    AugWeights wt = AugWeights::balanced(group - 1);
    Tensor multi = augbn_multiprior_forward(big, src, p, priors, wt);
    for (std::size_t pi = 0; pi < priors.size(); ++pi) {
        Tensor single = augbn_forward(base, src, p, priors[pi], wt);
        const float* got = multi.row_data(static_cast<int>(pi) * group);
        for (std::size_t i = 0; i < single.size(); ++i)
            CHECK(std::abs(got[i] - single[i]) <= 1e-6f);
    }
}

TEST_CASE("multi-prior degenerate and duplicate priors") {
    Rng rng(206);
    Tensor base = oracle::random_tensor({2, 3, 3, 3}, rng);
    ChannelStats src;
    src.mean = VecXf::Zero(3);
    src.variance = VecXf::Ones(3);
    BnParams p = identity_params(3);
    AugWeights wt = AugWeights::balanced(1);

    Tensor one = augbn_multiprior_forward(base, src, p, std::vector<float>{0.6f}, wt);
    Tensor direct = augbn_forward(base, src, p, 0.6f, wt);
    CHECK(std::memcmp(one.data(), direct.data(), one.size() * sizeof(float)) == 0);

    Tensor dup({4, 3, 3, 3});
    std::copy(base.data(), base.data() + base.size(), dup.row_data(0));
    std::copy(base.data(), base.data() + base.size(), dup.row_data(2));
    Tensor both = augbn_multiprior_forward(dup, src, p, std::vector<float>{1.f, 1.f}, wt);
    CHECK(std::memcmp(both.row_data(0), both.row_data(2), 2 * both.row_size() * sizeof(float)) ==
          0);

    CHECK_THROWS_AS(
        augbn_multiprior_forward(base, src, p, std::vector<float>{0.1f, 0.2f, 0.3f}, wt),
        std::invalid_argument);
}

} // TEST_SUITE
