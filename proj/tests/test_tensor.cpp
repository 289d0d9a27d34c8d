#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fusedet/grad_check.hpp"
#include "fusedet/tensor.hpp"
#include "test_util.hpp"

using namespace fusedet;

TEST_CASE("gap: constant and one-hot maps") {
    FeatureMap f(2, 4, 4);
    for (auto& v : f.data) v = 3.0;
    const auto out = gap(f);
    CHECK(out.size() == 2);
    CHECK(out[0] == doctest::Approx(3.0).epsilon(1e-15));
    CHECK(out[1] == doctest::Approx(3.0).epsilon(1e-15));

    FeatureMap g(1, 2, 2);
    g.at(0, 0, 0) = 1.0;
    CHECK(gap(g)[0] == doctest::Approx(0.25).epsilon(1e-15));
}

TEST_CASE("gap: seeded random map matches scalar-loop oracle") {
    Rng rng(42);
    const FeatureMap f = testutil::random_map(2, 2, 2, rng);
    const auto out = gap(f);
    for (int c = 0; c < 2; ++c) {
        double s = 0.0;
        for (int h = 0; h < 2; ++h)
            for (int w = 0; w < 2; ++w) s += f.at(c, h, w);
        CHECK(out[c] == doctest::Approx(s / 4.0).epsilon(1e-14));
    }
}

TEST_CASE("gmp: constant, by-inspection, and oracle") {
    FeatureMap f(2, 3, 3);
    for (auto& v : f.data) v = 3.0;
    auto out = gmp(f);
    CHECK(out[0] == 3.0);
    CHECK(out[1] == 3.0);

    FeatureMap g(1, 2, 2);
    g.at(0, 0, 0) = -1.0;
    g.at(0, 0, 1) = 5.0;
    g.at(0, 1, 0) = 2.0;
    g.at(0, 1, 1) = 0.0;
    CHECK(gmp(g)[0] == 5.0);

    Rng rng(7);
    const FeatureMap h = testutil::random_map(3, 4, 4, rng);
    const auto mx = gmp(h);
    for (int c = 0; c < 3; ++c) {
        double m = -1e300;
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) m = std::max(m, h.at(c, y, x));
        CHECK(mx[c] == m);
    }
}

TEST_CASE("sigmoid: symmetry point, saturation, reference value") {
    CHECK(sigmoid(0.0) == 0.5);
    const double hi = sigmoid(50.0);
    CHECK(hi < 1.0);
    CHECK(1.0 - hi <= 1e-15);  // saturated to the largest double below 1
    const double lo = sigmoid(-50.0);
    CHECK(lo > 0.0);
    CHECK(lo <= 2e-22);
    // 1/(1+e^-1) to 17 digits
    CHECK(sigmoid(1.0) == doctest::Approx(0.73105857863000488).epsilon(1e-15));
}

TEST_CASE("sigmoid: strictly inside (0,1) for extreme finite inputs") {
    Rng rng(11);
    for (int i = 0; i < 2000; ++i) {
        const double x = rng.uniform(-400.0, 400.0) * std::pow(10.0, rng.uniform_int(4));
        const double s = sigmoid(x);
        CHECK(s > 0.0);
        CHECK(s < 1.0);
    }
    CHECK(sigmoid(1e308) < 1.0);
    CHECK(sigmoid(-1e308) > 0.0);
}

TEST_CASE("mlp_forward: zero params, relu gating, oracle") {
    auto p = MlpParams::zeros(2, 1);
    const ChannelVector v{1.5, -2.5};
    auto out = mlp_forward(v, p);
    CHECK(out[0] == 0.0);
    CHECK(out[1] == 0.0);

    // identity weights, r = 1: relu passes positives only
    p.w1[0] = 1.0;  // w1 = I (2x2)
    p.w1[3] = 1.0;
    p.w2[0] = 1.0;  // w2 = I
    p.w2[3] = 1.0;
    out = mlp_forward({2.0, -3.0}, p);
    CHECK(out[0] == 2.0);
    CHECK(out[1] == 0.0);

    Rng rng(5);
    const auto params = testutil::random_mlp(4, 2, rng);
    ChannelVector in(4);
    for (auto& e : in) e = rng.uniform(-1.0, 1.0);
    const auto got = mlp_forward(in, params);
    // two-loop matrix-vector oracle
    std::vector<double> hidden(2);
    for (int i = 0; i < 2; ++i) {
        double s = params.b1[i];
        for (int j = 0; j < 4; ++j) s += params.w1[i * 4 + j] * in[j];
        hidden[i] = std::max(0.0, s);
    }
    for (int i = 0; i < 4; ++i) {
        double s = params.b2[i];
        for (int j = 0; j < 2; ++j) s += params.w2[i * 2 + j] * hidden[j];
        CHECK(got[i] == doctest::Approx(s).epsilon(1e-14));
    }
}

TEST_CASE("mlp: shape mismatch raises") {
    const auto p = MlpParams::zeros(4, 2);
    CHECK_THROWS_AS(mlp_forward(ChannelVector{1.0, 2.0}, p), DimensionError);
}

TEST_CASE("conv2d: 1x1 identity kernel") {
    Rng rng(3);
    const FeatureMap f = testutil::random_map(1, 5, 5, rng);
    auto k = ConvKernel::zeros(1, 1, 1, 1, 1, 0);
    k.weights[0] = 1.0;
    const FeatureMap out = conv2d(f, k);
    REQUIRE(out.same_shape(f));
    for (size_t i = 0; i < f.data.size(); ++i) CHECK(out.data[i] == f.data[i]);
}

TEST_CASE("conv2d: 3x3 box kernel on one-hot input gives box pattern") {
    FeatureMap f(1, 3, 3);
    f.at(0, 1, 1) = 1.0;
    auto k = ConvKernel::zeros(1, 1, 3, 3, 1, 1);
    for (auto& w : k.weights) w = 1.0;
    const FeatureMap out = conv2d(f, k);
    const FeatureMap want = testutil::oracle_conv2d(f, k);
    for (size_t i = 0; i < out.data.size(); ++i) CHECK(out.data[i] == want.data[i]);
    // the one-hot spreads to every cell the 3x3 window reaches
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x) CHECK(out.at(0, y, x) == 1.0);
}

TEST_CASE("conv2d: stride-2 output shape") {
    FeatureMap f(1, 4, 4);
    const auto k = ConvKernel::zeros(1, 1, 2, 2, 2, 0);
    const FeatureMap out = conv2d(f, k);
    CHECK(out.height == 2);
    CHECK(out.width == 2);
}

TEST_CASE("conv2d: matches oracle on seeded shapes") {
    Rng rng(1234);
    const struct {
        int c, h, w, oc, kh, kw, stride, pad;
    } cases[] = {
        {3, 7, 9, 4, 3, 3, 1, 1}, {2, 8, 8, 5, 5, 5, 2, 2},
        {1, 6, 6, 2, 1, 1, 1, 0}, {4, 9, 7, 3, 3, 5, 2, 1},
        {2, 5, 5, 2, 3, 3, 1, 0},
    };
    for (const auto& tc : cases) {
        const FeatureMap f = testutil::random_map(tc.c, tc.h, tc.w, rng);
        const ConvKernel k =
            testutil::random_kernel(tc.oc, tc.c, tc.kh, tc.kw, tc.stride, tc.pad, rng);
        const FeatureMap got = conv2d(f, k);
        const FeatureMap want = testutil::oracle_conv2d(f, k);
        REQUIRE(got.same_shape(want));
        for (size_t i = 0; i < got.data.size(); ++i)
            CHECK(got.data[i] == doctest::Approx(want.data[i]).epsilon(1e-12));
    }
}

TEST_CASE("conv2d: linearity in the input") {
    Rng rng(77);
    const FeatureMap f1 = testutil::random_map(2, 6, 6, rng);
    const FeatureMap f2 = testutil::random_map(2, 6, 6, rng);
    ConvKernel k = testutil::random_kernel(3, 2, 3, 3, 1, 1, rng);
    for (auto& b : k.bias) b = 0.0;
    const double a = 1.7, b = -0.6;
    FeatureMap mix(2, 6, 6);
    for (size_t i = 0; i < mix.data.size(); ++i) mix.data[i] = a * f1.data[i] + b * f2.data[i];
    const FeatureMap lhs = conv2d(mix, k);
    const FeatureMap r1 = conv2d(f1, k);
    const FeatureMap r2 = conv2d(f2, k);
    for (size_t i = 0; i < lhs.data.size(); ++i)
        CHECK(lhs.data[i] ==
              doctest::Approx(a * r1.data[i] + b * r2.data[i]).epsilon(1e-12));
}

TEST_CASE("conv2d: shape errors") {
    FeatureMap f(2, 4, 4);
    CHECK_THROWS_AS(conv2d(f, ConvKernel::zeros(1, 3, 3, 3, 1, 1)), DimensionError);
    CHECK_THROWS_AS(conv2d(f, ConvKernel::zeros(1, 2, 7, 7, 1, 0)), DimensionError);
}

TEST_CASE("gap broadcast of a channel-constant map reproduces the map") {
    // dyadic levels keep the mean arithmetic exact at any spatial size
    Rng rng(9);
    FeatureMap f(3, 5, 4);
    double levels[3];
    for (auto& l : levels) l = (rng.uniform_int(1025) - 512) / 256.0;
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 5; ++y)
            for (int x = 0; x < 4; ++x) f.at(c, y, x) = levels[c];
    const auto pooled = gap(f);
    for (int c = 0; c < 3; ++c)
        for (int y = 0; y < 5; ++y)
            for (int x = 0; x < 4; ++x) CHECK(pooled[c] == f.at(c, y, x));

    // general reals reproduce to one ulp
    FeatureMap g(2, 5, 4);
    const double vals[2] = {rng.uniform(), rng.uniform()};
    for (int c = 0; c < 2; ++c)
        for (int y = 0; y < 5; ++y)
            for (int x = 0; x < 4; ++x) g.at(c, y, x) = vals[c];
    const auto pooled2 = gap(g);
    for (int c = 0; c < 2; ++c)
        CHECK(pooled2[c] == doctest::Approx(vals[c]).epsilon(1e-15));
}

TEST_CASE("grad_check: exact linear derivative") {
    const std::vector<double> x{2.0};
    const std::vector<double> analytic{3.0};
    const double err = grad_check(
        [](std::span<const double> v) { return 3.0 * v[0]; }, analytic, x);
    CHECK(err <= 1e-10);
}

TEST_CASE("grad_check: sigmoid derivative at 0 is 0.25") {
    const std::vector<double> x{0.0};
    const std::vector<double> analytic{0.25};
    const double err = grad_check(
        [](std::span<const double> v) { return sigmoid(v[0]); }, analytic, x);
    CHECK(err < 1e-6);
}

TEST_CASE("grad_check: non-finite forward raises CheckFailure") {
    const std::vector<double> x{0.5};
    const std::vector<double> analytic{0.0};
    CHECK_THROWS_AS(grad_check(
                        [](std::span<const double> v) {
                            return v[0] > 0.5 ? std::numeric_limits<double>::quiet_NaN() : 0.0;
                        },
                        analytic, x),
                    CheckFailure);
}

namespace {

// scalar objective <probe, op(x)> for vector-valued ops
double probed(const std::vector<double>& out, const std::vector<double>& probe) {
    double s = 0.0;
    for (size_t i = 0; i < out.size(); ++i) s += out[i] * probe[i];
    return s;
}

}  // namespace

TEST_CASE("conv2d_backward passes grad_check on input and parameters") {
    Rng rng(21);
    const FeatureMap f = testutil::random_map(2, 6, 5, rng);
    const ConvKernel k = testutil::random_kernel(3, 2, 3, 3, 2, 1, rng);
    const FeatureMap out0 = conv2d(f, k);
    std::vector<double> probe(out0.data.size());
    for (auto& p : probe) p = rng.uniform(-1.0, 1.0);

    FeatureMap upstream(out0.channels, out0.height, out0.width);
    upstream.data = probe;
    const ConvGrads grads = conv2d_backward(f, k, upstream);

    // input gradient
    double err = grad_check(
        [&](std::span<const double> x) {
            FeatureMap fx = f;
            fx.data.assign(x.begin(), x.end());
            return probed(conv2d(fx, k).data, probe);
        },
        grads.input.data, f.data);
    CHECK(err < 1e-6);

    // weight gradient
    err = grad_check(
        [&](std::span<const double> wts) {
            ConvKernel kw = k;
            kw.weights.assign(wts.begin(), wts.end());
            return probed(conv2d(f, kw).data, probe);
        },
        grads.params.weights, k.weights);
    CHECK(err < 1e-6);

    // bias gradient
    err = grad_check(
        [&](std::span<const double> bs) {
            ConvKernel kb = k;
            kb.bias.assign(bs.begin(), bs.end());
            return probed(conv2d(f, kb).data, probe);
        },
        grads.params.bias, k.bias);
    CHECK(err < 1e-6);
}

TEST_CASE("mlp/gap/gmp backwards pass grad_check") {
    Rng rng(31);
    const auto p = testutil::random_mlp(6, 2, rng);
    ChannelVector v(6);
    for (auto& e : v) e = rng.uniform(-1.0, 1.0);
    std::vector<double> probe(6);
    for (auto& e : probe) e = rng.uniform(-1.0, 1.0);

    const MlpGrads mg = mlp_backward(v, p, probe);
    double err = grad_check(
        [&](std::span<const double> x) {
            return probed(mlp_forward(ChannelVector(x.begin(), x.end()), p), probe);
        },
        mg.input, v);
    CHECK(err < 1e-6);

    err = grad_check(
        [&](std::span<const double> w) {
            MlpParams pw = p;
            pw.w1.assign(w.begin(), w.end());
            return probed(mlp_forward(v, pw), probe);
        },
        mg.params.w1, p.w1);
    CHECK(err < 1e-6);

    const FeatureMap f = testutil::random_map(3, 4, 4, rng);
    std::vector<double> cprobe(3);
    for (auto& e : cprobe) e = rng.uniform(-1.0, 1.0);
    const FeatureMap gg = gap_backward(3, 4, 4, cprobe);
    err = grad_check(
        [&](std::span<const double> x) {
            FeatureMap fx = f;
            fx.data.assign(x.begin(), x.end());
            return probed(gap(fx), cprobe);
        },
        gg.data, f.data);
    CHECK(err < 1e-6);

    const FeatureMap mg2 = gmp_backward(f, cprobe);
    err = grad_check(
        [&](std::span<const double> x) {
            FeatureMap fx = f;
            fx.data.assign(x.begin(), x.end());
            return probed(gmp(fx), cprobe);
        },
        mg2.data, f.data);
    CHECK(err < 1e-6);
}

TEST_CASE("dimension errors for empty extents") {
    CHECK_THROWS_AS(FeatureMap(0, 2, 2), DimensionError);
    CHECK_THROWS_AS(FeatureMap(1, 0, 2), DimensionError);
}
