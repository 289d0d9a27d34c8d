#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "fusedet/attention.hpp"
#include "fusedet/grad_check.hpp"
#include "test_util.hpp"

using namespace fusedet;

TEST_CASE("channel_attention: zero MLP gives 0.5 gates") {
    Rng rng(1);
    const FeatureMap f = testutil::random_map(4, 5, 5, rng);
    const auto p = CbamParams::zeros(4, 2);
    const auto gates = channel_attention(f, p);
    REQUIRE(gates.weights.size() == 4);
    for (double g : gates.weights) CHECK(g == 0.5);
}

TEST_CASE("channel_attention: channel-constant map with identity MLP") {
    // r = 1 identity MLP: gate = sigmoid of the per-channel constant
    FeatureMap f(2, 3, 3);
    for (int y = 0; y < 3; ++y)
        for (int x = 0; x < 3; ++x) {
            f.at(0, y, x) = 0.7;
            f.at(1, y, x) = -1.2;
        }
    auto p = CbamParams::zeros(2, 1);
    p.mlp.w1[0] = p.mlp.w1[3] = 1.0;
    p.mlp.w2[0] = p.mlp.w2[3] = 1.0;
    const auto gates = channel_attention(f, p);
    CHECK(gates.weights[0] == doctest::Approx(sigmoid(0.7)).epsilon(1e-15));
    // relu zeroes the negative hidden value, so sigmoid(0)
    CHECK(gates.weights[1] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("channel_attention: matches gap/mlp/sigmoid composition") {
    Rng rng(17);
    const FeatureMap f = testutil::random_map(4, 6, 6, rng);
    CbamParams p = CbamParams::zeros(4, 2);
    p.mlp = testutil::random_mlp(4, 2, rng);
    const auto gates = channel_attention(f, p);
    const auto want = sigmoid(mlp_forward(gap(f), p.mlp));
    for (int c = 0; c < 4; ++c) CHECK(gates.weights[c] == want[c]);
}

TEST_CASE("spatial_attention: zero kernel gives 0.5 everywhere") {
    Rng rng(2);
    const FeatureMap f = testutil::random_map(3, 4, 4, rng);
    const auto p = CbamParams::zeros(3, 1);
    const auto m = spatial_attention(f, p);
    CHECK(m.height == 4);
    CHECK(m.width == 4);
    for (double v : m.weights) CHECK(v == 0.5);
}

TEST_CASE("spatial_attention: kernel selecting the mean plane equals sigmoid(F) per pixel") {
    Rng rng(3);
    const FeatureMap f = testutil::random_map(1, 5, 5, rng);
    auto p = CbamParams::zeros(1, 1);
    // unit center tap on the mean plane; with one channel mean == the map
    p.spatialKernel.w(0, 0, 3, 3) = 1.0;
    const auto m = spatial_attention(f, p);
    for (int y = 0; y < 5; ++y)
        for (int x = 0; x < 5; ++x)
            CHECK(m.at(y, x) == doctest::Approx(sigmoid(f.at(0, y, x))).epsilon(1e-15));
}

TEST_CASE("spatial_attention: matches reduce-stack-conv-sigmoid oracle") {
    Rng rng(19);
    const FeatureMap f = testutil::random_map(5, 6, 7, rng);
    CbamParams p = CbamParams::zeros(5, 1);
    p.spatialKernel = testutil::random_kernel(1, 2, 7, 7, 1, 3, rng);
    const auto m = spatial_attention(f, p);

    FeatureMap stacked(2, 6, 7);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 7; ++x) {
            double sum = 0.0, mx = f.at(0, y, x);
            for (int c = 0; c < 5; ++c) {
                sum += f.at(c, y, x);
                mx = std::max(mx, f.at(c, y, x));
            }
            stacked.at(0, y, x) = sum / 5.0;
            stacked.at(1, y, x) = mx;
        }
    const FeatureMap logits = testutil::oracle_conv2d(stacked, p.spatialKernel);
    for (int y = 0; y < 6; ++y)
        for (int x = 0; x < 7; ++x)
            CHECK(m.at(y, x) ==
                  doctest::Approx(sigmoid(logits.at(0, y, x))).epsilon(1e-12));
}

TEST_CASE("apply_cbam: zero input stays zero; zero params scale by 0.25") {
    Rng rng(4);
    FeatureMap zero(3, 4, 4);
    CbamParams p = CbamParams::init(3, 1, rng);
    const FeatureMap out = apply_cbam(zero, p);
    for (double v : out.data) CHECK(v == 0.0);

    const FeatureMap f = testutil::random_map(3, 4, 4, rng);
    const auto zp = CbamParams::zeros(3, 1);
    const FeatureMap scaled = apply_cbam(f, zp);
    for (size_t i = 0; i < f.data.size(); ++i)
        CHECK(scaled.data[i] == doctest::Approx(0.25 * f.data[i]).epsilon(1e-15));
}

TEST_CASE("apply_cbam equals scalar channel-then-spatial gating") {
    Rng rng(23);
    const FeatureMap f = testutil::random_map(4, 6, 6, rng);
    CbamParams p = CbamParams::init(4, 2, rng);
    const FeatureMap out = apply_cbam(f, p);

    const auto mc = channel_attention(f, p);
    FeatureMap refined(4, 6, 6);
    for (int c = 0; c < 4; ++c)
        for (int y = 0; y < 6; ++y)
            for (int x = 0; x < 6; ++x) refined.at(c, y, x) = mc.weights[c] * f.at(c, y, x);
    const auto ms = spatial_attention(refined, p);
    for (int c = 0; c < 4; ++c)
        for (int y = 0; y < 6; ++y)
            for (int x = 0; x < 6; ++x)
                CHECK(out.at(c, y, x) ==
                      doctest::Approx(ms.at(y, x) * refined.at(c, y, x)).epsilon(1e-12));
}

TEST_CASE("cbam shape preservation and gating bound") {
    Rng rng(29);
    for (int trial = 0; trial < 30; ++trial) {
        const int c = 1 + rng.uniform_int(6);
        const int h = 3 + rng.uniform_int(6);
        const int w = 3 + rng.uniform_int(6);
        const FeatureMap f = testutil::random_map(c, h, w, rng, -2.0, 2.0);
        const CbamParams p = CbamParams::init(c, 1, rng);
        const FeatureMap out = apply_cbam(f, p);
        REQUIRE(out.same_shape(f));
        for (size_t i = 0; i < f.data.size(); ++i)
            CHECK(std::abs(out.data[i]) <= std::abs(f.data[i]));
    }
}

TEST_CASE("monotone gate: raising one channel gate scales that row up") {
    Rng rng(37);
    const FeatureMap f = testutil::random_map(3, 4, 4, rng, 0.1, 1.0);
    CbamParams p = CbamParams::init(3, 1, rng);
    const CbamTrace base = cbam_forward(f, p);

    // recompute with the channel-0 gate forced higher, other gates fixed
    for (double boost : {0.1, 0.3}) {
        ChannelVector gates = base.channelGate;
        gates[0] = std::min(0.999, gates[0] + boost);
        FeatureMap refined(3, 4, 4);
        for (int c = 0; c < 3; ++c)
            for (int y = 0; y < 4; ++y)
                for (int x = 0; x < 4; ++x) refined.at(c, y, x) = gates[c] * f.at(c, y, x);
        const auto ms = spatial_attention(refined, p);
        const double ratio = gates[0] / base.channelGate[0];
        for (int y = 0; y < 4; ++y)
            for (int x = 0; x < 4; ++x) {
                const double before = base.spatialGate.at(y, x) * base.channelRefined.at(0, y, x);
                const double after = ms.at(y, x) * refined.at(0, y, x);
                // row 0 scales by the gate ratio up to the (changed) spatial gate
                CHECK(after / ms.at(y, x) ==
                      doctest::Approx(ratio * before / base.spatialGate.at(y, x)).epsilon(1e-12));
            }
    }
}

TEST_CASE("cbam_backward: zero upstream gives zero gradients") {
    Rng rng(41);
    const FeatureMap f = testutil::random_map(3, 4, 4, rng);
    const CbamParams p = CbamParams::init(3, 1, rng);
    const FeatureMap zero(3, 4, 4);
    const CbamGrads g = cbam_backward(f, p, zero);
    for (double v : g.input.data) CHECK(v == 0.0);
    for (double v : g.params.mlp.w1) CHECK(v == 0.0);
    for (double v : g.params.mlp.w2) CHECK(v == 0.0);
    for (double v : g.params.spatialKernel.weights) CHECK(v == 0.0);
}

TEST_CASE("cbam_backward: gradF for zero input equals gate product times upstream") {
    Rng rng(43);
    const FeatureMap zero(2, 3, 3);
    const CbamParams p = CbamParams::init(2, 1, rng);
    FeatureMap upstream = testutil::random_map(2, 3, 3, rng);
    const CbamTrace t = cbam_forward(zero, p);
    const CbamGrads g = cbam_backward(zero, p, t, upstream);
    // with F = 0 every product path through F vanishes except the direct
    // gate-product chain
    for (int c = 0; c < 2; ++c)
        for (int y = 0; y < 3; ++y)
            for (int x = 0; x < 3; ++x) {
                const double want =
                    t.channelGate[c] * t.spatialGate.at(y, x) * upstream.at(c, y, x);
                CHECK(g.input.at(c, y, x) == doctest::Approx(want).epsilon(1e-9));
            }
}

namespace {

double probed_cbam(const FeatureMap& f, const CbamParams& p, const std::vector<double>& probe) {
    const FeatureMap out = apply_cbam(f, p);
    double s = 0.0;
    for (size_t i = 0; i < out.data.size(); ++i) s += out.data[i] * probe[i];
    return s;
}

}  // namespace

TEST_CASE("cbam_backward passes grad_check on a seeded 4x6x6 input") {
    Rng rng(47);
    const FeatureMap f = testutil::random_map(4, 6, 6, rng);
    const CbamParams p = CbamParams::init(4, 2, rng);
    std::vector<double> probe(f.data.size());
    for (auto& v : probe) v = rng.uniform(-1.0, 1.0);

    FeatureMap upstream(4, 6, 6);
    upstream.data = probe;
    const CbamGrads g = cbam_backward(f, p, upstream);

    double err = grad_check(
        [&](std::span<const double> x) {
            FeatureMap fx = f;
            fx.data.assign(x.begin(), x.end());
            return probed_cbam(fx, p, probe);
        },
        g.input.data, f.data);
    CHECK(err < 1e-4);

    err = grad_check(
        [&](std::span<const double> w) {
            CbamParams pw = p;
            pw.mlp.w1.assign(w.begin(), w.end());
            return probed_cbam(f, pw, probe);
        },
        g.params.mlp.w1, p.mlp.w1);
    CHECK(err < 1e-4);

    err = grad_check(
        [&](std::span<const double> w) {
            CbamParams pw = p;
            pw.mlp.w2.assign(w.begin(), w.end());
            return probed_cbam(f, pw, probe);
        },
        g.params.mlp.w2, p.mlp.w2);
    CHECK(err < 1e-4);

    err = grad_check(
        [&](std::span<const double> w) {
            CbamParams pw = p;
            pw.spatialKernel.weights.assign(w.begin(), w.end());
            return probed_cbam(f, pw, probe);
        },
        g.params.spatialKernel.weights, p.spatialKernel.weights);
    CHECK(err < 1e-4);

    err = grad_check(
        [&](std::span<const double> b) {
            CbamParams pb = p;
            pb.spatialKernel.bias.assign(b.begin(), b.end());
            return probed_cbam(f, pb, probe);
        },
        g.params.spatialKernel.bias, p.spatialKernel.bias);
    CHECK(err < 1e-4);
}

TEST_CASE("cbam_backward: shape mismatch raises") {
    Rng rng(53);
    const FeatureMap f = testutil::random_map(2, 4, 4, rng);
    const CbamParams p = CbamParams::init(2, 1, rng);
    const FeatureMap bad(2, 3, 3);
    CHECK_THROWS_AS(cbam_backward(f, p, bad), DimensionError);
}
