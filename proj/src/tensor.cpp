#include "fusedet/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fusedet {

void assert_finite(std::span<const double> values, const char* what) {
    for (double v : values) {
        if (!std::isfinite(v)) throw DataError(std::string("non-finite value in ") + what);
    }
}

MlpParams MlpParams::zeros(int channels, int reduction) {
    if (channels <= 0 || reduction <= 0 || channels % reduction != 0)
        throw DimensionError("mlp: reduction must divide channel count");
    MlpParams p;
    p.channels = channels;
    p.reduction = reduction;
    const int hid = p.hidden();
    p.w1.assign(static_cast<size_t>(hid) * channels, 0.0);
    p.b1.assign(hid, 0.0);
    p.w2.assign(static_cast<size_t>(channels) * hid, 0.0);
    p.b2.assign(channels, 0.0);
    return p;
}

MlpParams MlpParams::init(int channels, int reduction, Rng& rng) {
    MlpParams p = zeros(channels, reduction);
    const int hid = p.hidden();
    // He bound for the relu hidden layer, Xavier for the linear output
    const double a1 = std::sqrt(6.0 / channels);
    const double a2 = std::sqrt(6.0 / (hid + channels));
    for (auto& w : p.w1) w = rng.uniform(-a1, a1);
    for (auto& w : p.w2) w = rng.uniform(-a2, a2);
    return p;
}

ConvKernel ConvKernel::zeros(int outC, int inC, int kh, int kw, int stride, int padding) {
    if (outC <= 0 || inC <= 0 || kh <= 0 || kw <= 0 || stride <= 0 || padding < 0)
        throw DimensionError("conv kernel: bad geometry");
    ConvKernel k;
    k.outChannels = outC;
    k.inChannels = inC;
    k.kh = kh;
    k.kw = kw;
    k.stride = stride;
    k.padding = padding;
    k.weights.assign(static_cast<size_t>(outC) * inC * kh * kw, 0.0);
    k.bias.assign(outC, 0.0);
    return k;
}

ConvKernel ConvKernel::init(int outC, int inC, int kh, int kw, int stride, int padding, Rng& rng) {
    ConvKernel k = zeros(outC, inC, kh, kw, stride, padding);
    // He uniform: keeps activation scale roughly constant through relu stacks
    const double fanIn = static_cast<double>(inC) * kh * kw;
    const double a = std::sqrt(6.0 / fanIn);
    for (auto& w : k.weights) w = rng.uniform(-a, a);
    return k;
}

ChannelVector gap(const FeatureMap& f) {
    if (f.height <= 0 || f.width <= 0) throw DimensionError("gap: empty spatial extent");
    const double inv = 1.0 / (static_cast<double>(f.height) * f.width);
    ChannelVector out(f.channels, 0.0);
    const size_t plane = static_cast<size_t>(f.height) * f.width;
    for (int c = 0; c < f.channels; ++c) {
        const double* p = f.data.data() + c * plane;
        double s = 0.0;
        for (size_t i = 0; i < plane; ++i) s += p[i];
        out[c] = s * inv;
    }
    return out;
}

ChannelVector gmp(const FeatureMap& f) {
    if (f.height <= 0 || f.width <= 0) throw DimensionError("gmp: empty spatial extent");
    ChannelVector out(f.channels);
    const size_t plane = static_cast<size_t>(f.height) * f.width;
    for (int c = 0; c < f.channels; ++c) {
        const double* p = f.data.data() + c * plane;
        double m = p[0];
        for (size_t i = 1; i < plane; ++i) m = std::max(m, p[i]);
        out[c] = m;
    }
    return out;
}

double sigmoid(double x) {
    double s;
    if (x >= 0.0) {
        s = 1.0 / (1.0 + std::exp(-x));
    } else {
        const double e = std::exp(x);
        s = e / (1.0 + e);
    }
    // keep strictly inside (0,1) even under saturation
    constexpr double lo = std::numeric_limits<double>::min();
    static const double hi = std::nextafter(1.0, 0.0);
    return std::clamp(s, lo, hi);
}

std::vector<double> sigmoid(std::span<const double> xs) {
    std::vector<double> out(xs.size());
    for (size_t i = 0; i < xs.size(); ++i) out[i] = sigmoid(xs[i]);
    return out;
}

ChannelVector mlp_forward(const ChannelVector& v, const MlpParams& p) {
    if (static_cast<int>(v.size()) != p.channels) throw DimensionError("mlp: input length != C");
    const int hid = p.hidden();
    ChannelVector h(hid, 0.0);
    for (int i = 0; i < hid; ++i) {
        double s = p.b1[i];
        const double* w = p.w1.data() + static_cast<size_t>(i) * p.channels;
        for (int j = 0; j < p.channels; ++j) s += w[j] * v[j];
        h[i] = std::max(0.0, s);
    }
    ChannelVector out(p.channels, 0.0);
    for (int i = 0; i < p.channels; ++i) {
        double s = p.b2[i];
        const double* w = p.w2.data() + static_cast<size_t>(i) * hid;
        for (int j = 0; j < hid; ++j) s += w[j] * h[j];
        out[i] = s;
    }
    assert_finite(out, "mlp_forward");
    return out;
}

FeatureMap conv2d(const FeatureMap& f, const ConvKernel& k) {
    if (k.inChannels != f.channels) throw DimensionError("conv2d: input channels mismatch");
    const int outH = (f.height + 2 * k.padding - k.kh) / k.stride + 1;
    const int outW = (f.width + 2 * k.padding - k.kw) / k.stride + 1;
    if (f.height + 2 * k.padding < k.kh || f.width + 2 * k.padding < k.kw || outH < 1 || outW < 1)
        throw DimensionError("conv2d: output would be empty");

    FeatureMap out(k.outChannels, outH, outW);
    const int s = k.stride, p = k.padding;
    for (int oc = 0; oc < k.outChannels; ++oc) {
        for (int oh = 0; oh < outH; ++oh) {
            double* dst = out.row(oc, oh);
            const double b = k.bias[oc];
            for (int ow = 0; ow < outW; ++ow) dst[ow] = b;
        }
        for (int ic = 0; ic < k.inChannels; ++ic) {
            for (int ky = 0; ky < k.kh; ++ky) {
                for (int kx = 0; kx < k.kw; ++kx) {
                    const double wv = k.w(oc, ic, ky, kx);
                    if (wv == 0.0) continue;
                    // valid output ranges so the inner loops stay branch-free
                    for (int oh = 0; oh < outH; ++oh) {
                        const int ih = oh * s - p + ky;
                        if (ih < 0 || ih >= f.height) continue;
                        const double* src = f.row(ic, ih);
                        double* dst = out.row(oc, oh);
                        int owLo = 0, owHi = outW - 1;
                        if (p - kx > 0) owLo = (p - kx + s - 1) / s;
                        const int maxIw = f.width - 1 + p - kx;
                        if (maxIw < 0) continue;
                        owHi = std::min(owHi, maxIw / s);
                        const int off = kx - p;
                        for (int ow = owLo; ow <= owHi; ++ow) dst[ow] += wv * src[ow * s + off];
                    }
                }
            }
        }
    }
    assert_finite(out.data, "conv2d");
    return out;
}

FeatureMap relu(const FeatureMap& f) {
    FeatureMap out = f;
    for (auto& v : out.data) v = std::max(0.0, v);
    return out;
}

FeatureMap gap_backward(int channels, int height, int width, const ChannelVector& gradOut) {
    if (static_cast<int>(gradOut.size()) != channels)
        throw DimensionError("gap_backward: grad length != C");
    FeatureMap g(channels, height, width);
    const double inv = 1.0 / (static_cast<double>(height) * width);
    const size_t plane = static_cast<size_t>(height) * width;
    for (int c = 0; c < channels; ++c) {
        const double v = gradOut[c] * inv;
        double* p = g.data.data() + c * plane;
        for (size_t i = 0; i < plane; ++i) p[i] = v;
    }
    return g;
}

FeatureMap gmp_backward(const FeatureMap& input, const ChannelVector& gradOut) {
    if (static_cast<int>(gradOut.size()) != input.channels)
        throw DimensionError("gmp_backward: grad length != C");
    FeatureMap g(input.channels, input.height, input.width);
    const size_t plane = static_cast<size_t>(input.height) * input.width;
    for (int c = 0; c < input.channels; ++c) {
        const double* p = input.data.data() + c * plane;
        size_t best = 0;
        for (size_t i = 1; i < plane; ++i)
            if (p[i] > p[best]) best = i;
        g.data[c * plane + best] = gradOut[c];
    }
    return g;
}

MlpGrads mlp_backward(const ChannelVector& v, const MlpParams& p, const ChannelVector& gradOut) {
    if (static_cast<int>(v.size()) != p.channels || static_cast<int>(gradOut.size()) != p.channels)
        throw DimensionError("mlp_backward: shape mismatch");
    const int hid = p.hidden();

    // recompute hidden pre-activations
    std::vector<double> hpre(hid, 0.0), hact(hid, 0.0);
    for (int i = 0; i < hid; ++i) {
        double s = p.b1[i];
        const double* w = p.w1.data() + static_cast<size_t>(i) * p.channels;
        for (int j = 0; j < p.channels; ++j) s += w[j] * v[j];
        hpre[i] = s;
        hact[i] = std::max(0.0, s);
    }

    MlpGrads g;
    g.params = MlpParams::zeros(p.channels, p.reduction);
    g.input.assign(p.channels, 0.0);

    // layer 2
    std::vector<double> dh(hid, 0.0);
    for (int i = 0; i < p.channels; ++i) {
        const double go = gradOut[i];
        g.params.b2[i] = go;
        double* dw = g.params.w2.data() + static_cast<size_t>(i) * hid;
        const double* w = p.w2.data() + static_cast<size_t>(i) * hid;
        for (int j = 0; j < hid; ++j) {
            dw[j] = go * hact[j];
            dh[j] += go * w[j];
        }
    }
    // relu gate
    for (int j = 0; j < hid; ++j)
        if (hpre[j] <= 0.0) dh[j] = 0.0;
    // layer 1
    for (int i = 0; i < hid; ++i) {
        const double gi = dh[i];
        g.params.b1[i] = gi;
        double* dw = g.params.w1.data() + static_cast<size_t>(i) * p.channels;
        const double* w = p.w1.data() + static_cast<size_t>(i) * p.channels;
        for (int j = 0; j < p.channels; ++j) {
            dw[j] = gi * v[j];
            g.input[j] += gi * w[j];
        }
    }
    return g;
}

ConvGrads conv2d_backward(const FeatureMap& input, const ConvKernel& k, const FeatureMap& gradOut) {
    if (k.inChannels != input.channels) throw DimensionError("conv2d_backward: channels mismatch");
    const int outH = (input.height + 2 * k.padding - k.kh) / k.stride + 1;
    const int outW = (input.width + 2 * k.padding - k.kw) / k.stride + 1;
    if (gradOut.channels != k.outChannels || gradOut.height != outH || gradOut.width != outW)
        throw DimensionError("conv2d_backward: upstream shape mismatch");

    ConvGrads g{FeatureMap(input.channels, input.height, input.width),
                ConvKernel::zeros(k.outChannels, k.inChannels, k.kh, k.kw, k.stride, k.padding)};
    const int s = k.stride, p = k.padding;

    for (int oc = 0; oc < k.outChannels; ++oc) {
        double db = 0.0;
        for (int oh = 0; oh < outH; ++oh) {
            const double* go = gradOut.row(oc, oh);
            for (int ow = 0; ow < outW; ++ow) db += go[ow];
        }
        g.params.bias[oc] = db;

        for (int ic = 0; ic < k.inChannels; ++ic) {
            for (int ky = 0; ky < k.kh; ++ky) {
                for (int kx = 0; kx < k.kw; ++kx) {
                    const double wv = k.w(oc, ic, ky, kx);
                    double dw = 0.0;
                    for (int oh = 0; oh < outH; ++oh) {
                        const int ih = oh * s - p + ky;
                        if (ih < 0 || ih >= input.height) continue;
                        const double* src = input.row(ic, ih);
                        double* gi = g.input.row(ic, ih);
                        const double* go = gradOut.row(oc, oh);
                        int owLo = 0, owHi = outW - 1;
                        if (p - kx > 0) owLo = (p - kx + s - 1) / s;
                        const int maxIw = input.width - 1 + p - kx;
                        if (maxIw < 0) continue;
                        owHi = std::min(owHi, maxIw / s);
                        const int off = kx - p;
                        for (int ow = owLo; ow <= owHi; ++ow) {
                            const double gv = go[ow];
                            dw += gv * src[ow * s + off];
                            gi[ow * s + off] += wv * gv;
                        }
                    }
                    g.params.w(oc, ic, ky, kx) = dw;
                }
            }
        }
    }
    return g;
}

FeatureMap relu_backward(const FeatureMap& input, const FeatureMap& gradOut) {
    if (!input.same_shape(gradOut)) throw DimensionError("relu_backward: shape mismatch");
    FeatureMap g = gradOut;
    for (size_t i = 0; i < g.data.size(); ++i)
        if (input.data[i] <= 0.0) g.data[i] = 0.0;
    return g;
}

}  // namespace fusedet
