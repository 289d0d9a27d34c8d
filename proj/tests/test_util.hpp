#pragma once

#include <vector>

#include "fusedet/rng.hpp"
#include "fusedet/tensor.hpp"

namespace testutil {

inline fusedet::FeatureMap random_map(int c, int h, int w, fusedet::Rng& rng, double lo = -1.0,
                                      double hi = 1.0) {
    fusedet::FeatureMap f(c, h, w);
    for (auto& v : f.data) v = rng.uniform(lo, hi);
    return f;
}

inline fusedet::ConvKernel random_kernel(int outC, int inC, int kh, int kw, int stride, int pad,
                                         fusedet::Rng& rng) {
    auto k = fusedet::ConvKernel::zeros(outC, inC, kh, kw, stride, pad);
    for (auto& v : k.weights) v = rng.uniform(-1.0, 1.0);
    for (auto& v : k.bias) v = rng.uniform(-0.5, 0.5);
    return k;
}

inline fusedet::MlpParams random_mlp(int channels, int reduction, fusedet::Rng& rng) {
    auto p = fusedet::MlpParams::zeros(channels, reduction);
    for (auto& v : p.w1) v = rng.uniform(-1.0, 1.0);
    for (auto& v : p.b1) v = rng.uniform(-0.5, 0.5);
    for (auto& v : p.w2) v = rng.uniform(-1.0, 1.0);
    for (auto& v : p.b2) v = rng.uniform(-0.5, 0.5);
    return p;
}

// Naive reference convolution: direct sliding window, independent loop order.
inline fusedet::FeatureMap oracle_conv2d(const fusedet::FeatureMap& f,
                                         const fusedet::ConvKernel& k) {
    const int outH = (f.height + 2 * k.padding - k.kh) / k.stride + 1;
    const int outW = (f.width + 2 * k.padding - k.kw) / k.stride + 1;
    fusedet::FeatureMap out(k.outChannels, outH, outW);
    for (int oc = 0; oc < k.outChannels; ++oc)
        for (int oh = 0; oh < outH; ++oh)
            for (int ow = 0; ow < outW; ++ow) {
                double acc = k.bias[oc];
                for (int ic = 0; ic < k.inChannels; ++ic)
                    for (int ky = 0; ky < k.kh; ++ky)
                        for (int kx = 0; kx < k.kw; ++kx) {
                            const int ih = oh * k.stride - k.padding + ky;
                            const int iw = ow * k.stride - k.padding + kx;
                            if (ih < 0 || ih >= f.height || iw < 0 || iw >= f.width) continue;
                            acc += k.w(oc, ic, ky, kx) * f.at(ic, ih, iw);
                        }
                out.at(oc, oh, ow) = acc;
            }
    return out;
}

}  // namespace testutil
