#include "fusedet/attention.hpp"

#include <algorithm>
#include <cmath>

namespace fusedet {

CbamParams CbamParams::zeros(int channels, int reduction) {
    CbamParams p;
    p.mlp = MlpParams::zeros(channels, reduction);
    p.spatialKernel = ConvKernel::zeros(1, 2, 7, 7, 1, 3);
    return p;
}

CbamParams CbamParams::init(int channels, int reduction, Rng& rng) {
    CbamParams p;
    p.mlp = MlpParams::init(channels, reduction, rng);
    p.spatialKernel = ConvKernel::init(1, 2, 7, 7, 1, 3, rng);
    return p;
}

ChannelAttentionMap channel_attention(const FeatureMap& f, const CbamParams& p) {
    if (p.mlp.channels != f.channels) throw DimensionError("channel_attention: C mismatch");
    return {sigmoid(mlp_forward(gap(f), p.mlp))};
}

namespace {

// [channel-mean; channel-max] planes of a map, plus per-pixel argmax channel.
FeatureMap stack_mean_max(const FeatureMap& f, std::vector<int>* argmaxOut) {
    if (f.channels <= 0) throw DimensionError("spatial_attention: no channels");
    FeatureMap stacked(2, f.height, f.width);
    const size_t plane = static_cast<size_t>(f.height) * f.width;
    if (argmaxOut) argmaxOut->assign(plane, 0);
    const double invC = 1.0 / f.channels;
    for (size_t i = 0; i < plane; ++i) {
        double sum = 0.0;
        double best = f.data[i];
        int bestC = 0;
        for (int c = 0; c < f.channels; ++c) {
            const double v = f.data[c * plane + i];
            sum += v;
            if (v > best) {
                best = v;
                bestC = c;
            }
        }
        stacked.data[i] = sum * invC;
        stacked.data[plane + i] = best;
        if (argmaxOut) (*argmaxOut)[i] = bestC;
    }
    return stacked;
}

}  // namespace

SpatialAttentionMap spatial_attention(const FeatureMap& channelRefined, const CbamParams& p) {
    FeatureMap stacked = stack_mean_max(channelRefined, nullptr);
    FeatureMap logits = conv2d(stacked, p.spatialKernel);
    SpatialAttentionMap m;
    m.height = logits.height;
    m.width = logits.width;
    m.weights = sigmoid(logits.data);
    return m;
}

CbamTrace cbam_forward(const FeatureMap& f, const CbamParams& p) {
    CbamTrace t;
    t.pooled = gap(f);
    t.mlpOut = mlp_forward(t.pooled, p.mlp);
    t.channelGate = sigmoid(t.mlpOut);

    t.channelRefined = FeatureMap(f.channels, f.height, f.width);
    const size_t plane = static_cast<size_t>(f.height) * f.width;
    for (int c = 0; c < f.channels; ++c) {
        const double g = t.channelGate[c];
        const double* src = f.data.data() + c * plane;
        double* dst = t.channelRefined.data.data() + c * plane;
        for (size_t i = 0; i < plane; ++i) dst[i] = g * src[i];
    }

    t.stacked = stack_mean_max(t.channelRefined, &t.argmaxC);
    t.spatialLogits = conv2d(t.stacked, p.spatialKernel);
    t.spatialGate.height = t.spatialLogits.height;
    t.spatialGate.width = t.spatialLogits.width;
    t.spatialGate.weights = sigmoid(t.spatialLogits.data);

    t.output = FeatureMap(f.channels, f.height, f.width);
    for (int c = 0; c < f.channels; ++c) {
        const double* src = t.channelRefined.data.data() + c * plane;
        double* dst = t.output.data.data() + c * plane;
        for (size_t i = 0; i < plane; ++i) dst[i] = t.spatialGate.weights[i] * src[i];
    }
    return t;
}

FeatureMap apply_cbam(const FeatureMap& f, const CbamParams& p) {
    return cbam_forward(f, p).output;
}

CbamGrads cbam_backward(const FeatureMap& f, const CbamParams& p, const CbamTrace& t,
                        const FeatureMap& upstreamGrad) {
    if (!upstreamGrad.same_shape(f)) throw DimensionError("cbam_backward: upstream shape mismatch");
    const size_t plane = static_cast<size_t>(f.height) * f.width;

    // out = Ms * Fc
    std::vector<double> dMs(plane, 0.0);
    FeatureMap dFc(f.channels, f.height, f.width);
    for (int c = 0; c < f.channels; ++c) {
        const double* fc = t.channelRefined.data.data() + c * plane;
        const double* up = upstreamGrad.data.data() + c * plane;
        double* d = dFc.data.data() + c * plane;
        for (size_t i = 0; i < plane; ++i) {
            dMs[i] += up[i] * fc[i];
            d[i] = up[i] * t.spatialGate.weights[i];
        }
    }

    // Ms = sigmoid(z)
    FeatureMap dLogits(1, f.height, f.width);
    for (size_t i = 0; i < plane; ++i) {
        const double s = t.spatialGate.weights[i];
        dLogits.data[i] = dMs[i] * s * (1.0 - s);
    }

    ConvGrads convG = conv2d_backward(t.stacked, p.spatialKernel, dLogits);

    // stacked planes: mean spreads uniformly, max routes to the argmax channel
    const double invC = 1.0 / f.channels;
    for (size_t i = 0; i < plane; ++i) {
        const double dMean = convG.input.data[i] * invC;
        for (int c = 0; c < f.channels; ++c) dFc.data[c * plane + i] += dMean;
        dFc.data[static_cast<size_t>(t.argmaxC[i]) * plane + i] += convG.input.data[plane + i];
    }

    // Fc = Mc * F
    ChannelVector dMc(f.channels, 0.0);
    CbamGrads g;
    g.input = FeatureMap(f.channels, f.height, f.width);
    for (int c = 0; c < f.channels; ++c) {
        const double* src = f.data.data() + c * plane;
        const double* d = dFc.data.data() + c * plane;
        double* gi = g.input.data.data() + c * plane;
        const double mc = t.channelGate[c];
        double acc = 0.0;
        for (size_t i = 0; i < plane; ++i) {
            acc += d[i] * src[i];
            gi[i] = d[i] * mc;
        }
        dMc[c] = acc;
    }

    // Mc = sigmoid(mlpOut)
    ChannelVector dMlpOut(f.channels);
    for (int c = 0; c < f.channels; ++c) {
        const double s = t.channelGate[c];
        dMlpOut[c] = dMc[c] * s * (1.0 - s);
    }
    MlpGrads mlpG = mlp_backward(t.pooled, p.mlp, dMlpOut);

    // GAP
    FeatureMap dFromGap = gap_backward(f.channels, f.height, f.width, mlpG.input);
    for (size_t i = 0; i < g.input.data.size(); ++i) g.input.data[i] += dFromGap.data[i];

    g.params.mlp = std::move(mlpG.params);
    g.params.spatialKernel = std::move(convG.params);
    return g;
}

CbamGrads cbam_backward(const FeatureMap& f, const CbamParams& p, const FeatureMap& upstreamGrad) {
    return cbam_backward(f, p, cbam_forward(f, p), upstreamGrad);
}

}  // namespace fusedet
