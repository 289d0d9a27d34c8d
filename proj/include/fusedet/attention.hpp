#pragma once

#include "fusedet/tensor.hpp"

namespace fusedet {

// Per-channel multiplicative gate, entries in (0,1).
struct ChannelAttentionMap {
    ChannelVector weights;
};

// Per-pixel multiplicative gate, entries in (0,1).
struct SpatialAttentionMap {
    int height = 0;
    int width = 0;
    std::vector<double> weights;

    double at(int h, int w) const { return weights[static_cast<size_t>(h) * width + w]; }
};

// CBAM block parameters: channel-attention MLP plus the 7x7 conv that maps
// the stacked [channel-mean; channel-max] planes to spatial logits.
struct CbamParams {
    MlpParams mlp;
    ConvKernel spatialKernel;  // 2 -> 1 channels, 7x7, stride 1, pad 3

    static CbamParams zeros(int channels, int reduction = 4);
    static CbamParams init(int channels, int reduction, Rng& rng);
};

// sigma(MLP(GAP(F))), one gate per channel.
ChannelAttentionMap channel_attention(const FeatureMap& f, const CbamParams& p);

// sigma(conv7x7(stack(channel-mean, channel-max))) over the channel-refined map.
SpatialAttentionMap spatial_attention(const FeatureMap& channelRefined, const CbamParams& p);

// Sequential gating: channel gate first, then spatial gate on the refined map.
FeatureMap apply_cbam(const FeatureMap& f, const CbamParams& p);

// Forward pass retaining every intermediate the backward pass needs.
struct CbamTrace {
    ChannelVector pooled;        // GAP(F)
    ChannelVector mlpOut;        // MLP(GAP(F)) pre-sigmoid
    ChannelVector channelGate;   // M_c
    FeatureMap channelRefined;   // M_c * F
    FeatureMap stacked;          // 2 x H x W [mean; max]
    std::vector<int> argmaxC;    // winning channel per pixel for the max plane
    FeatureMap spatialLogits;    // 1 x H x W
    SpatialAttentionMap spatialGate;  // M_s
    FeatureMap output;
};
CbamTrace cbam_forward(const FeatureMap& f, const CbamParams& p);

struct CbamGrads {
    FeatureMap input;   // dL/dF
    CbamParams params;  // gradients in parameter-shaped containers
};
CbamGrads cbam_backward(const FeatureMap& f, const CbamParams& p, const CbamTrace& trace,
                        const FeatureMap& upstreamGrad);

// Convenience overload that recomputes the forward trace.
CbamGrads cbam_backward(const FeatureMap& f, const CbamParams& p, const FeatureMap& upstreamGrad);

}  // namespace fusedet
