#pragma once

#include <span>
#include <vector>

#include "fusedet/errors.hpp"
#include "fusedet/rng.hpp"

namespace fusedet {

// Dense C x H x W activation map, row-major (c, then h, then w), doubles
// throughout. All ops check that their outputs stay finite.
struct FeatureMap {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::vector<double> data;

    FeatureMap() = default;
    FeatureMap(int c, int h, int w)
        : channels(c), height(h), width(w), data(static_cast<size_t>(c) * h * w, 0.0) {
        if (c <= 0 || h <= 0 || w <= 0) throw DimensionError("FeatureMap dims must be positive");
    }

    double& at(int c, int h, int w) {
        return data[(static_cast<size_t>(c) * height + h) * width + w];
    }
    double at(int c, int h, int w) const {
        return data[(static_cast<size_t>(c) * height + h) * width + w];
    }
    double* row(int c, int h) { return data.data() + (static_cast<size_t>(c) * height + h) * width; }
    const double* row(int c, int h) const {
        return data.data() + (static_cast<size_t>(c) * height + h) * width;
    }

    size_t size() const { return data.size(); }
    bool same_shape(const FeatureMap& o) const {
        return channels == o.channels && height == o.height && width == o.width;
    }
};

// One value per channel (pooled statistics, attention gates, MLP I/O).
using ChannelVector = std::vector<double>;

// Two-layer perceptron C -> C/r -> C with ReLU hidden activation.
// w1 is (C/r x C) row-major, w2 is (C x C/r) row-major.
struct MlpParams {
    int channels = 0;
    int reduction = 1;
    std::vector<double> w1, b1, w2, b2;

    int hidden() const { return channels / reduction; }

    static MlpParams zeros(int channels, int reduction);
    static MlpParams init(int channels, int reduction, Rng& rng);
};

// Convolution weights, [outC][inC][kh][kw] row-major, zero padding only.
struct ConvKernel {
    int outChannels = 0;
    int inChannels = 0;
    int kh = 0;
    int kw = 0;
    int stride = 1;
    int padding = 0;
    std::vector<double> weights;
    std::vector<double> bias;

    double& w(int oc, int ic, int y, int x) {
        return weights[((static_cast<size_t>(oc) * inChannels + ic) * kh + y) * kw + x];
    }
    double w(int oc, int ic, int y, int x) const {
        return weights[((static_cast<size_t>(oc) * inChannels + ic) * kh + y) * kw + x];
    }

    static ConvKernel zeros(int outC, int inC, int kh, int kw, int stride = 1, int padding = 0);
    static ConvKernel init(int outC, int inC, int kh, int kw, int stride, int padding, Rng& rng);
};

// Throws DataError if any entry is non-finite. Used after every op that can
// amplify values; the trainer maps it to a divergence abort.
void assert_finite(std::span<const double> values, const char* what);

// --- forward ops -----------------------------------------------------------

// Spatial mean per channel.
ChannelVector gap(const FeatureMap& f);

// Spatial max per channel.
ChannelVector gmp(const FeatureMap& f);

// Numerically stable logistic; output clamped to the open interval (0,1).
double sigmoid(double x);
std::vector<double> sigmoid(std::span<const double> xs);

// w2 * relu(w1 * v + b1) + b2. The caller applies sigmoid where needed.
ChannelVector mlp_forward(const ChannelVector& v, const MlpParams& p);

// Cross-correlation with zero padding.
// outH = (H + 2p - kh) / stride + 1, likewise width.
FeatureMap conv2d(const FeatureMap& f, const ConvKernel& k);

FeatureMap relu(const FeatureMap& f);

// --- backward ops ----------------------------------------------------------

// Gradient of gap wrt its input: upstream spread uniformly over H*W.
FeatureMap gap_backward(int channels, int height, int width, const ChannelVector& gradOut);

// Gradient of gmp: upstream routed to the first (scan-order) argmax per channel.
FeatureMap gmp_backward(const FeatureMap& input, const ChannelVector& gradOut);

struct MlpGrads {
    ChannelVector input;  // dL/dv
    MlpParams params;     // gradients stored in parameter-shaped containers
};
MlpGrads mlp_backward(const ChannelVector& v, const MlpParams& p, const ChannelVector& gradOut);

struct ConvGrads {
    FeatureMap input;   // dL/dF
    ConvKernel params;  // dL/dW, dL/db in kernel-shaped containers
};
ConvGrads conv2d_backward(const FeatureMap& input, const ConvKernel& k, const FeatureMap& gradOut);

FeatureMap relu_backward(const FeatureMap& input, const FeatureMap& gradOut);

}  // namespace fusedet
