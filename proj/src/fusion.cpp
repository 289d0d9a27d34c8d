#include "fusedet/fusion.hpp"

namespace fusedet {

namespace {

// Mean over channels of the per-channel spatial (population) variance.
double feature_energy(const FeatureMap& f) {
    const size_t plane = static_cast<size_t>(f.height) * f.width;
    const double inv = 1.0 / static_cast<double>(plane);
    double total = 0.0;
    for (int c = 0; c < f.channels; ++c) {
        const double* p = f.data.data() + c * plane;
        double mean = 0.0;
        for (size_t i = 0; i < plane; ++i) mean += p[i];
        mean *= inv;
        double var = 0.0;
        for (size_t i = 0; i < plane; ++i) {
            const double d = p[i] - mean;
            var += d * d;
        }
        total += var * inv;
    }
    return total / f.channels;
}

}  // namespace

FusionWeight compute_alpha(const FeatureMap& ir, const FeatureMap& vis) {
    if (!ir.same_shape(vis)) throw DimensionError("compute_alpha: shape mismatch");
    const double eIr = feature_energy(ir);
    const double eVis = feature_energy(vis);
    if (eIr + eVis < 1e-12) return {0.5};
    return {eIr / (eIr + eVis)};
}

FeatureMap fuse(const FeatureMap& ir, const FeatureMap& vis, FusionWeight w) {
    if (!ir.same_shape(vis)) throw DimensionError("fuse: shape mismatch");
    FeatureMap out(ir.channels, ir.height, ir.width);
    const double a = w.alpha, b = 1.0 - w.alpha;
    for (size_t i = 0; i < out.data.size(); ++i) out.data[i] = a * ir.data[i] + b * vis.data[i];
    assert_finite(out.data, "fuse");
    return out;
}

FuseGrads fuse_backward(const FeatureMap& ir, const FeatureMap& vis, FusionWeight w,
                        const FeatureMap& upstreamGrad) {
    if (!ir.same_shape(vis) || !ir.same_shape(upstreamGrad))
        throw DimensionError("fuse_backward: shape mismatch");
    FuseGrads g;
    g.ir = FeatureMap(ir.channels, ir.height, ir.width);
    g.vis = FeatureMap(ir.channels, ir.height, ir.width);
    const double a = w.alpha, b = 1.0 - w.alpha;
    double da = 0.0;
    for (size_t i = 0; i < upstreamGrad.data.size(); ++i) {
        const double u = upstreamGrad.data[i];
        g.ir.data[i] = a * u;
        g.vis.data[i] = b * u;
        da += (ir.data[i] - vis.data[i]) * u;
    }
    g.alpha = da;
    return g;
}

}  // namespace fusedet
