#pragma once

#include "fusedet/tensor.hpp"

namespace fusedet {

// Convex combination weight for F_fused = alpha * F_IR + (1 - alpha) * F_VIS.
struct FusionWeight {
    double alpha = 0.5;
};

// alpha = e_IR / (e_IR + e_VIS) where e_X is the mean over channels of the
// per-channel spatial variance ("feature energy"). Degenerate total energy
// below 1e-12 yields alpha = 0.5.
FusionWeight compute_alpha(const FeatureMap& ir, const FeatureMap& vis);

FeatureMap fuse(const FeatureMap& ir, const FeatureMap& vis, FusionWeight w);

struct FuseGrads {
    FeatureMap ir;
    FeatureMap vis;
    double alpha = 0.0;
};

// gradIR = alpha * upstream, gradVIS = (1-alpha) * upstream,
// gradAlpha = sum (F_IR - F_VIS) * upstream. Alpha is a stop-gradient
// statistic during training; gradAlpha is exposed for verification.
FuseGrads fuse_backward(const FeatureMap& ir, const FeatureMap& vis, FusionWeight w,
                        const FeatureMap& upstreamGrad);

}  // namespace fusedet
