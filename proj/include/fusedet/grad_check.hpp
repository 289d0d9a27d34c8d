#pragma once

#include <cmath>
#include <functional>
#include <span>
#include <vector>

#include "fusedet/errors.hpp"

namespace fusedet {

// Central-difference verification of an analytic gradient.
//
// `objective` maps a flat input vector to a scalar; `analyticGrad` is the
// claimed gradient of that scalar at `x`. Returns
//   max_i |analytic_i - cd_i| / max(1, |cd_i|)
// where cd_i is the central difference with step eps. Throws CheckFailure if
// the objective evaluates non-finite anywhere.
inline double grad_check(const std::function<double(std::span<const double>)>& objective,
                         std::span<const double> analyticGrad, std::span<const double> x,
                         double eps = 1e-4) {
    if (analyticGrad.size() != x.size()) throw DimensionError("grad_check: size mismatch");
    std::vector<double> probe(x.begin(), x.end());
    double maxRel = 0.0;
    for (size_t i = 0; i < probe.size(); ++i) {
        const double saved = probe[i];
        probe[i] = saved + eps;
        const double fp = objective(probe);
        probe[i] = saved - eps;
        const double fm = objective(probe);
        probe[i] = saved;
        if (!std::isfinite(fp) || !std::isfinite(fm))
            throw CheckFailure("grad_check: non-finite forward output");
        const double cd = (fp - fm) / (2.0 * eps);
        const double rel = std::abs(analyticGrad[i] - cd) / std::max(1.0, std::abs(cd));
        maxRel = std::max(maxRel, rel);
    }
    return maxRel;
}

}  // namespace fusedet
