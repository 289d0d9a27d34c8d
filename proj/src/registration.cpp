#include "fusedet/registration.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fusedet {

std::vector<Keypoint> detect_keypoints(const GrayImage& img, int maxN) {
    if (img.height < 16 || img.width < 16)
        throw DimensionError("detect_keypoints: image smaller than 16x16");
    if (maxN <= 0) return {};

    const int h = img.height, w = img.width;
    std::vector<double> ix(static_cast<size_t>(h) * w, 0.0), iy(ix), ixx(ix), iyy(ix), ixy(ix);

    // Sobel gradients on the interior
    for (int y = 1; y < h - 1; ++y) {
        const double* r0 = img.row(y - 1);
        const double* r1 = img.row(y);
        const double* r2 = img.row(y + 1);
        for (int x = 1; x < w - 1; ++x) {
            const double gx = (r0[x + 1] + 2.0 * r1[x + 1] + r2[x + 1]) -
                              (r0[x - 1] + 2.0 * r1[x - 1] + r2[x - 1]);
            const double gy = (r2[x - 1] + 2.0 * r2[x] + r2[x + 1]) -
                              (r0[x - 1] + 2.0 * r0[x] + r0[x + 1]);
            const size_t i = static_cast<size_t>(y) * w + x;
            ix[i] = gx;
            iy[i] = gy;
            ixx[i] = gx * gx;
            iyy[i] = gy * gy;
            ixy[i] = gx * gy;
        }
    }

    // 3x3 Gaussian window over the gradient products, then Harris response
    constexpr double kHarrisK = 0.04;
    static const double g[3] = {1.0 / 4.0, 2.0 / 4.0, 1.0 / 4.0};  // [1 2 1]/4 per axis
    std::vector<double> response(static_cast<size_t>(h) * w, 0.0);
    double maxResponse = 0.0;
    for (int y = 2; y < h - 2; ++y) {
        for (int x = 2; x < w - 2; ++x) {
            double sxx = 0, syy = 0, sxy = 0;
            for (int dy = -1; dy <= 1; ++dy)
                for (int dx = -1; dx <= 1; ++dx) {
                    const double wgt = g[dy + 1] * g[dx + 1];
                    const size_t i = static_cast<size_t>(y + dy) * w + (x + dx);
                    sxx += wgt * ixx[i];
                    syy += wgt * iyy[i];
                    sxy += wgt * ixy[i];
                }
            const double det = sxx * syy - sxy * sxy;
            const double tr = sxx + syy;
            const double r = det - kHarrisK * tr * tr;
            response[static_cast<size_t>(y) * w + x] = r;
            maxResponse = std::max(maxResponse, r);
        }
    }

    if (maxResponse <= 0.0) return {};
    // small relative factor: strong isolated corners must not drown out the
    // weaker texture corners that registration depends on
    const double threshold = std::max(1e-10, 1e-4 * maxResponse);

    // 5x5 non-maximum suppression; equal-response plateaus keep their first
    // pixel in scan order so symmetric patterns still yield corners
    std::vector<Keypoint> kps;
    for (int y = 2; y < h - 2; ++y) {
        for (int x = 2; x < w - 2; ++x) {
            const double r = response[static_cast<size_t>(y) * w + x];
            if (r <= threshold) continue;
            bool isMax = true;
            for (int dy = -2; dy <= 2 && isMax; ++dy) {
                const int yy = y + dy;
                if (yy < 0 || yy >= h) continue;
                for (int dx = -2; dx <= 2; ++dx) {
                    if (dy == 0 && dx == 0) continue;
                    const int xx = x + dx;
                    if (xx < 0 || xx >= w) continue;
                    const double rn = response[static_cast<size_t>(yy) * w + xx];
                    if (rn > r || (rn == r && (yy < y || (yy == y && xx < x)))) {
                        isMax = false;
                        break;
                    }
                }
            }
            if (!isMax) continue;
            // quadratic subpixel refinement along each axis
            auto subpixel = [](double rm, double r0, double rp) {
                const double denom = rm - 2.0 * r0 + rp;
                if (std::abs(denom) < 1e-12) return 0.0;
                return std::clamp(0.5 * (rm - rp) / denom, -0.5, 0.5);
            };
            const size_t i = static_cast<size_t>(y) * w + x;
            const double ox = subpixel(response[i - 1], r, response[i + 1]);
            const double oy = subpixel(response[i - w], r, response[i + w]);
            kps.push_back({x + ox, y + oy, r});
        }
    }

    std::sort(kps.begin(), kps.end(), [](const Keypoint& a, const Keypoint& b) {
        if (a.response != b.response) return a.response > b.response;
        if (a.y != b.y) return a.y < b.y;
        return a.x < b.x;
    });
    if (static_cast<int>(kps.size()) > maxN) kps.resize(maxN);
    return kps;
}

std::optional<Descriptor> describe(const GrayImage& img, const Keypoint& kp) {
    constexpr int half = Descriptor::kPatch / 2;
    const int cx = static_cast<int>(std::lround(kp.x));
    const int cy = static_cast<int>(std::lround(kp.y));
    if (cx - half < 0 || cy - half < 0 || cx + half >= img.width || cy + half >= img.height)
        return std::nullopt;

    Descriptor d;
    double mean = 0.0;
    int k = 0;
    for (int dy = -half; dy <= half; ++dy)
        for (int dx = -half; dx <= half; ++dx) {
            const double v = img.at(cy + dy, cx + dx);
            d.v[k++] = v;
            mean += v;
        }
    mean /= Descriptor::kSize;
    double norm = 0.0;
    for (auto& v : d.v) {
        v -= mean;
        norm += v * v;
    }
    norm = std::sqrt(norm);
    if (norm < 1e-12) {
        d.v.fill(0.0);  // flat patch
        return d;
    }
    for (auto& v : d.v) v /= norm;
    return d;
}

namespace {

double descriptor_dist2(const Descriptor& a, const Descriptor& b) {
    double s = 0.0;
    for (int i = 0; i < Descriptor::kSize; ++i) {
        const double d = a.v[i] - b.v[i];
        s += d * d;
    }
    return s;
}

// index of nearest neighbour of q in set (ties to the lower index)
int nearest_index(const Descriptor& q, const std::vector<Descriptor>& set) {
    int best = 0;
    double bestD = std::numeric_limits<double>::infinity();
    for (int j = 0; j < static_cast<int>(set.size()); ++j) {
        const double d = descriptor_dist2(q, set[j]);
        if (d < bestD) {
            bestD = d;
            best = j;
        }
    }
    return best;
}

}  // namespace

std::vector<std::pair<int, int>> match_descriptors(const std::vector<Descriptor>& a,
                                                   const std::vector<Descriptor>& b,
                                                   double ratio) {
    if (ratio <= 0.0 || ratio >= 1.0) throw DataError("match: ratio must be in (0,1)");
    std::vector<std::pair<int, int>> matches;
    if (b.size() < 2) return matches;  // ratio test impossible

    for (int i = 0; i < static_cast<int>(a.size()); ++i) {
        int best = -1;
        double bestD = std::numeric_limits<double>::infinity();
        double secondD = std::numeric_limits<double>::infinity();
        for (int j = 0; j < static_cast<int>(b.size()); ++j) {
            const double d = descriptor_dist2(a[i], b[j]);
            if (d < bestD) {
                secondD = bestD;
                bestD = d;
                best = j;
            } else if (d < secondD) {
                secondD = d;
            }
        }
        // ratio test on Euclidean distances (squared both sides)
        if (std::sqrt(bestD) < ratio * std::sqrt(secondD)) {
            // mutual-best cross-check
            if (nearest_index(b[best], a) == i) matches.emplace_back(i, best);
        }
    }
    return matches;
}

RegistrationResult register_pair(const GrayImage& vis, const GrayImage& ir,
                                 const RegistrationConfig& cfg) {
    RegistrationResult result;

    std::vector<Keypoint> kVis = detect_keypoints(vis, cfg.maxKeypoints);
    std::vector<Keypoint> kIr = detect_keypoints(ir, cfg.maxKeypoints);
    result.report.keypointsVis = static_cast<int>(kVis.size());
    result.report.keypointsIr = static_cast<int>(kIr.size());
    if (kVis.size() < 4 || kIr.size() < 4)
        throw RegistrationError(RegistrationStage::Detection, "too few keypoints");

    std::vector<Descriptor> dVis, dIr;
    std::vector<Keypoint> usableVis, usableIr;
    for (const auto& kp : kVis)
        if (auto d = describe(vis, kp)) {
            dVis.push_back(*d);
            usableVis.push_back(kp);
        }
    for (const auto& kp : kIr)
        if (auto d = describe(ir, kp)) {
            dIr.push_back(*d);
            usableIr.push_back(kp);
        }
    if (dVis.size() < 4 || dIr.size() < 4)
        throw RegistrationError(RegistrationStage::Description, "too few usable descriptors");

    const auto matches = match_descriptors(dVis, dIr, cfg.matchRatio);
    result.report.matches = static_cast<int>(matches.size());
    if (matches.size() < 4)
        throw RegistrationError(RegistrationStage::Matching, "too few matches");

    std::vector<PointPair> pairs;
    pairs.reserve(matches.size());
    for (const auto& [i, j] : matches)
        pairs.push_back({usableVis[i].x, usableVis[i].y, usableIr[j].x, usableIr[j].y});

    RansacResult ransac =
        ransac_homography(pairs, cfg.ransacThreshPx, cfg.ransacIters, cfg.seed);

    std::vector<PointPair> inlierPairs;
    inlierPairs.reserve(ransac.inliers.size());
    for (int i : ransac.inliers) inlierPairs.push_back(pairs[i]);

    RefineResult refined = refine_homography(ransac.H, inlierPairs);

    // guided re-match: project every visible keypoint through the current
    // estimate and claim the nearest unclaimed infrared keypoint; the larger
    // correspondence set stabilizes the corners under refinement
    constexpr double kGuidedRadiusPx = 1.5;
    constexpr double kTrimResidualPx = 1.0;
    std::vector<PointPair> fitSet = inlierPairs;
    for (int pass = 0; pass < 1; ++pass) {
        std::vector<PointPair> guided;
        std::vector<bool> takenIr(usableIr.size(), false);
        for (const auto& kp : usableVis) {
            std::array<double, 2> proj;
            try {
                proj = refined.H.apply(kp.x, kp.y);
            } catch (const SingularityError&) {
                continue;
            }
            int best = -1;
            double bestD = kGuidedRadiusPx;
            for (size_t j = 0; j < usableIr.size(); ++j) {
                if (takenIr[j]) continue;
                const double d = std::hypot(usableIr[j].x - proj[0], usableIr[j].y - proj[1]);
                if (d < bestD) {
                    bestD = d;
                    best = static_cast<int>(j);
                }
            }
            if (best >= 0) {
                takenIr[best] = true;
                guided.push_back({kp.x, kp.y, usableIr[best].x, usableIr[best].y});
            }
        }
        if (guided.size() < fitSet.size()) break;
        refined = refine_homography(refined.H, guided);
        fitSet = std::move(guided);
        // trim stragglers and refit
        std::vector<PointPair> trimmed;
        for (const auto& p : fitSet) {
            const auto q = refined.H.apply(p.x, p.y);
            if (std::hypot(p.xp - q[0], p.yp - q[1]) < kTrimResidualPx) trimmed.push_back(p);
        }
        if (trimmed.size() >= 8 && trimmed.size() < fitSet.size()) {
            refined = refine_homography(refined.H, trimmed);
            fitSet = std::move(trimmed);
        }
    }

    result.H = refined.H;
    result.report.inliers = static_cast<int>(fitSet.size());
    result.report.rmsError = std::sqrt(reprojection_error(result.H, fitSet) / fitSet.size());

    try {
        result.warpedVis = warp(vis, result.H, ir.height, ir.width);
    } catch (const SingularityError& e) {
        throw RegistrationError(RegistrationStage::Warp, e.what());
    }
    return result;
}

}  // namespace fusedet
