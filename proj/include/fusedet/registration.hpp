#pragma once

#include <array>
#include <optional>
#include <utility>
#include <vector>

#include "fusedet/homography.hpp"
#include "fusedet/image.hpp"

namespace fusedet {

struct Keypoint {
    double x = 0;
    double y = 0;
    double response = 0;
};

// Mean-subtracted, L2-normalized 11x11 patch; all-zero for flat patches.
struct Descriptor {
    static constexpr int kPatch = 11;
    static constexpr int kSize = kPatch * kPatch;
    std::array<double, kSize> v{};
};

// Harris corners (k = 0.04, Sobel gradients, 3x3 Gaussian window) with 5x5
// non-maximum suppression, strongest maxN returned in deterministic
// response-then-coordinate order. Image must be at least 16x16.
std::vector<Keypoint> detect_keypoints(const GrayImage& img, int maxN);

// Patch descriptor centered at the rounded keypoint position; nullopt when
// the 11x11 patch does not fit inside the image.
std::optional<Descriptor> describe(const GrayImage& img, const Keypoint& kp);

// Lowe ratio test (nearest < ratio * second-nearest, Euclidean) followed by
// a mutual-best cross-check. Returns (indexA, indexB) pairs.
std::vector<std::pair<int, int>> match_descriptors(const std::vector<Descriptor>& a,
                                                   const std::vector<Descriptor>& b,
                                                   double ratio = 0.8);

struct RegistrationConfig {
    int maxKeypoints = 400;
    double matchRatio = 0.8;
    double ransacThreshPx = 3.0;
    int ransacIters = 2000;
    uint64_t seed = 1;
};

struct RegistrationReport {
    int keypointsVis = 0;
    int keypointsIr = 0;
    int matches = 0;
    int inliers = 0;
    double rmsError = 0.0;
};

struct RegistrationResult {
    Homography H;  // visible -> infrared
    GrayImage warpedVis;
    RegistrationReport report;
};

// Full pipeline: detect -> describe -> match -> RANSAC -> refine -> warp.
// Throws RegistrationError carrying the failing stage.
RegistrationResult register_pair(const GrayImage& vis, const GrayImage& ir,
                                 const RegistrationConfig& cfg);

}  // namespace fusedet
