#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "fusedet/image.hpp"
#include "fusedet/rng.hpp"

namespace fusedet {

// Corresponding points: (x,y) in the visible image, (xp,yp) in the infrared
// image. The estimated H maps visible coordinates to infrared coordinates.
struct PointPair {
    double x = 0, y = 0;
    double xp = 0, yp = 0;
};

// 3x3 projective transform, row-major, h[8] normalized to 1 when representable.
struct Homography {
    std::array<double, 9> h{1, 0, 0, 0, 1, 0, 0, 0, 1};

    static Homography identity() { return {}; }

    // Homogeneous action followed by perspective division.
    // Throws SingularityError when |w| < 1e-12.
    std::array<double, 2> apply(double x, double y) const;

    Homography inverse() const;

    // Scales so h[8] == 1 when |h[8]| is large enough to be representable.
    void normalize();
};

// Normalized DLT (Hartley normalization, SVD null-space solve of the 2n x 9
// system). Requires >= 4 pairs; throws DegeneracyError when the system does
// not determine a homography (rank < 8).
Homography estimate_homography_dlt(std::span<const PointPair> pairs);

struct RansacResult {
    Homography H;
    std::vector<int> inliers;  // indices into the input pairs
};

// Seeded deterministic RANSAC over 4-pair minimal sets. An inlier has
// reprojection distance < threshPx. The best consensus model (most inliers,
// then lowest inlier RMS, then earliest iteration) is refit by DLT on its
// inliers. Throws RegistrationError when no model reaches 4 inliers.
RansacResult ransac_homography(std::span<const PointPair> pairs, double threshPx, int iters,
                               uint64_t seed);

struct RefineResult {
    Homography H;
    bool warned = false;  // rank-deficient normal equations; H0 returned
    int iterations = 0;
    std::vector<double> objectives;  // objective after each accepted step,
                                     // objectives[0] = at H0
};

// Gauss-Newton on the 8 free parameters (h[8] fixed at 1), minimizing the
// sum of squared reprojection distances, with Levenberg-Marquardt damping
// when a plain step does not decrease the objective. Stops on relative
// decrease < 1e-10 or after 100 iterations. Accepted steps never increase
// the objective.
RefineResult refine_homography(const Homography& h0, std::span<const PointPair> pairs);

// Sum over pairs of squared distances between p' and the perspective-divided
// image of p under H.
double reprojection_error(const Homography& h, std::span<const PointPair> pairs);

// Inverse-mapping warp with bilinear interpolation; samples outside the
// source image contribute 0.
GrayImage warp(const GrayImage& img, const Homography& h, int outH, int outW);

// Mean distance between the images of the four (0,0)/(w-1,0)/(0,h-1)/(w-1,h-1)
// corners under two homographies. Used to score recovered vs reference H.
double corner_transfer_error(const Homography& a, const Homography& b, int height, int width);

// Random perspective built from four corner displacements with norm <=
// maxCornerShift, solved exactly through the corner correspondences.
Homography random_perspective(int height, int width, double maxCornerShift, Rng& rng);

// 9 numbers, row-major, text. Round-trips at full double precision.
void write_homography(const std::string& path, const Homography& h);
Homography read_homography(const std::string& path);

}  // namespace fusedet
