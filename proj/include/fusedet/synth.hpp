#pragma once

#include <vector>

#include "fusedet/detector_types.hpp"
#include "fusedet/homography.hpp"
#include "fusedet/image.hpp"

namespace fusedet {

// Desk-scale synthetic IR/VIS scene recipe. Targets are small blobs visible
// in both modalities: hot Gaussians on dark noise in IR, low-contrast soft
// disks on textured background in VIS. Each modality also carries
// modality-specific distractors (IR flares without a visible signature, VIS
// stains without a thermal one), and both share landmark structure so the
// pair can be registered. The delivered VIS frame is unaligned by a random
// bounded perspective.
struct SyntheticSceneSpec {
    int imageSize = 64;
    int minBlobs = 1;
    int maxBlobs = 3;
    double minRadius = 2.0;
    double maxRadius = 6.0;
    double maxCornerShift = 8.0;  // bound on the inter-modality homography
    double noiseSigma = 0.015;
    int maxIrFlares = 2;
    int maxVisStains = 1;
    int landmarkCount = 20;
    uint64_t seed = 1;
};

struct SyntheticScene {
    GrayImage ir;
    GrayImage vis;         // unaligned (visToIr maps its points into the IR frame)
    GrayImage visAligned;  // pre-warp rendering, for oracles
    Homography visToIr;
    std::vector<GroundTruthBox> boxes;  // normalized, in the IR frame
};

// Deterministic for a given (spec.seed, index).
SyntheticScene generate_scene(const SyntheticSceneSpec& spec, uint64_t index);

// YOLO-layout labels: one "classId cx cy w h" line per box, normalized.
void write_labels(const std::string& path, const std::vector<GroundTruthBox>& boxes);
std::vector<GroundTruthBox> read_labels(const std::string& path);

}  // namespace fusedet
