#pragma once

namespace fusedet {

// Axis-aligned box, center format, normalized [0,1] image coordinates.
struct Box {
    double cx = 0, cy = 0, w = 0, h = 0;
};

struct GroundTruthBox {
    double cx = 0, cy = 0, w = 0, h = 0;
    int classId = 0;

    Box box() const { return {cx, cy, w, h}; }
};

struct Detection {
    double cx = 0, cy = 0, w = 0, h = 0;
    double confidence = 0;
    int classId = 0;

    Box box() const { return {cx, cy, w, h}; }
};

}  // namespace fusedet
