#include "fusedet/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "fusedet/rng.hpp"

namespace fusedet {

namespace {

struct Blob {
    double x, y, radius, amplitude;
};

// Three-octave value noise in [0,1], bilinear with smoothstep fade. The
// finest octave gives the texture enough distinctive corners to register.
class ValueNoise {
public:
    ValueNoise(int size, Rng& rng) : size_(size) {
        lattice_[0] = sample_lattice(size / 16 + 2, rng);
        lattice_[1] = sample_lattice(size / 8 + 2, rng);
        lattice_[2] = sample_lattice(size / 4 + 2, rng);
    }

    double at(double x, double y) const {
        return 0.45 * octave(lattice_[0], 16.0, x, y) + 0.30 * octave(lattice_[1], 8.0, x, y) +
               0.25 * octave(lattice_[2], 4.0, x, y);
    }

private:
    static std::vector<double> sample_lattice(int n, Rng& rng) {
        std::vector<double> v(static_cast<size_t>(n) * n);
        for (auto& e : v) e = rng.uniform();
        return v;
    }

    double octave(const std::vector<double>& lat, double cell, double x, double y) const {
        const int n = static_cast<int>(std::sqrt(static_cast<double>(lat.size())));
        const double gx = x / cell, gy = y / cell;
        const int x0 = std::min(n - 2, static_cast<int>(gx));
        const int y0 = std::min(n - 2, static_cast<int>(gy));
        const double fx = fade(gx - x0), fy = fade(gy - y0);
        const double v00 = lat[static_cast<size_t>(y0) * n + x0];
        const double v01 = lat[static_cast<size_t>(y0) * n + x0 + 1];
        const double v10 = lat[static_cast<size_t>(y0 + 1) * n + x0];
        const double v11 = lat[static_cast<size_t>(y0 + 1) * n + x0 + 1];
        return (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11);
    }

    static double fade(double t) { return t * t * (3.0 - 2.0 * t); }

    int size_;
    std::vector<double> lattice_[3];
};

void add_gaussian(GrayImage& img, const Blob& b) {
    const double sigma = b.radius / 2.0;
    const double inv = 1.0 / (2.0 * sigma * sigma);
    const int r = static_cast<int>(std::ceil(b.radius * 2.0));
    const int x0 = std::max(0, static_cast<int>(b.x) - r);
    const int x1 = std::min(img.width - 1, static_cast<int>(b.x) + r);
    const int y0 = std::max(0, static_cast<int>(b.y) - r);
    const int y1 = std::min(img.height - 1, static_cast<int>(b.y) + r);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double d2 = (x - b.x) * (x - b.x) + (y - b.y) * (y - b.y);
            img.at(y, x) += b.amplitude * std::exp(-d2 * inv);
        }
}

void add_soft_disk(GrayImage& img, const Blob& b) {
    const int r = static_cast<int>(std::ceil(b.radius + 2.0));
    const int x0 = std::max(0, static_cast<int>(b.x) - r);
    const int x1 = std::min(img.width - 1, static_cast<int>(b.x) + r);
    const int y0 = std::max(0, static_cast<int>(b.y) - r);
    const int y1 = std::min(img.height - 1, static_cast<int>(b.y) + r);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double d = std::hypot(x - b.x, y - b.y);
            const double t = std::clamp((b.radius - d) / 1.5 + 0.5, 0.0, 1.0);
            img.at(y, x) += b.amplitude * t;
        }
}

// Rectangular landmark with a per-landmark 2x2-block pattern so corners stay
// distinctive to the descriptor matcher yet survive subpixel warping. Writes
// the same pattern (scaled) into both modality images.
void add_landmark(GrayImage& a, double gainA, GrayImage& b, double gainB, double cx, double cy,
                  double hw, double hh, Rng& rng) {
    const int x0 = std::max(0, static_cast<int>(std::lround(cx - hw)));
    const int x1 = std::min(a.width - 1, static_cast<int>(std::lround(cx + hw)));
    const int y0 = std::max(0, static_cast<int>(std::lround(cy - hh)));
    const int y1 = std::min(a.height - 1, static_cast<int>(std::lround(cy + hh)));
    const int bw = (x1 - x0) / 2 + 2, bh = (y1 - y0) / 2 + 2;
    std::vector<double> blocks(static_cast<size_t>(bw) * bh);
    for (auto& v : blocks) v = rng.uniform(0.55, 1.0);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double v = blocks[static_cast<size_t>((y - y0) / 2) * bw + (x - x0) / 2];
            a.at(y, x) += gainA * v;
            b.at(y, x) += gainB * v;
        }
}

// keeps new blob centers a minimum distance from already placed ones
bool far_from(const std::vector<Blob>& placed, double x, double y, double minDist) {
    for (const auto& b : placed)
        if (std::hypot(b.x - x, b.y - y) < minDist) return false;
    return true;
}

}  // namespace

SyntheticScene generate_scene(const SyntheticSceneSpec& spec, uint64_t index) {
    const int n = spec.imageSize;
    if (n < 32) throw DimensionError("synth: image size must be at least 32");
    Rng rng = Rng::substream(spec.seed, index);

    SyntheticScene scene;
    scene.ir = GrayImage(n, n);
    scene.visAligned = GrayImage(n, n);

    // shared scene structure
    const double irBase = rng.uniform(0.04, 0.18);
    const double visBase = rng.uniform(0.34, 0.52);
    ValueNoise texture(n, rng);

    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            const double t = texture.at(x, y);
            scene.ir.at(y, x) = irBase + 0.18 * t;
            scene.visAligned.at(y, x) = visBase + 0.26 * t;
        }

    // landmarks: shared structure present in both modalities
    for (int l = 0; l < spec.landmarkCount; ++l) {
        const double hw = rng.uniform(2.0, 3.5);
        const double hh = rng.uniform(2.0, 3.5);
        const double x = rng.uniform(7.0, n - 7.0);
        const double y = rng.uniform(7.0, n - 7.0);
        const double sign = rng.uniform() < 0.5 ? -1.0 : 1.0;
        const double a = sign * rng.uniform(0.14, 0.24);
        add_landmark(scene.ir, 0.9 * a, scene.visAligned, a, x, y, hw, hh, rng);
    }

    // targets, visible in both modalities
    const int blobCount = spec.minBlobs + rng.uniform_int(spec.maxBlobs - spec.minBlobs + 1);
    const double margin = 10.0;
    std::vector<Blob> targets;
    for (int b = 0; b < blobCount; ++b) {
        double x, y;
        int guard = 0;
        do {
            x = rng.uniform(margin, n - margin);
            y = rng.uniform(margin, n - margin);
        } while (!far_from(targets, x, y, 14.0) && ++guard < 64);
        const double radius = rng.uniform(spec.minRadius, spec.maxRadius);
        const double irAmp = rng.uniform(0.50, 0.75);
        const double visAmp = rng.uniform(0.28, 0.38);
        targets.push_back({x, y, radius, irAmp});
        add_gaussian(scene.ir, {x, y, radius, irAmp});
        add_soft_disk(scene.visAligned, {x, y, radius, visAmp});

        const double half = (radius + 1.5) / n;
        GroundTruthBox box;
        box.cx = x / n;
        box.cy = y / n;
        box.w = 2.0 * half;
        box.h = 2.0 * half;
        box.classId = 0;
        scene.boxes.push_back(box);
    }

    // IR flares: thermally identical to targets, no visible signature
    const int flares = rng.uniform_int(spec.maxIrFlares + 1);
    std::vector<Blob> distractors = targets;
    for (int f = 0; f < flares; ++f) {
        double x, y;
        int guard = 0;
        do {
            x = rng.uniform(margin, n - margin);
            y = rng.uniform(margin, n - margin);
        } while (!far_from(distractors, x, y, 14.0) && ++guard < 64);
        const double radius = rng.uniform(spec.minRadius, spec.maxRadius);
        const double amp = rng.uniform(0.50, 0.75);
        distractors.push_back({x, y, radius, amp});
        add_gaussian(scene.ir, {x, y, radius, amp});
    }

    // VIS stains: visually identical to targets, no thermal signature
    const int stains = rng.uniform_int(spec.maxVisStains + 1);
    for (int st = 0; st < stains; ++st) {
        double x, y;
        int guard = 0;
        do {
            x = rng.uniform(margin, n - margin);
            y = rng.uniform(margin, n - margin);
        } while (!far_from(distractors, x, y, 14.0) && ++guard < 64);
        const double radius = rng.uniform(spec.minRadius, spec.maxRadius);
        const double amp = rng.uniform(0.28, 0.38);
        distractors.push_back({x, y, radius, amp});
        add_soft_disk(scene.visAligned, {x, y, radius, amp});
    }

    // unalign the visible frame by a bounded random perspective
    scene.visToIr = random_perspective(n, n, spec.maxCornerShift, rng);
    scene.vis = warp(scene.visAligned, scene.visToIr.inverse(), n, n);

    // sensor noise, applied after warping
    for (auto& p : scene.ir.pixels) p += rng.normal(0.0, spec.noiseSigma);
    for (auto& p : scene.vis.pixels) p += rng.normal(0.0, spec.noiseSigma);

    scene.ir.clamp01();
    scene.vis.clamp01();
    scene.visAligned.clamp01();
    return scene;
}

void write_labels(const std::string& path, const std::vector<GroundTruthBox>& boxes) {
    std::ofstream out(path);
    if (!out) throw DataError("labels: cannot write " + path);
    out << std::setprecision(17);
    for (const auto& b : boxes)
        out << b.classId << " " << b.cx << " " << b.cy << " " << b.w << " " << b.h << "\n";
    if (!out) throw DataError("labels: write failed for " + path);
}

std::vector<GroundTruthBox> read_labels(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("labels: cannot open " + path);
    std::vector<GroundTruthBox> boxes;
    GroundTruthBox b;
    while (in >> b.classId >> b.cx >> b.cy >> b.w >> b.h) boxes.push_back(b);
    if (!in.eof()) throw DataError("labels: malformed " + path);
    return boxes;
}

}  // namespace fusedet
