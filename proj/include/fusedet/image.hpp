#pragma once

#include <string>
#include <vector>

#include "fusedet/errors.hpp"

namespace fusedet {

// Grayscale image, pixels in [0,1], row-major.
struct GrayImage {
    int height = 0;
    int width = 0;
    std::vector<double> pixels;

    GrayImage() = default;
    GrayImage(int h, int w) : height(h), width(w), pixels(static_cast<size_t>(h) * w, 0.0) {
        if (h <= 0 || w <= 0) throw DimensionError("GrayImage dims must be positive");
    }

    double& at(int y, int x) { return pixels[static_cast<size_t>(y) * width + x]; }
    double at(int y, int x) const { return pixels[static_cast<size_t>(y) * width + x]; }
    const double* row(int y) const { return pixels.data() + static_cast<size_t>(y) * width; }
    double* row(int y) { return pixels.data() + static_cast<size_t>(y) * width; }

    void clamp01();
};

// Binary 8-bit PGM (P5, maxval 255). Pixel values map linearly: v/255 on
// read, round(v*255) clamped on write.
GrayImage read_pgm(const std::string& path);
void write_pgm(const std::string& path, const GrayImage& img);

}  // namespace fusedet
