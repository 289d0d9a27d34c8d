#include "fusedet/homography.hpp"

#include <Eigen/Dense>
#include <cmath>
#include <fstream>
#include <iomanip>

#include "fusedet/errors.hpp"

namespace fusedet {

std::array<double, 2> Homography::apply(double x, double y) const {
    const double w = h[6] * x + h[7] * y + h[8];
    if (std::abs(w) < 1e-12) throw SingularityError("homography: point at infinity");
    const double u = (h[0] * x + h[1] * y + h[2]) / w;
    const double v = (h[3] * x + h[4] * y + h[5]) / w;
    return {u, v};
}

Homography Homography::inverse() const {
    Eigen::Matrix3d m;
    m << h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], h[8];
    const double det = m.determinant();
    if (std::abs(det) < 1e-15) throw SingularityError("homography: not invertible");
    Eigen::Matrix3d inv = m.inverse();
    Homography out;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) out.h[r * 3 + c] = inv(r, c);
    out.normalize();
    return out;
}

void Homography::normalize() {
    if (std::abs(h[8]) < 1e-12) return;
    const double inv = 1.0 / h[8];
    for (auto& v : h) v *= inv;
    h[8] = 1.0;  // exact
}

namespace {

struct Normalization {
    double cx = 0, cy = 0, scale = 1;  // x' = scale * (x - c)
};

Normalization hartley(std::span<const PointPair> pairs, bool primed) {
    Normalization n;
    const double count = static_cast<double>(pairs.size());
    for (const auto& p : pairs) {
        n.cx += primed ? p.xp : p.x;
        n.cy += primed ? p.yp : p.y;
    }
    n.cx /= count;
    n.cy /= count;
    double meanDist = 0.0;
    for (const auto& p : pairs) {
        const double dx = (primed ? p.xp : p.x) - n.cx;
        const double dy = (primed ? p.yp : p.y) - n.cy;
        meanDist += std::sqrt(dx * dx + dy * dy);
    }
    meanDist /= count;
    n.scale = meanDist > 1e-12 ? std::sqrt(2.0) / meanDist : 1.0;
    return n;
}

}  // namespace

Homography estimate_homography_dlt(std::span<const PointPair> pairs) {
    const int n = static_cast<int>(pairs.size());
    if (n < 4) throw DegeneracyError("dlt: need at least 4 pairs");

    const Normalization ns = hartley(pairs, false);
    const Normalization nd = hartley(pairs, true);

    Eigen::MatrixXd a(2 * n, 9);
    for (int i = 0; i < n; ++i) {
        const double x = ns.scale * (pairs[i].x - ns.cx);
        const double y = ns.scale * (pairs[i].y - ns.cy);
        const double u = nd.scale * (pairs[i].xp - nd.cx);
        const double v = nd.scale * (pairs[i].yp - nd.cy);
        a.row(2 * i) << -x, -y, -1, 0, 0, 0, u * x, u * y, u;
        a.row(2 * i + 1) << 0, 0, 0, -x, -y, -1, v * x, v * y, v;
    }

    Eigen::JacobiSVD<Eigen::MatrixXd> svd(a, Eigen::ComputeFullV);
    const auto& sv = svd.singularValues();
    // rank < 8 leaves a >1-dimensional null space: no unique homography
    if (sv(7) < 1e-9 * sv(0)) throw DegeneracyError("dlt: degenerate point configuration");
    Eigen::VectorXd hvec = svd.matrixV().col(8);

    Eigen::Matrix3d hn;
    hn << hvec(0), hvec(1), hvec(2), hvec(3), hvec(4), hvec(5), hvec(6), hvec(7), hvec(8);

    Eigen::Matrix3d ts, td;
    ts << ns.scale, 0, -ns.scale * ns.cx, 0, ns.scale, -ns.scale * ns.cy, 0, 0, 1;
    td << nd.scale, 0, -nd.scale * nd.cx, 0, nd.scale, -nd.scale * nd.cy, 0, 0, 1;
    Eigen::Matrix3d m = td.inverse() * hn * ts;

    Homography out;
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) out.h[r * 3 + c] = m(r, c);
    out.normalize();
    return out;
}

double reprojection_error(const Homography& h, std::span<const PointPair> pairs) {
    if (pairs.empty()) throw DimensionError("reprojection_error: no pairs");
    double total = 0.0;
    for (const auto& p : pairs) {
        const auto q = h.apply(p.x, p.y);
        const double dx = p.xp - q[0];
        const double dy = p.yp - q[1];
        total += dx * dx + dy * dy;
    }
    return total;
}

namespace {

double pair_distance(const Homography& h, const PointPair& p) {
    const auto q = h.apply(p.x, p.y);
    const double dx = p.xp - q[0];
    const double dy = p.yp - q[1];
    return std::sqrt(dx * dx + dy * dy);
}

// Any collinear triple among the 4 sampled points makes the sample useless.
// Area test relative to the sample's bounding-box area.
bool sample_degenerate(std::span<const PointPair> pairs, const int idx[4]) {
    for (int side = 0; side < 2; ++side) {
        double minX = 1e300, maxX = -1e300, minY = 1e300, maxY = -1e300;
        double xs[4], ys[4];
        for (int i = 0; i < 4; ++i) {
            const auto& p = pairs[idx[i]];
            xs[i] = side == 0 ? p.x : p.xp;
            ys[i] = side == 0 ? p.y : p.yp;
            minX = std::min(minX, xs[i]);
            maxX = std::max(maxX, xs[i]);
            minY = std::min(minY, ys[i]);
            maxY = std::max(maxY, ys[i]);
        }
        const double bboxArea = (maxX - minX) * (maxY - minY);
        if (bboxArea < 1e-12) return true;
        for (int a = 0; a < 2; ++a)
            for (int b = a + 1; b < 3; ++b)
                for (int c = b + 1; c < 4; ++c) {
                    const double area = 0.5 * std::abs((xs[b] - xs[a]) * (ys[c] - ys[a]) -
                                                       (xs[c] - xs[a]) * (ys[b] - ys[a]));
                    if (area < 1e-6 * bboxArea) return true;
                }
    }
    return false;
}

}  // namespace

RansacResult ransac_homography(std::span<const PointPair> pairs, double threshPx, int iters,
                               uint64_t seed) {
    const int n = static_cast<int>(pairs.size());
    if (n < 4) throw RegistrationError(RegistrationStage::Ransac, "fewer than 4 pairs");
    if (threshPx <= 0 || iters < 1)
        throw RegistrationError(RegistrationStage::Ransac, "bad threshold or iteration count");

    Rng rng(seed);
    int bestCount = 0;
    double bestRms = 0.0;
    std::vector<int> bestInliers;

    std::vector<int> current;
    current.reserve(n);
    for (int it = 0; it < iters; ++it) {
        int idx[4];
        for (int i = 0; i < 4; ++i) {
            bool dup;
            do {
                idx[i] = rng.uniform_int(n);
                dup = false;
                for (int j = 0; j < i; ++j) dup |= (idx[j] == idx[i]);
            } while (dup);
        }
        if (sample_degenerate(pairs, idx)) continue;

        PointPair minimal[4] = {pairs[idx[0]], pairs[idx[1]], pairs[idx[2]], pairs[idx[3]]};
        Homography h;
        try {
            h = estimate_homography_dlt(std::span<const PointPair>(minimal, 4));
        } catch (const DegeneracyError&) {
            continue;
        }

        current.clear();
        double sq = 0.0;
        for (int i = 0; i < n; ++i) {
            double d;
            try {
                d = pair_distance(h, pairs[i]);
            } catch (const SingularityError&) {
                continue;
            }
            if (d < threshPx) {
                current.push_back(i);
                sq += d * d;
            }
        }
        const int count = static_cast<int>(current.size());
        if (count < 4) continue;
        const double rms = std::sqrt(sq / count);
        if (count > bestCount || (count == bestCount && rms < bestRms)) {
            bestCount = count;
            bestRms = rms;
            bestInliers = current;
        }
    }

    if (bestCount < 4)
        throw RegistrationError(RegistrationStage::Ransac, "no consensus set of 4 inliers");

    std::vector<PointPair> inlierPairs;
    inlierPairs.reserve(bestInliers.size());
    for (int i : bestInliers) inlierPairs.push_back(pairs[i]);
    RansacResult result;
    result.H = estimate_homography_dlt(inlierPairs);
    result.inliers = std::move(bestInliers);
    return result;
}

RefineResult refine_homography(const Homography& h0, std::span<const PointPair> pairs) {
    if (pairs.size() < 4) throw DegeneracyError("refine: need at least 4 pairs");
    RefineResult result;
    Homography h = h0;
    h.normalize();

    auto objective = [&pairs](const Homography& m) { return reprojection_error(m, pairs); };

    double current = objective(h);
    result.objectives.push_back(current);

    constexpr int kMaxIters = 100;
    constexpr double kRelTol = 1e-10;

    for (int iter = 0; iter < kMaxIters; ++iter) {
        Eigen::Matrix<double, 8, 8> jtj = Eigen::Matrix<double, 8, 8>::Zero();
        Eigen::Matrix<double, 8, 1> jtr = Eigen::Matrix<double, 8, 1>::Zero();

        for (const auto& p : pairs) {
            const double d = h.h[6] * p.x + h.h[7] * p.y + h.h[8];
            if (std::abs(d) < 1e-12)
                throw SingularityError("refine: point at infinity during iteration");
            const double u = (h.h[0] * p.x + h.h[1] * p.y + h.h[2]) / d;
            const double v = (h.h[3] * p.x + h.h[4] * p.y + h.h[5]) / d;
            const double ru = p.xp - u;
            const double rv = p.yp - v;

            // dpred/dh rows; residual = observed - pred, so J_r = -dpred/dh
            Eigen::Matrix<double, 8, 1> ju, jv;
            ju << p.x / d, p.y / d, 1.0 / d, 0, 0, 0, -u * p.x / d, -u * p.y / d;
            jv << 0, 0, 0, p.x / d, p.y / d, 1.0 / d, -v * p.x / d, -v * p.y / d;

            jtj += ju * ju.transpose() + jv * jv.transpose();
            jtr += ju * ru + jv * rv;  // == -J_r^T r
        }

        Eigen::FullPivLU<Eigen::Matrix<double, 8, 8>> lu(jtj);
        if (lu.rank() < 8) {
            result.warned = true;
            result.H = result.iterations == 0 ? h0 : h;
            return result;
        }

        bool accepted = false;
        double lambda = 0.0;
        for (int attempt = 0; attempt < 12; ++attempt) {
            Eigen::Matrix<double, 8, 8> lhs = jtj;
            if (lambda > 0)
                for (int i = 0; i < 8; ++i) lhs(i, i) += lambda * jtj(i, i);
            Eigen::Matrix<double, 8, 1> step = lhs.ldlt().solve(jtr);

            Homography trial = h;
            for (int i = 0; i < 8; ++i) trial.h[i] += step(i);
            double trialObj;
            try {
                trialObj = objective(trial);
            } catch (const SingularityError&) {
                trialObj = std::numeric_limits<double>::infinity();
            }
            if (std::isfinite(trialObj) && trialObj <= current) {
                const double decrease = current - trialObj;
                h = trial;
                current = trialObj;
                result.objectives.push_back(current);
                ++result.iterations;
                accepted = true;
                if (decrease <= kRelTol * std::max(current, 1e-300)) {
                    result.H = h;
                    return result;
                }
                break;
            }
            lambda = lambda == 0.0 ? 1e-4 : lambda * 10.0;
        }
        if (!accepted) break;  // damping exhausted: converged
    }

    result.H = h;
    return result;
}

GrayImage warp(const GrayImage& img, const Homography& h, int outH, int outW) {
    const Homography inv = h.inverse();  // throws SingularityError when not invertible
    GrayImage out(outH, outW);
    for (int y = 0; y < outH; ++y) {
        double* dst = out.row(y);
        for (int x = 0; x < outW; ++x) {
            const double w = inv.h[6] * x + inv.h[7] * y + inv.h[8];
            if (std::abs(w) < 1e-12) {
                dst[x] = 0.0;
                continue;
            }
            const double sx = (inv.h[0] * x + inv.h[1] * y + inv.h[2]) / w;
            const double sy = (inv.h[3] * x + inv.h[4] * y + inv.h[5]) / w;
            if (sx < 0.0 || sy < 0.0 || sx > img.width - 1 || sy > img.height - 1) {
                dst[x] = 0.0;
                continue;
            }
            const int x0 = static_cast<int>(sx);
            const int y0 = static_cast<int>(sy);
            const int x1 = std::min(x0 + 1, img.width - 1);
            const int y1 = std::min(y0 + 1, img.height - 1);
            const double fx = sx - x0;
            const double fy = sy - y0;
            const double v00 = img.at(y0, x0), v01 = img.at(y0, x1);
            const double v10 = img.at(y1, x0), v11 = img.at(y1, x1);
            dst[x] = (1 - fy) * ((1 - fx) * v00 + fx * v01) + fy * ((1 - fx) * v10 + fx * v11);
        }
    }
    return out;
}

double corner_transfer_error(const Homography& a, const Homography& b, int height, int width) {
    const double xs[4] = {0.0, static_cast<double>(width - 1), 0.0,
                          static_cast<double>(width - 1)};
    const double ys[4] = {0.0, 0.0, static_cast<double>(height - 1),
                          static_cast<double>(height - 1)};
    double total = 0.0;
    for (int i = 0; i < 4; ++i) {
        const auto pa = a.apply(xs[i], ys[i]);
        const auto pb = b.apply(xs[i], ys[i]);
        total += std::hypot(pa[0] - pb[0], pa[1] - pb[1]);
    }
    return total / 4.0;
}

Homography random_perspective(int height, int width, double maxCornerShift, Rng& rng) {
    const double xs[4] = {0.0, static_cast<double>(width - 1), 0.0,
                          static_cast<double>(width - 1)};
    const double ys[4] = {0.0, 0.0, static_cast<double>(height - 1),
                          static_cast<double>(height - 1)};
    PointPair corners[4];
    for (int i = 0; i < 4; ++i) {
        // uniform direction, uniform-in-disk radius
        const double angle = rng.uniform(0.0, 2.0 * 3.141592653589793238462643383279502884);
        const double radius = maxCornerShift * std::sqrt(rng.uniform());
        corners[i].x = xs[i];
        corners[i].y = ys[i];
        corners[i].xp = xs[i] + radius * std::cos(angle);
        corners[i].yp = ys[i] + radius * std::sin(angle);
    }
    return estimate_homography_dlt(std::span<const PointPair>(corners, 4));
}

void write_homography(const std::string& path, const Homography& h) {
    std::ofstream out(path);
    if (!out) throw DataError("homography: cannot write " + path);
    out << std::setprecision(17);
    for (int i = 0; i < 9; ++i) out << h.h[i] << (i % 3 == 2 ? '\n' : ' ');
    if (!out) throw DataError("homography: write failed for " + path);
}

Homography read_homography(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("homography: cannot open " + path);
    Homography h;
    for (int i = 0; i < 9; ++i)
        if (!(in >> h.h[i])) throw DataError("homography: malformed file " + path);
    return h;
}

}  // namespace fusedet
