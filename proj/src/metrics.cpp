#include "fusedet/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <set>

#include "fusedet/errors.hpp"

namespace fusedet {
namespace metrics {

double iou(const Box& a, const Box& b) {
    // areas from the same corner arithmetic as the intersection, so
    // identical boxes give exactly 1
    const double ax1 = a.cx - a.w / 2, ax2 = a.cx + a.w / 2;
    const double ay1 = a.cy - a.h / 2, ay2 = a.cy + a.h / 2;
    const double bx1 = b.cx - b.w / 2, bx2 = b.cx + b.w / 2;
    const double by1 = b.cy - b.h / 2, by2 = b.cy + b.h / 2;
    const double areaA = (ax2 - ax1) * (ay2 - ay1);
    const double areaB = (bx2 - bx1) * (by2 - by1);
    if (areaA <= 0.0 || areaB <= 0.0) return 0.0;
    const double ix = std::min(ax2, bx2) - std::max(ax1, bx1);
    const double iy = std::min(ay2, by2) - std::max(ay1, by1);
    if (ix <= 0.0 || iy <= 0.0) return 0.0;
    const double inter = ix * iy;
    return inter / (areaA + areaB - inter);
}

namespace {

bool detection_order(const Detection& a, const Detection& b) {
    if (a.confidence != b.confidence) return a.confidence > b.confidence;
    if (a.cx != b.cx) return a.cx < b.cx;
    if (a.cy != b.cy) return a.cy < b.cy;
    if (a.w != b.w) return a.w < b.w;
    return a.h < b.h;
}

}  // namespace

MatchResult match_detections(const std::vector<Detection>& dets,
                             const std::vector<GroundTruthBox>& gts, double iouThresh) {
    MatchResult r;
    r.sorted = dets;
    std::sort(r.sorted.begin(), r.sorted.end(), detection_order);
    r.nGt = static_cast<int>(gts.size());
    r.matchedGt.assign(r.sorted.size(), -1);
    r.isTp.assign(r.sorted.size(), false);

    std::vector<bool> taken(gts.size(), false);
    for (size_t d = 0; d < r.sorted.size(); ++d) {
        double bestIou = 0.0;
        int bestGt = -1;
        for (size_t g = 0; g < gts.size(); ++g) {
            if (taken[g]) continue;
            const double v = iou(r.sorted[d].box(), gts[g].box());
            if (v >= iouThresh && v > bestIou) {
                bestIou = v;
                bestGt = static_cast<int>(g);
            }
        }
        if (bestGt >= 0) {
            taken[bestGt] = true;
            r.matchedGt[d] = bestGt;
            r.isTp[d] = true;
        }
    }
    return r;
}

namespace {

struct FlaggedDetection {
    double confidence;
    bool isTp;
};

// Pooled per-class TP/FP flags over the whole set. Greedy matching is
// prefix-stable in confidence order, so a single full-list match yields the
// flags for every confidence threshold at once.
std::vector<FlaggedDetection> pooled_flags(const EvalSet& set, int classId, double iouThresh,
                                           int* nGtOut) {
    std::vector<FlaggedDetection> flags;
    int nGt = 0;
    for (int img = 0; img < set.images(); ++img) {
        std::vector<Detection> dets;
        for (const auto& d : set.detections[img])
            if (d.classId == classId) dets.push_back(d);
        std::vector<GroundTruthBox> gts;
        for (const auto& g : set.groundTruth[img])
            if (g.classId == classId) gts.push_back(g);
        nGt += static_cast<int>(gts.size());
        if (dets.empty()) continue;
        const MatchResult m = match_detections(dets, gts, iouThresh);
        for (size_t i = 0; i < m.sorted.size(); ++i)
            flags.push_back({m.sorted[i].confidence, m.isTp[i]});
    }
    std::sort(flags.begin(), flags.end(), [](const FlaggedDetection& a, const FlaggedDetection& b) {
        return a.confidence > b.confidence;
    });
    if (nGtOut) *nGtOut = nGt;
    return flags;
}

}  // namespace

std::optional<PRCurve> pr_curve(const EvalSet& set, int classId, double iouThresh) {
    int nGt = 0;
    const auto flags = pooled_flags(set, classId, iouThresh, &nGt);
    if (nGt == 0) return std::nullopt;

    PRCurve curve;
    curve.nGt = nGt;
    int tp = 0, fp = 0;
    size_t i = 0;
    while (i < flags.size()) {
        const double conf = flags[i].confidence;
        // equal confidences form one all-or-nothing step
        while (i < flags.size() && flags[i].confidence == conf) {
            if (flags[i].isTp)
                ++tp;
            else
                ++fp;
            ++i;
        }
        PRPoint pt;
        pt.confidence = conf;
        pt.precision = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
        pt.recall = static_cast<double>(tp) / nGt;
        curve.points.push_back(pt);
    }
    return curve;
}

double average_precision(const PRCurve& curve) {
    if (curve.nGt <= 0) throw DataError("average_precision: empty curve");
    double total = 0.0;
    for (int i = 0; i <= 100; ++i) {
        const double r = i / 100.0;
        double best = 0.0;
        for (const auto& pt : curve.points)
            if (pt.recall >= r) best = std::max(best, pt.precision);
        total += best;
    }
    return total / 101.0;
}

double map_at_50(const EvalSet& set, int numClasses) {
    double total = 0.0;
    int classes = 0;
    for (int c = 0; c < numClasses; ++c) {
        const auto curve = pr_curve(set, c, 0.5);
        if (!curve) continue;
        total += average_precision(*curve);
        ++classes;
    }
    if (classes == 0) throw DataError("map_at_50: no class has ground truth");
    return total / classes;
}

namespace {

struct MicroCounts {
    std::vector<FlaggedDetection> flags;  // pooled over all classes, sorted desc
    int totalGt = 0;
};

MicroCounts micro_counts(const EvalSet& set, int numClasses, double iouThresh) {
    MicroCounts mc;
    for (int c = 0; c < numClasses; ++c) {
        int nGt = 0;
        auto flags = pooled_flags(set, c, iouThresh, &nGt);
        mc.totalGt += nGt;
        mc.flags.insert(mc.flags.end(), flags.begin(), flags.end());
    }
    std::sort(mc.flags.begin(), mc.flags.end(),
              [](const FlaggedDetection& a, const FlaggedDetection& b) {
                  return a.confidence > b.confidence;
              });
    return mc;
}

double f1_from_counts(int tp, int fp, int totalGt) {
    const double p = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
    const double r = totalGt > 0 ? static_cast<double>(tp) / totalGt : 0.0;
    return (p + r) > 0.0 ? 2.0 * p * r / (p + r) : 0.0;
}

}  // namespace

F1Curve f1_curve(const EvalSet& set, int numClasses, double iouThresh) {
    const MicroCounts mc = micro_counts(set, numClasses, iouThresh);
    if (mc.totalGt == 0) throw DataError("f1_curve: no ground truth");

    std::set<double> thresholds;
    for (int k = 0; k <= 999; ++k) thresholds.insert(k / 1000.0);
    for (const auto& f : mc.flags) thresholds.insert(f.confidence);

    F1Curve curve;
    curve.peakF1 = -1.0;
    for (double t : thresholds) {
        // detections kept: confidence >= t; flags are sorted descending
        int tp = 0, fp = 0;
        for (const auto& f : mc.flags) {
            if (f.confidence < t) break;
            if (f.isTp)
                ++tp;
            else
                ++fp;
        }
        const double f1 = f1_from_counts(tp, fp, mc.totalGt);
        curve.points.emplace_back(t, f1);
        if (f1 > curve.peakF1) {
            curve.peakF1 = f1;
            curve.peakConfidence = t;  // smallest threshold attaining the peak
        }
    }
    return curve;
}

double macro_f1_at(const EvalSet& set, int numClasses, double iouThresh, double confThresh) {
    double total = 0.0;
    int classes = 0;
    for (int c = 0; c < numClasses; ++c) {
        int nGt = 0;
        const auto flags = pooled_flags(set, c, iouThresh, &nGt);
        if (nGt == 0) continue;
        int tp = 0, fp = 0;
        for (const auto& f : flags) {
            if (f.confidence < confThresh) break;
            if (f.isTp)
                ++tp;
            else
                ++fp;
        }
        total += f1_from_counts(tp, fp, nGt);
        ++classes;
    }
    if (classes == 0) throw DataError("macro_f1_at: no class has ground truth");
    return total / classes;
}

namespace {

std::ofstream open_csv(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("csv: cannot write " + path);
    out << std::setprecision(17);
    return out;
}

}  // namespace

void write_pr_csv(const std::string& path, const PRCurve& curve) {
    auto out = open_csv(path);
    out << "confidence,precision,recall\n";
    for (const auto& pt : curve.points)
        out << pt.confidence << "," << pt.precision << "," << pt.recall << "\n";
}

void write_f1_csv(const std::string& path, const F1Curve& curve) {
    auto out = open_csv(path);
    out << "confidence,f1\n";
    for (const auto& [conf, f1] : curve.points) out << conf << "," << f1 << "\n";
}

void write_summary_csv(const std::string& path, const std::vector<double>& perClassAp,
                       double mapValue, const F1Curve& f1) {
    auto out = open_csv(path);
    out << "metric,class,value\n";
    for (size_t c = 0; c < perClassAp.size(); ++c) {
        if (std::isnan(perClassAp[c])) continue;  // class without ground truth
        out << "ap50," << c << "," << perClassAp[c] << "\n";
    }
    out << "map50,all," << mapValue << "\n";
    out << "f1_peak,all," << f1.peakF1 << "\n";
    out << "f1_peak_confidence,all," << f1.peakConfidence << "\n";
}

}  // namespace metrics
}  // namespace fusedet
