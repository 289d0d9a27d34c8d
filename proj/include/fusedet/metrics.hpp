#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fusedet/detector_types.hpp"

namespace fusedet {
namespace metrics {

// Intersection-over-union of two center-format boxes; zero-area boxes give 0.
double iou(const Box& a, const Box& b);

// Greedy matching of one image's detections of one class against its ground
// truth. Detections are processed by descending confidence (ties by box
// coordinates); each claims the highest-IoU unmatched GT with IoU >= thresh.
struct MatchResult {
    // per detection, in processing order
    std::vector<Detection> sorted;
    std::vector<int> matchedGt;  // index into gts, or -1
    std::vector<bool> isTp;
    int nGt = 0;
};
MatchResult match_detections(const std::vector<Detection>& dets,
                             const std::vector<GroundTruthBox>& gts, double iouThresh);

struct PRPoint {
    double confidence = 0;
    double precision = 0;
    double recall = 0;
};

// Precision/recall swept over distinct confidences (equal confidences form a
// single step). nGt == 0 is signalled with an empty optional by callers.
struct PRCurve {
    std::vector<PRPoint> points;
    int nGt = 0;
};

// Dataset-level evaluation input: detections and ground truth per image.
struct EvalSet {
    std::vector<std::vector<Detection>> detections;
    std::vector<std::vector<GroundTruthBox>> groundTruth;

    int images() const { return static_cast<int>(detections.size()); }
};

// Pooled single-class PR curve at the given IoU threshold. Returns nullopt
// when the class has no ground truth.
std::optional<PRCurve> pr_curve(const EvalSet& set, int classId, double iouThresh);

// 101-point interpolated average precision with monotone precision envelope.
double average_precision(const PRCurve& curve);

// Per-class AP averaged over classes with at least one ground-truth box.
// Throws DataError when no class has ground truth.
double map_at_50(const EvalSet& set, int numClasses);

struct F1Curve {
    std::vector<std::pair<double, double>> points;  // (confidence threshold, F1)
    double peakF1 = 0;
    double peakConfidence = 0;
};

// Micro-averaged F1 over all classes, swept over the 0.001-step grid plus
// every distinct detection confidence; peak ties resolve to the smallest
// threshold. Throws DataError when the set has no ground truth at all.
F1Curve f1_curve(const EvalSet& set, int numClasses, double iouThresh);

// Macro-averaged (mean over classes with GT) F1 at a fixed threshold;
// emitted alongside the micro curve for comparison.
double macro_f1_at(const EvalSet& set, int numClasses, double iouThresh, double confThresh);

// CSV emission: pr_<class>.csv (confidence,precision,recall), f1.csv
// (confidence,f1), summary.csv (per-class AP, mAP@0.5, peak F1, confidence).
void write_pr_csv(const std::string& path, const PRCurve& curve);
void write_f1_csv(const std::string& path, const F1Curve& curve);
void write_summary_csv(const std::string& path, const std::vector<double>& perClassAp,
                       double mapValue, const F1Curve& f1);

}  // namespace metrics
}  // namespace fusedet
