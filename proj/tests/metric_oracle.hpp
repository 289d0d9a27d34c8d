#pragma once

#include <algorithm>
#include <set>
#include <vector>

#include "fusedet/metrics.hpp"

namespace testutil {

// Independent brute-force evaluation: re-match the kept detection subset from
// scratch at every threshold and enumerate the metric definitions directly.
// Shares nothing with the cumulative-sweep implementation it checks.
struct MetricOracle {
    using EvalSet = fusedet::metrics::EvalSet;

    static std::pair<int, int> counts_at(const EvalSet& set, int classId, double iouThresh,
                                         double confThresh) {
        int tp = 0, fp = 0;
        for (int img = 0; img < set.images(); ++img) {
            std::vector<fusedet::Detection> dets;
            for (const auto& d : set.detections[img])
                if (d.classId == classId && d.confidence >= confThresh) dets.push_back(d);
            std::vector<fusedet::GroundTruthBox> gts;
            for (const auto& g : set.groundTruth[img])
                if (g.classId == classId) gts.push_back(g);
            const auto m = fusedet::metrics::match_detections(dets, gts, iouThresh);
            for (bool t : m.isTp) t ? ++tp : ++fp;
        }
        return {tp, fp};
    }

    static int gt_count(const EvalSet& set, int classId) {
        int n = 0;
        for (const auto& img : set.groundTruth)
            for (const auto& g : img)
                if (g.classId == classId) ++n;
        return n;
    }

    static double ap(const EvalSet& set, int classId, double iouThresh) {
        const int nGt = gt_count(set, classId);
        std::set<double> confs;
        for (const auto& img : set.detections)
            for (const auto& d : img)
                if (d.classId == classId) confs.insert(d.confidence);
        std::vector<std::pair<double, double>> pr;  // (recall, precision)
        for (double c : confs) {
            const auto [tp, fp] = counts_at(set, classId, iouThresh, c);
            pr.push_back({static_cast<double>(tp) / nGt,
                          (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0});
        }
        double total = 0.0;
        for (int i = 0; i <= 100; ++i) {
            const double r = i / 100.0;
            double best = 0.0;
            for (const auto& [recall, precision] : pr)
                if (recall >= r) best = std::max(best, precision);
            total += best;
        }
        return total / 101.0;
    }

    static double map50(const EvalSet& set, int numClasses) {
        double total = 0.0;
        int classes = 0;
        for (int c = 0; c < numClasses; ++c) {
            if (gt_count(set, c) == 0) continue;
            total += ap(set, c, 0.5);
            ++classes;
        }
        return total / classes;
    }

    static double f1_at(const EvalSet& set, int numClasses, double iouThresh, double confThresh) {
        int tp = 0, fp = 0, nGt = 0;
        for (int c = 0; c < numClasses; ++c) {
            const auto [t, f] = counts_at(set, c, iouThresh, confThresh);
            tp += t;
            fp += f;
            nGt += gt_count(set, c);
        }
        const double p = (tp + fp) > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
        const double r = nGt > 0 ? static_cast<double>(tp) / nGt : 0.0;
        return (p + r) > 0 ? 2 * p * r / (p + r) : 0.0;
    }

    // peak over the same threshold set the curve op sweeps (the 0.001 grid
    // plus every distinct confidence), evaluated independently per threshold
    static std::pair<double, double> f1_peak(const EvalSet& set, int numClasses,
                                             double iouThresh) {
        std::set<double> thresholds;
        for (int k = 0; k <= 999; ++k) thresholds.insert(k / 1000.0);
        for (const auto& img : set.detections)
            for (const auto& d : img) thresholds.insert(d.confidence);
        double peak = -1.0, at = 0.0;
        for (double t : thresholds) {
            const double f1 = f1_at(set, numClasses, iouThresh, t);
            if (f1 > peak) {
                peak = f1;
                at = t;
            }
        }
        return {peak, at};
    }
};

}  // namespace testutil
