#pragma once

#include <functional>
#include <string>
#include <vector>

#include "fusedet/attention.hpp"
#include "fusedet/detector_types.hpp"
#include "fusedet/fusion.hpp"
#include "fusedet/image.hpp"
#include "fusedet/tensor.hpp"

namespace fusedet {

// Per-cell raw head outputs: channels [tx, ty, tw, th, obj, cls_0..cls_{K-1}],
// each an S x S plane.
struct GridPrediction {
    int S = 0;
    int K = 0;
    std::vector<double> data;

    GridPrediction() = default;
    GridPrediction(int s, int k)
        : S(s), K(k), data(static_cast<size_t>(5 + k) * s * s, 0.0) {}

    double& at(int ch, int i, int j) {
        return data[(static_cast<size_t>(ch) * S + i) * S + j];
    }
    double at(int ch, int i, int j) const {
        return data[(static_cast<size_t>(ch) * S + i) * S + j];
    }
    int cells() const { return S * S; }
};

struct LossWeights {
    double loc = 0.05;
    double conf = 1.0;
    double cls = 0.5;
};

struct LossBreakdown {
    double loc = 0;
    double conf = 0;
    double cls = 0;
    double total = 0;
};

enum class Modality { Both, IrOnly, VisOnly };

struct ModelConfig {
    int numClasses = 1;
    int stemChannels = 8;
    int backboneChannels = 12;
    int mlpReduction = 4;
    bool enableCbam = true;
    bool enableFusion = true;
    Modality modality = Modality::Both;

    bool usesIr() const { return modality != Modality::VisOnly; }
    bool usesVis() const { return modality != Modality::IrOnly; }
};

struct TrainConfig {
    int epochs = 50;
    int batchSize = 16;
    int imageSize = 64;  // paper setting is 640; 64 is the desk-scale default
    double lr0 = 0.3;
    double momentum = 0.9;
    double clipNorm = 0.0;  // global gradient-norm cap per step; 0 disables
    uint64_t seed = 1;
    LossWeights lossWeights;
};

// Mutable view of one named parameter tensor.
struct ParamRef {
    std::string name;
    std::vector<double>* data;
    std::vector<int> shape;
};

// Gradient buffers aligned index-for-index with DetectorModel::parameters().
using GradientSet = std::vector<std::vector<double>>;

struct ForwardTrace;

// Stems (independent IR/VIS conv streams) -> weighted fusion -> CBAM ->
// 3-stage stride-2 conv backbone -> 1x1 head.
struct DetectorModel {
    ModelConfig cfg;
    ConvKernel stemIr, stemVis;
    std::vector<ConvKernel> backbone;  // 3 stride-2 conv blocks
    CbamParams cbam;
    ConvKernel head;

    static DetectorModel init(const ModelConfig& cfg, Rng& rng);

    std::vector<ParamRef> parameters();
    std::vector<ParamRef> parameters() const;  // const view (names/shapes)

    GridPrediction forward(const FeatureMap& ir, const FeatureMap& vis) const;
    // alphaOverride pins the fusion weight (alpha is a stop-gradient
    // statistic; gradient checks need the forward to hold it fixed).
    ForwardTrace forward_trace(const FeatureMap& ir, const FeatureMap& vis,
                               const FusionWeight* alphaOverride = nullptr) const;
    GradientSet backward(const ForwardTrace& trace, const GridPrediction& dLogits) const;
};

// Every intermediate of one forward pass, kept for the backward pass.
struct ForwardTrace {
    const FeatureMap* ir = nullptr;
    const FeatureMap* vis = nullptr;
    FeatureMap stemIrPre, stemIrAct;
    FeatureMap stemVisPre, stemVisAct;
    FusionWeight alpha;
    FeatureMap fused;
    CbamTrace cbamTrace;
    bool cbamUsed = false;
    FeatureMap backbonePre[3], backboneAct[3];
    GridPrediction logits;
};

// Backbone stack alone: conv + relu, stride 2 each.
FeatureMap backbone_forward(const FeatureMap& fused, const std::vector<ConvKernel>& layers);

// 1x1 conv producing raw logits.
GridPrediction head_forward(const FeatureMap& f, const ConvKernel& head, int numClasses);

// Grid decoding with a single 1/S anchor. tw/th clamped to [-4,4] before exp.
// confidence = sigmoid(obj) * softmax(cls)[argmax]; kept when >= confThresh.
std::vector<Detection> decode(const GridPrediction& pred, double confThresh);

// Inverse of the decode transform for a ground-truth box (clamp-interior
// cases). Fills tx,ty,tw,th at the box's cell.
void encode_box(GridPrediction& pred, const GroundTruthBox& gt);

// Greedy per-class suppression by descending confidence; ties broken by
// (classId, cx, cy).
std::vector<Detection> nms(std::vector<Detection> dets, double iouThresh = 0.45);

// Multi-task loss: IoU loss over positive cells, objectness BCE over all
// cells, class cross-entropy over positive cells. A ground truth is assigned
// to the cell containing its center; at most one per cell (excess dropped,
// counted in droppedOut when provided).
LossBreakdown total_loss(const GridPrediction& pred, const std::vector<GroundTruthBox>& gts,
                         const LossWeights& w, int* droppedOut = nullptr);

// Analytic gradient of total_loss with respect to every logit.
GridPrediction loss_backward(const GridPrediction& pred, const std::vector<GroundTruthBox>& gts,
                             const LossWeights& w);

// v' = momentum * v + g; p' = p - lr * v'.
void sgd_step(std::vector<double>& params, const std::vector<double>& grads, double lr,
              double momentum, std::vector<double>& velocity);

struct TrainSample {
    FeatureMap ir;   // 1 x H x W (empty for vis-only)
    FeatureMap vis;  // 1 x H x W, registered into the IR frame (empty for ir-only)
    std::vector<GroundTruthBox> boxes;
};
using Dataset = std::vector<TrainSample>;

struct EpochStats {
    int epoch = 0;
    double lr = 0;
    LossBreakdown mean;
};

struct TrainResult {
    DetectorModel model;
    std::vector<EpochStats> log;
    int droppedGts = 0;
};

// Observer called once per optimizer step with the batch-mean breakdown.
using StepObserver = std::function<void(int epoch, int batch, const LossBreakdown&)>;

// Full training loop: cosine learning rate from lr0 down to lr0/100,
// shuffled batches, SGD with momentum. Deterministic given (dataset, cfg).
// Throws DivergenceError when the loss goes non-finite.
TrainResult train(const Dataset& data, const ModelConfig& mcfg, const TrainConfig& tcfg,
                  const StepObserver& observer = nullptr);

// Forward + decode + NMS for one sample.
std::vector<Detection> run_inference(const DetectorModel& model, const FeatureMap& ir,
                                     const FeatureMap& vis, double confThresh, double nmsIou);

FeatureMap to_feature_map(const GrayImage& img);

// Image standardized to zero mean / unit variance, the form the detector
// trains and infers on. Constant images map to all zeros.
FeatureMap standardized_feature_map(const GrayImage& img);

}  // namespace fusedet
