#include "fusedet/detector.hpp"

#include <algorithm>
#include <cmath>

#include "fusedet/metrics.hpp"

namespace fusedet {

FeatureMap to_feature_map(const GrayImage& img) {
    FeatureMap f(1, img.height, img.width);
    f.data = img.pixels;
    return f;
}

FeatureMap standardized_feature_map(const GrayImage& img) {
    FeatureMap f = to_feature_map(img);
    double mean = 0.0;
    for (double v : f.data) mean += v;
    mean /= static_cast<double>(f.data.size());
    double var = 0.0;
    for (double v : f.data) var += (v - mean) * (v - mean);
    var /= static_cast<double>(f.data.size());
    const double inv = 1.0 / std::max(std::sqrt(var), 1e-6);
    for (auto& v : f.data) v = (v - mean) * inv;
    return f;
}

DetectorModel DetectorModel::init(const ModelConfig& cfg, Rng& rng) {
    if (cfg.modality == Modality::Both && !cfg.enableFusion)
        throw DataError("model: dual modality requires fusion");
    DetectorModel m;
    m.cfg = cfg;
    const int c = cfg.stemChannels;
    const int b = cfg.backboneChannels;
    // Draw every init in a fixed order so arms sharing a seed share weights
    // for the layers they have in common.
    m.stemIr = ConvKernel::init(c, 1, 3, 3, 1, 1, rng);
    m.stemVis = ConvKernel::init(c, 1, 3, 3, 1, 1, rng);
    m.cbam = CbamParams::init(c, cfg.mlpReduction, rng);
    m.backbone.push_back(ConvKernel::init(b, c, 3, 3, 2, 1, rng));
    m.backbone.push_back(ConvKernel::init(b, b, 3, 3, 2, 1, rng));
    m.backbone.push_back(ConvKernel::init(b, b, 3, 3, 2, 1, rng));
    m.head = ConvKernel::init(5 + cfg.numClasses, b, 1, 1, 1, 0, rng);
    // zero box rows: decoded boxes start exactly at the anchor (inside the
    // IoU basin) and cannot drift with feature learning except through the
    // localization gradient itself; objectness bias starts at the
    // sparse-target prior so early steps separate cells instead of
    // recovering from a random head
    for (int ch = 0; ch < 4; ++ch)
        for (int ic = 0; ic < b; ++ic) m.head.weights[ch * b + ic] = 0.0;
    m.head.bias[4] = -4.0;
    return m;
}

std::vector<ParamRef> DetectorModel::parameters() {
    std::vector<ParamRef> refs;
    auto add = [&refs](const std::string& name, std::vector<double>& v, std::vector<int> shape) {
        refs.push_back({name, &v, std::move(shape)});
    };
    auto addKernel = [&](const std::string& prefix, ConvKernel& k) {
        add(prefix + "/weights", k.weights, {k.outChannels, k.inChannels, k.kh, k.kw});
        add(prefix + "/bias", k.bias, {k.outChannels});
    };
    if (cfg.usesIr()) addKernel("stem_ir", stemIr);
    if (cfg.usesVis()) addKernel("stem_vis", stemVis);
    if (cfg.enableCbam) {
        add("cbam/mlp_w1", cbam.mlp.w1, {cbam.mlp.hidden(), cbam.mlp.channels});
        add("cbam/mlp_b1", cbam.mlp.b1, {cbam.mlp.hidden()});
        add("cbam/mlp_w2", cbam.mlp.w2, {cbam.mlp.channels, cbam.mlp.hidden()});
        add("cbam/mlp_b2", cbam.mlp.b2, {cbam.mlp.channels});
        addKernel("cbam/spatial", cbam.spatialKernel);
    }
    for (size_t i = 0; i < backbone.size(); ++i)
        addKernel("backbone" + std::to_string(i), backbone[i]);
    addKernel("head", head);
    return refs;
}

std::vector<ParamRef> DetectorModel::parameters() const {
    return const_cast<DetectorModel*>(this)->parameters();
}

FeatureMap backbone_forward(const FeatureMap& fused, const std::vector<ConvKernel>& layers) {
    FeatureMap f = fused;
    for (const auto& layer : layers) f = relu(conv2d(f, layer));
    return f;
}

GridPrediction head_forward(const FeatureMap& f, const ConvKernel& head, int numClasses) {
    if (f.height != f.width) throw DimensionError("head: feature map must be square");
    FeatureMap logits = conv2d(f, head);
    if (logits.channels != 5 + numClasses) throw DimensionError("head: channel count mismatch");
    GridPrediction pred(logits.height, numClasses);
    pred.data = std::move(logits.data);
    return pred;
}

ForwardTrace DetectorModel::forward_trace(const FeatureMap& ir, const FeatureMap& vis,
                                          const FusionWeight* alphaOverride) const {
    ForwardTrace t;
    t.ir = &ir;
    t.vis = &vis;

    if (cfg.usesIr()) {
        t.stemIrPre = conv2d(ir, stemIr);
        t.stemIrAct = relu(t.stemIrPre);
    }
    if (cfg.usesVis()) {
        t.stemVisPre = conv2d(vis, stemVis);
        t.stemVisAct = relu(t.stemVisPre);
    }

    switch (cfg.modality) {
        case Modality::Both:
            t.alpha = alphaOverride ? *alphaOverride : compute_alpha(t.stemIrAct, t.stemVisAct);
            t.fused = fuse(t.stemIrAct, t.stemVisAct, t.alpha);
            break;
        case Modality::IrOnly:
            t.fused = t.stemIrAct;
            break;
        case Modality::VisOnly:
            t.fused = t.stemVisAct;
            break;
    }

    const FeatureMap* stage = &t.fused;
    if (cfg.enableCbam) {
        t.cbamTrace = cbam_forward(t.fused, cbam);
        t.cbamUsed = true;
        stage = &t.cbamTrace.output;
    }

    for (int i = 0; i < 3; ++i) {
        t.backbonePre[i] = conv2d(*stage, backbone[i]);
        t.backboneAct[i] = relu(t.backbonePre[i]);
        stage = &t.backboneAct[i];
    }

    t.logits = head_forward(t.backboneAct[2], head, cfg.numClasses);
    return t;
}

GridPrediction DetectorModel::forward(const FeatureMap& ir, const FeatureMap& vis) const {
    return forward_trace(ir, vis).logits;
}

GradientSet DetectorModel::backward(const ForwardTrace& t, const GridPrediction& dLogits) const {
    FeatureMap dHeadOut(5 + cfg.numClasses, t.logits.S, t.logits.S);
    dHeadOut.data = dLogits.data;

    ConvGrads headG = conv2d_backward(t.backboneAct[2], head, dHeadOut);

    FeatureMap dAct = std::move(headG.input);
    ConvGrads bkG[3];
    for (int i = 2; i >= 0; --i) {
        FeatureMap dPre = relu_backward(t.backbonePre[i], dAct);
        const FeatureMap& input =
            i == 0 ? (cfg.enableCbam ? t.cbamTrace.output : t.fused) : t.backboneAct[i - 1];
        bkG[i] = conv2d_backward(input, backbone[i], dPre);
        dAct = std::move(bkG[i].input);
    }

    CbamGrads cbamG;
    if (cfg.enableCbam) {
        cbamG = cbam_backward(t.fused, cbam, t.cbamTrace, dAct);
        dAct = std::move(cbamG.input);
    }

    ConvGrads stemIrG, stemVisG;
    if (cfg.modality == Modality::Both) {
        FuseGrads fg = fuse_backward(t.stemIrAct, t.stemVisAct, t.alpha, dAct);
        FeatureMap dIrPre = relu_backward(t.stemIrPre, fg.ir);
        stemIrG = conv2d_backward(*t.ir, stemIr, dIrPre);
        FeatureMap dVisPre = relu_backward(t.stemVisPre, fg.vis);
        stemVisG = conv2d_backward(*t.vis, stemVis, dVisPre);
    } else if (cfg.modality == Modality::IrOnly) {
        FeatureMap dIrPre = relu_backward(t.stemIrPre, dAct);
        stemIrG = conv2d_backward(*t.ir, stemIr, dIrPre);
    } else {
        FeatureMap dVisPre = relu_backward(t.stemVisPre, dAct);
        stemVisG = conv2d_backward(*t.vis, stemVis, dVisPre);
    }

    // assemble in the exact order of parameters()
    GradientSet g;
    auto push = [&g](const std::vector<double>& v) { g.push_back(v); };
    if (cfg.usesIr()) {
        push(stemIrG.params.weights);
        push(stemIrG.params.bias);
    }
    if (cfg.usesVis()) {
        push(stemVisG.params.weights);
        push(stemVisG.params.bias);
    }
    if (cfg.enableCbam) {
        push(cbamG.params.mlp.w1);
        push(cbamG.params.mlp.b1);
        push(cbamG.params.mlp.w2);
        push(cbamG.params.mlp.b2);
        push(cbamG.params.spatialKernel.weights);
        push(cbamG.params.spatialKernel.bias);
    }
    for (int i = 0; i < 3; ++i) {
        push(bkG[i].params.weights);
        push(bkG[i].params.bias);
    }
    push(headG.params.weights);
    push(headG.params.bias);
    return g;
}

namespace {

constexpr double kLogScaleClamp = 4.0;

struct DecodedCell {
    double cx, cy, w, h;
};

DecodedCell decode_cell(const GridPrediction& p, int i, int j) {
    const int s = p.S;
    DecodedCell d;
    d.cx = (j + sigmoid(p.at(0, i, j))) / s;
    d.cy = (i + sigmoid(p.at(1, i, j))) / s;
    d.w = std::exp(std::clamp(p.at(2, i, j), -kLogScaleClamp, kLogScaleClamp)) / s;
    d.h = std::exp(std::clamp(p.at(3, i, j), -kLogScaleClamp, kLogScaleClamp)) / s;
    return d;
}

std::vector<double> softmax(const GridPrediction& p, int i, int j) {
    std::vector<double> out(p.K);
    double mx = -std::numeric_limits<double>::infinity();
    for (int k = 0; k < p.K; ++k) mx = std::max(mx, p.at(5 + k, i, j));
    double sum = 0.0;
    for (int k = 0; k < p.K; ++k) {
        out[k] = std::exp(p.at(5 + k, i, j) - mx);
        sum += out[k];
    }
    for (auto& v : out) v /= sum;
    return out;
}

}  // namespace

std::vector<Detection> decode(const GridPrediction& pred, double confThresh) {
    if (confThresh < 0.0 || confThresh >= 1.0) throw DataError("decode: bad confidence threshold");
    std::vector<Detection> dets;
    for (int i = 0; i < pred.S; ++i) {
        for (int j = 0; j < pred.S; ++j) {
            const DecodedCell cell = decode_cell(pred, i, j);
            const auto probs = softmax(pred, i, j);
            int best = 0;
            for (int k = 1; k < pred.K; ++k)
                if (probs[k] > probs[best]) best = k;
            const double conf = sigmoid(pred.at(4, i, j)) * probs[best];
            if (conf >= confThresh)
                dets.push_back({cell.cx, cell.cy, cell.w, cell.h, conf, best});
        }
    }
    return dets;
}

namespace {

double logit(double p) { return std::log(p / (1.0 - p)); }

// cell containing the box center (upper cells claim the 1.0 boundary)
void center_cell(const GroundTruthBox& gt, int s, int* i, int* j) {
    *j = std::min(s - 1, static_cast<int>(gt.cx * s));
    *i = std::min(s - 1, static_cast<int>(gt.cy * s));
}

}  // namespace

void encode_box(GridPrediction& pred, const GroundTruthBox& gt) {
    int i, j;
    center_cell(gt, pred.S, &i, &j);
    pred.at(0, i, j) = logit(gt.cx * pred.S - j);
    pred.at(1, i, j) = logit(gt.cy * pred.S - i);
    pred.at(2, i, j) = std::log(gt.w * pred.S);
    pred.at(3, i, j) = std::log(gt.h * pred.S);
}

std::vector<Detection> nms(std::vector<Detection> dets, double iouThresh) {
    if (iouThresh <= 0.0 || iouThresh >= 1.0) throw DataError("nms: bad iou threshold");
    std::sort(dets.begin(), dets.end(), [](const Detection& a, const Detection& b) {
        if (a.confidence != b.confidence) return a.confidence > b.confidence;
        if (a.classId != b.classId) return a.classId < b.classId;
        if (a.cx != b.cx) return a.cx < b.cx;
        return a.cy < b.cy;
    });
    std::vector<Detection> kept;
    for (const auto& d : dets) {
        bool suppressed = false;
        for (const auto& k : kept) {
            if (k.classId != d.classId) continue;
            if (metrics::iou(k.box(), d.box()) > iouThresh) {
                suppressed = true;
                break;
            }
        }
        if (!suppressed) kept.push_back(d);
    }
    return kept;
}

namespace {

// numerically stable binary cross-entropy on a raw logit
double bce_logit(double logitV, double target) {
    return std::max(logitV, 0.0) - logitV * target + std::log1p(std::exp(-std::abs(logitV)));
}

void validate_gts(const std::vector<GroundTruthBox>& gts) {
    for (const auto& g : gts) {
        if (!(g.w > 0.0 && g.h > 0.0 && g.w <= 1.0 && g.h <= 1.0) || g.cx < 0.0 || g.cx > 1.0 ||
            g.cy < 0.0 || g.cy > 1.0)
            throw DataError("ground truth box outside [0,1]");
        if (g.classId < 0) throw DataError("negative class id");
    }
}

struct Assignment {
    // cell index (i * S + j) -> gt index for positives
    std::vector<int> cellToGt;  // -1 when background
    std::vector<std::pair<int, int>> positives;  // (cell index, gt index)
    int dropped = 0;
};

Assignment assign_targets(const std::vector<GroundTruthBox>& gts, int s) {
    Assignment a;
    a.cellToGt.assign(static_cast<size_t>(s) * s, -1);
    for (size_t g = 0; g < gts.size(); ++g) {
        int i, j;
        center_cell(gts[g], s, &i, &j);
        const int cell = i * s + j;
        if (a.cellToGt[cell] >= 0) {
            ++a.dropped;  // one ground truth per cell; excess dropped
            continue;
        }
        a.cellToGt[cell] = static_cast<int>(g);
        a.positives.emplace_back(cell, static_cast<int>(g));
    }
    return a;
}

// dIoU of box a w.r.t. (cx, cy, w, h) of a, against fixed box b.
// Zero everywhere when the boxes do not overlap.
std::array<double, 4> iou_gradient(const Box& a, const Box& b) {
    const double ax1 = a.cx - a.w / 2, ax2 = a.cx + a.w / 2;
    const double ay1 = a.cy - a.h / 2, ay2 = a.cy + a.h / 2;
    const double bx1 = b.cx - b.w / 2, bx2 = b.cx + b.w / 2;
    const double by1 = b.cy - b.h / 2, by2 = b.cy + b.h / 2;
    const double iw = std::min(ax2, bx2) - std::max(ax1, bx1);
    const double ih = std::min(ay2, by2) - std::max(ay1, by1);
    if (iw <= 0.0 || ih <= 0.0) return {0, 0, 0, 0};
    const double inter = iw * ih;
    const double areaA = a.w * a.h;
    const double u = areaA + b.w * b.h - inter;
    const double u2 = u * u;

    const double dIax1 = (ax1 > bx1) ? -ih : 0.0;
    const double dIax2 = (ax2 < bx2) ? ih : 0.0;
    const double dIay1 = (ay1 > by1) ? -iw : 0.0;
    const double dIay2 = (ay2 < by2) ? iw : 0.0;

    // d(I/U)/dtheta with U = areaA + areaB - I: through I the factor is
    // (U + I)/U^2; through areaA it is -I/U^2.
    const double throughI = (u + inter) / u2;
    const double dAdArea = -inter / u2;

    std::array<double, 4> g;
    g[0] = (dIax1 + dIax2) * throughI;                                // d/dcx
    g[1] = (dIay1 + dIay2) * throughI;                                // d/dcy
    g[2] = 0.5 * (dIax2 - dIax1) * throughI + dAdArea * a.h;          // d/dw
    g[3] = 0.5 * (dIay2 - dIay1) * throughI + dAdArea * a.w;          // d/dh
    return g;
}

}  // namespace

LossBreakdown total_loss(const GridPrediction& pred, const std::vector<GroundTruthBox>& gts,
                         const LossWeights& w, int* droppedOut) {
    validate_gts(gts);
    const int s = pred.S;
    const Assignment a = assign_targets(gts, s);
    if (droppedOut) *droppedOut = a.dropped;

    LossBreakdown out;

    // objectness BCE over every cell
    double conf = 0.0;
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j) {
            const double target = a.cellToGt[i * s + j] >= 0 ? 1.0 : 0.0;
            conf += bce_logit(pred.at(4, i, j), target);
        }
    out.conf = conf / pred.cells();

    // IoU loss and class cross-entropy over positive cells
    if (!a.positives.empty()) {
        double loc = 0.0, cls = 0.0;
        for (const auto& [cell, g] : a.positives) {
            const int i = cell / s, j = cell % s;
            const DecodedCell d = decode_cell(pred, i, j);
            loc += 1.0 - metrics::iou({d.cx, d.cy, d.w, d.h}, gts[g].box());

            if (gts[g].classId >= pred.K) throw DataError("class id exceeds model classes");
            double mx = -std::numeric_limits<double>::infinity();
            for (int k = 0; k < pred.K; ++k) mx = std::max(mx, pred.at(5 + k, i, j));
            double sum = 0.0;
            for (int k = 0; k < pred.K; ++k) sum += std::exp(pred.at(5 + k, i, j) - mx);
            cls += std::log(sum) + mx - pred.at(5 + gts[g].classId, i, j);
        }
        out.loc = loc / static_cast<double>(a.positives.size());
        out.cls = cls / static_cast<double>(a.positives.size());
    }

    out.total = w.loc * out.loc + w.conf * out.conf + w.cls * out.cls;
    return out;
}

GridPrediction loss_backward(const GridPrediction& pred, const std::vector<GroundTruthBox>& gts,
                             const LossWeights& w) {
    validate_gts(gts);
    const int s = pred.S;
    const Assignment a = assign_targets(gts, s);
    GridPrediction grad(s, pred.K);

    // objectness
    const double confScale = w.conf / pred.cells();
    for (int i = 0; i < s; ++i)
        for (int j = 0; j < s; ++j) {
            const double target = a.cellToGt[i * s + j] >= 0 ? 1.0 : 0.0;
            grad.at(4, i, j) = confScale * (sigmoid(pred.at(4, i, j)) - target);
        }

    if (!a.positives.empty()) {
        const double invPos = 1.0 / static_cast<double>(a.positives.size());
        for (const auto& [cell, g] : a.positives) {
            const int i = cell / s, j = cell % s;

            // localization through the decode transform
            const DecodedCell d = decode_cell(pred, i, j);
            const auto dIou = iou_gradient({d.cx, d.cy, d.w, d.h}, gts[g].box());
            const double sx = sigmoid(pred.at(0, i, j));
            const double sy = sigmoid(pred.at(1, i, j));
            const double locScale = -w.loc * invPos;  // loss term is (1 - IoU)
            grad.at(0, i, j) = locScale * dIou[0] * sx * (1.0 - sx) / s;
            grad.at(1, i, j) = locScale * dIou[1] * sy * (1.0 - sy) / s;
            // straight-through across the tw/th clamp: dw/dtw = w everywhere,
            // so a logit pushed past the clamp still feels a restoring force
            grad.at(2, i, j) = locScale * dIou[2] * d.w;
            grad.at(3, i, j) = locScale * dIou[3] * d.h;

            // classification
            const auto probs = softmax(pred, i, j);
            for (int k = 0; k < pred.K; ++k) {
                const double target = (k == gts[g].classId) ? 1.0 : 0.0;
                grad.at(5 + k, i, j) = w.cls * invPos * (probs[k] - target);
            }
        }
    }
    return grad;
}

void sgd_step(std::vector<double>& params, const std::vector<double>& grads, double lr,
              double momentum, std::vector<double>& velocity) {
    if (params.size() != grads.size() || params.size() != velocity.size())
        throw DimensionError("sgd_step: size mismatch");
    if (lr < 0.0) throw DataError("sgd_step: negative learning rate");
    for (size_t i = 0; i < params.size(); ++i) {
        if (!std::isfinite(grads[i])) throw DataError("sgd_step: non-finite gradient");
        velocity[i] = momentum * velocity[i] + grads[i];
        params[i] -= lr * velocity[i];
    }
}

namespace {

double cosine_lr(double lr0, int epoch, int epochs) {
    const double lrMin = lr0 / 100.0;
    if (epochs <= 1) return lr0;
    const double t = static_cast<double>(epoch) / (epochs - 1);
    return lrMin + 0.5 * (lr0 - lrMin) * (1.0 + std::cos(3.141592653589793238462643383279502884 * t));
}

}  // namespace

TrainResult train(const Dataset& data, const ModelConfig& mcfg, const TrainConfig& tcfg,
                  const StepObserver& observer) {
    if (data.empty()) throw DataError("train: empty dataset");
    if (tcfg.epochs <= 0 || tcfg.batchSize <= 0) throw DataError("train: bad config");

    Rng rng(tcfg.seed);
    TrainResult result;
    result.model = DetectorModel::init(mcfg, rng);

    auto params = result.model.parameters();
    std::vector<std::vector<double>> velocity;
    velocity.reserve(params.size());
    for (const auto& p : params) velocity.emplace_back(p.data->size(), 0.0);

    const int n = static_cast<int>(data.size());
    std::vector<int> order(n);
    for (int i = 0; i < n; ++i) order[i] = i;

    for (int epoch = 0; epoch < tcfg.epochs; ++epoch) {
        const double lr = cosine_lr(tcfg.lr0, epoch, tcfg.epochs);

        // Fisher-Yates on the shared stream
        for (int i = n - 1; i > 0; --i) std::swap(order[i], order[rng.uniform_int(i + 1)]);

        LossBreakdown epochSum;
        int batchIndex = 0;
        for (int start = 0; start < n; start += tcfg.batchSize, ++batchIndex) {
            const int end = std::min(n, start + tcfg.batchSize);
            const int count = end - start;

            GradientSet accum;
            LossBreakdown batchSum;
            for (int bi = start; bi < end; ++bi) {
                const TrainSample& sample = data[order[bi]];
                ForwardTrace trace = result.model.forward_trace(sample.ir, sample.vis);

                int dropped = 0;
                const LossBreakdown lb =
                    total_loss(trace.logits, sample.boxes, tcfg.lossWeights, &dropped);
                result.droppedGts += dropped;
                if (!std::isfinite(lb.total))
                    throw DivergenceError("train: non-finite loss", epoch, batchIndex);
                batchSum.loc += lb.loc;
                batchSum.conf += lb.conf;
                batchSum.cls += lb.cls;

                const GridPrediction dLogits =
                    loss_backward(trace.logits, sample.boxes, tcfg.lossWeights);
                GradientSet g = result.model.backward(trace, dLogits);
                if (accum.empty()) {
                    accum = std::move(g);
                } else {
                    for (size_t k = 0; k < accum.size(); ++k)
                        for (size_t v = 0; v < accum[k].size(); ++v) accum[k][v] += g[k][v];
                }
            }

            const double invCount = 1.0 / count;
            for (auto& block : accum)
                for (auto& v : block) v *= invCount;

            if (tcfg.clipNorm > 0.0) {
                double sq = 0.0;
                for (const auto& block : accum)
                    for (double v : block) sq += v * v;
                const double norm = std::sqrt(sq);
                if (norm > tcfg.clipNorm) {
                    const double scale = tcfg.clipNorm / norm;
                    for (auto& block : accum)
                        for (auto& v : block) v *= scale;
                }
            }

            LossBreakdown batchMean;
            batchMean.loc = batchSum.loc * invCount;
            batchMean.conf = batchSum.conf * invCount;
            batchMean.cls = batchSum.cls * invCount;
            batchMean.total = tcfg.lossWeights.loc * batchMean.loc +
                              tcfg.lossWeights.conf * batchMean.conf +
                              tcfg.lossWeights.cls * batchMean.cls;
            if (observer) observer(epoch, batchIndex, batchMean);

            epochSum.loc += batchSum.loc;
            epochSum.conf += batchSum.conf;
            epochSum.cls += batchSum.cls;

            try {
                for (size_t k = 0; k < params.size(); ++k)
                    sgd_step(*params[k].data, accum[k], lr, tcfg.momentum, velocity[k]);
            } catch (const DataError& e) {
                throw DivergenceError(e.what(), epoch, batchIndex);
            }
        }

        EpochStats stats;
        stats.epoch = epoch;
        stats.lr = lr;
        stats.mean.loc = epochSum.loc / n;
        stats.mean.conf = epochSum.conf / n;
        stats.mean.cls = epochSum.cls / n;
        stats.mean.total = tcfg.lossWeights.loc * stats.mean.loc +
                           tcfg.lossWeights.conf * stats.mean.conf +
                           tcfg.lossWeights.cls * stats.mean.cls;
        result.log.push_back(stats);
    }
    return result;
}

std::vector<Detection> run_inference(const DetectorModel& model, const FeatureMap& ir,
                                     const FeatureMap& vis, double confThresh, double nmsIou) {
    const GridPrediction pred = model.forward(ir, vis);
    return nms(decode(pred, confThresh), nmsIou);
}

}  // namespace fusedet
