#include "fusedet/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>

#include "fusedet/checkpoint.hpp"
#include "fusedet/metrics.hpp"

namespace fusedet {
namespace cli {

namespace fs = std::filesystem;

std::string index_name(const std::string& prefix, int index, const std::string& ext) {
    std::ostringstream os;
    os << prefix << "_" << std::setw(4) << std::setfill('0') << index << ext;
    return os.str();
}

std::vector<int> list_indices(const std::string& dir, const std::string& prefix,
                              const std::string& ext) {
    std::vector<int> indices;
    if (!fs::is_directory(dir)) return indices;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string name = entry.path().filename().string();
        const std::string head = prefix + "_";
        if (name.size() != head.size() + 4 + ext.size()) continue;
        if (name.compare(0, head.size(), head) != 0) continue;
        if (name.compare(name.size() - ext.size(), ext.size(), ext) != 0) continue;
        const std::string digits = name.substr(head.size(), 4);
        if (!std::all_of(digits.begin(), digits.end(), [](char c) { return std::isdigit(c); }))
            continue;
        indices.push_back(std::stoi(digits));
    }
    std::sort(indices.begin(), indices.end());
    return indices;
}

namespace {

void ensure_dir(const std::string& dir) {
    if (dir.empty()) throw DataError("output directory not set");
    fs::create_directories(dir);
}

std::string join(const std::string& dir, const std::string& name) {
    return (fs::path(dir) / name).string();
}

std::ofstream open_text(const std::string& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path);
    out << std::setprecision(17);
    return out;
}

}  // namespace

int cmd_synth(const PipelineConfig& cfg, int count, std::ostream& log) {
    if (count < 0) throw DataError("synth: negative count");
    ensure_dir(cfg.outDir);
    SyntheticSceneSpec spec = cfg.synth;
    spec.seed = cfg.seed;
    for (int i = 0; i < count; ++i) {
        const SyntheticScene scene = generate_scene(spec, static_cast<uint64_t>(i));
        write_pgm(join(cfg.outDir, index_name("ir", i, ".pgm")), scene.ir);
        write_pgm(join(cfg.outDir, index_name("vis", i, ".pgm")), scene.vis);
        write_labels(join(cfg.outDir, index_name("labels", i, ".txt")), scene.boxes);
        write_homography(join(cfg.outDir, index_name("hom", i, ".txt")), scene.visToIr);
    }
    log << "synth: wrote " << count << " scene(s) to " << cfg.outDir << "\n";
    return kExitOk;
}

int cmd_register(const PipelineConfig& cfg, std::ostream& log) {
    const auto irIdx = list_indices(cfg.irDir, "ir", ".pgm");
    const auto visIdx = list_indices(cfg.visDir, "vis", ".pgm");
    std::vector<int> indices;
    std::set_intersection(irIdx.begin(), irIdx.end(), visIdx.begin(), visIdx.end(),
                          std::back_inserter(indices));
    if (indices.empty()) throw DataError("register: no (ir, vis) pairs found");
    ensure_dir(cfg.outDir);

    RegistrationConfig reg = cfg.reg;
    reg.seed = cfg.seed;

    auto report = open_text(join(cfg.outDir, "report.csv"));
    report << "index,status,keypoints_vis,keypoints_ir,matches,inliers,rms,corner_error\n";

    int failures = 0;
    for (int i : indices) {
        const GrayImage ir = read_pgm(join(cfg.irDir, index_name("ir", i, ".pgm")));
        const GrayImage vis = read_pgm(join(cfg.visDir, index_name("vis", i, ".pgm")));
        try {
            const RegistrationResult result = register_pair(vis, ir, reg);
            write_pgm(join(cfg.outDir, index_name("vis", i, ".pgm")), result.warpedVis);
            write_homography(join(cfg.outDir, index_name("hom_est", i, ".txt")), result.H);

            std::string cornerErr;
            const std::string gtPath = join(cfg.irDir, index_name("hom", i, ".txt"));
            if (fs::exists(gtPath)) {
                const Homography gt = read_homography(gtPath);
                std::ostringstream os;
                os << std::setprecision(17)
                   << corner_transfer_error(result.H, gt, ir.height, ir.width);
                cornerErr = os.str();
            }
            report << i << ",ok," << result.report.keypointsVis << ","
                   << result.report.keypointsIr << "," << result.report.matches << ","
                   << result.report.inliers << "," << result.report.rmsError << "," << cornerErr
                   << "\n";
        } catch (const RegistrationError& e) {
            ++failures;
            report << i << ",failed:" << to_string(e.stage) << ",,,,,,\n";
        }
    }
    log << "register: " << indices.size() - failures << "/" << indices.size()
        << " pairs registered, report at " << join(cfg.outDir, "report.csv") << "\n";
    return kExitOk;
}

namespace {

Dataset load_dataset(const PipelineConfig& cfg) {
    const bool needIr = cfg.model.usesIr();
    const bool needVis = cfg.model.usesVis();
    if (needIr && cfg.irDir.empty()) throw DataError("dataset: ir_dir not set");
    if (needVis && cfg.visDir.empty()) throw DataError("dataset: vis_dir not set");
    if (cfg.labelsDir.empty()) throw DataError("dataset: labels_dir not set");

    std::vector<int> indices = needIr ? list_indices(cfg.irDir, "ir", ".pgm")
                                      : list_indices(cfg.visDir, "vis", ".pgm");
    if (needIr && needVis) {
        const auto visIdx = list_indices(cfg.visDir, "vis", ".pgm");
        std::vector<int> both;
        std::set_intersection(indices.begin(), indices.end(), visIdx.begin(), visIdx.end(),
                              std::back_inserter(both));
        indices = std::move(both);
    }

    Dataset data;
    for (int i : indices) {
        const std::string labelPath = join(cfg.labelsDir, index_name("labels", i, ".txt"));
        if (!fs::exists(labelPath)) continue;
        TrainSample sample;
        if (needIr)
            sample.ir = standardized_feature_map(read_pgm(join(cfg.irDir, index_name("ir", i, ".pgm"))));
        if (needVis)
            sample.vis = standardized_feature_map(read_pgm(join(cfg.visDir, index_name("vis", i, ".pgm"))));
        sample.boxes = read_labels(labelPath);
        data.push_back(std::move(sample));
    }
    if (data.empty()) throw DataError("dataset: no usable samples");
    return data;
}

}  // namespace

int cmd_train(const PipelineConfig& cfg, std::ostream& log) {
    ensure_dir(cfg.outDir);
    TrainConfig tcfg = cfg.train;
    tcfg.seed = cfg.seed;

    const Dataset data = load_dataset(cfg);
    log << "train: " << data.size() << " samples, " << tcfg.epochs << " epochs\n";

    const TrainResult result = train(data, cfg.model, tcfg);

    auto lossLog = open_text(join(cfg.outDir, "loss_log.csv"));
    lossLog << "epoch,lr,loss_total,loss_loc,loss_conf,loss_cls\n";
    for (const auto& e : result.log)
        lossLog << e.epoch << "," << e.lr << "," << e.mean.total << "," << e.mean.loc << ","
                << e.mean.conf << "," << e.mean.cls << "\n";

    save_checkpoint(join(cfg.outDir, "checkpoint.fdet"), result.model);
    if (result.droppedGts > 0)
        log << "train: warning: " << result.droppedGts
            << " ground-truth box(es) dropped (one per cell)\n";
    log << "train: final mean loss " << result.log.back().mean.total << ", checkpoint at "
        << join(cfg.outDir, "checkpoint.fdet") << "\n";
    return kExitOk;
}

namespace {

metrics::EvalSet run_eval(const DetectorModel& model, const PipelineConfig& cfg) {
    PipelineConfig dataCfg = cfg;
    dataCfg.model = model.cfg;  // dataset needs match the checkpoint's modality
    const Dataset data = load_dataset(dataCfg);

    metrics::EvalSet set;
    for (const auto& sample : data) {
        set.detections.push_back(
            run_inference(model, sample.ir, sample.vis, cfg.evalConfThresh, cfg.nmsIou));
        set.groundTruth.push_back(sample.boxes);
    }
    return set;
}

}  // namespace

int cmd_eval(const PipelineConfig& cfg, const std::string& checkpointPath, std::ostream& log) {
    ensure_dir(cfg.outDir);
    const DetectorModel model = load_checkpoint(checkpointPath);
    const metrics::EvalSet set = run_eval(model, cfg);

    const int numClasses = model.cfg.numClasses;
    std::vector<double> perClassAp(numClasses, std::nan(""));
    for (int c = 0; c < numClasses; ++c) {
        const auto curve = metrics::pr_curve(set, c, 0.5);
        if (!curve) continue;
        perClassAp[c] = metrics::average_precision(*curve);
        metrics::write_pr_csv(join(cfg.outDir, "pr_" + std::to_string(c) + ".csv"), *curve);
    }
    const double mapValue = metrics::map_at_50(set, numClasses);
    const metrics::F1Curve f1 = metrics::f1_curve(set, numClasses, 0.5);
    metrics::write_f1_csv(join(cfg.outDir, "f1.csv"), f1);
    metrics::write_summary_csv(join(cfg.outDir, "summary.csv"), perClassAp, mapValue, f1);

    log << std::setprecision(3) << "mAP@0.5: " << mapValue << "\n";
    log << "F1 curve (peak)/Confidence: " << f1.peakF1 << " / " << f1.peakConfidence << "\n";
    return kExitOk;
}

namespace {

void draw_box(GrayImage& img, const Detection& d) {
    const int x0 = std::clamp(static_cast<int>(std::lround((d.cx - d.w / 2) * img.width)), 0,
                              img.width - 1);
    const int x1 = std::clamp(static_cast<int>(std::lround((d.cx + d.w / 2) * img.width)), 0,
                              img.width - 1);
    const int y0 = std::clamp(static_cast<int>(std::lround((d.cy - d.h / 2) * img.height)), 0,
                              img.height - 1);
    const int y1 = std::clamp(static_cast<int>(std::lround((d.cy + d.h / 2) * img.height)), 0,
                              img.height - 1);
    for (int x = x0; x <= x1; ++x) {
        img.at(y0, x) = 1.0;
        img.at(y1, x) = 1.0;
    }
    for (int y = y0; y <= y1; ++y) {
        img.at(y, x0) = 1.0;
        img.at(y, x1) = 1.0;
    }
}

}  // namespace

int cmd_detect(const PipelineConfig& cfg, const std::string& checkpointPath,
               const std::string& irPath, const std::string& visPath,
               const std::string& annotatePath, std::ostream& log) {
    const DetectorModel model = load_checkpoint(checkpointPath);
    GrayImage ir;
    if (!irPath.empty()) ir = read_pgm(irPath);

    FeatureMap irMap, visMap;
    if (model.cfg.usesIr()) {
        if (irPath.empty()) throw DataError("detect: checkpoint needs an IR image");
        irMap = standardized_feature_map(ir);
    }

    if (model.cfg.usesVis()) {
        if (visPath.empty() && model.cfg.modality == Modality::VisOnly)
            throw DataError("detect: checkpoint needs a VIS image");
        if (visPath.empty()) {
            // dual-modality checkpoint run IR-only: zero VIS features push the
            // fusion weight to alpha = 1
            log << "warning: no VIS image; running degraded IR-only\n";
            visMap = FeatureMap(1, ir.height, ir.width);
        } else {
            const GrayImage vis = read_pgm(visPath);
            if (model.cfg.modality == Modality::VisOnly) {
                visMap = standardized_feature_map(vis);
            } else {
                RegistrationConfig reg = cfg.reg;
                reg.seed = cfg.seed;
                try {
                    const RegistrationResult r = register_pair(vis, ir, reg);
                    visMap = standardized_feature_map(r.warpedVis);
                } catch (const RegistrationError& e) {
                    log << "warning: registration failed (" << e.what()
                        << "); running degraded IR-only\n";
                    visMap = FeatureMap(1, ir.height, ir.width);
                }
            }
        }
    }

    const auto dets = run_inference(model, irMap, visMap, cfg.detectConfThresh, cfg.nmsIou);
    log << std::setprecision(17);
    for (const auto& d : dets)
        log << d.classId << " " << d.confidence << " " << d.cx << " " << d.cy << " " << d.w << " "
            << d.h << "\n";

    if (!annotatePath.empty()) {
        GrayImage annotated = model.cfg.usesIr() ? ir : read_pgm(visPath);
        for (const auto& d : dets) draw_box(annotated, d);
        write_pgm(annotatePath, annotated);
    }
    return kExitOk;
}

}  // namespace cli
}  // namespace fusedet
