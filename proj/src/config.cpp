#include "fusedet/config.hpp"

#include <fstream>
#include <sstream>

namespace fusedet {

namespace {

bool parse_bool(const std::string& v) {
    if (v == "1" || v == "true" || v == "on" || v == "yes") return true;
    if (v == "0" || v == "false" || v == "off" || v == "no") return false;
    throw DataError("config: bad boolean value '" + v + "'");
}

int parse_int(const std::string& v) {
    try {
        size_t pos = 0;
        const int out = std::stoi(v, &pos);
        if (pos == v.size()) return out;
    } catch (const std::exception&) {
    }
    throw DataError("config: bad integer value '" + v + "'");
}

double parse_double(const std::string& v) {
    try {
        size_t pos = 0;
        const double out = std::stod(v, &pos);
        if (pos == v.size()) return out;
    } catch (const std::exception&) {
    }
    throw DataError("config: bad numeric value '" + v + "'");
}

uint64_t parse_u64(const std::string& v) {
    try {
        size_t pos = 0;
        const unsigned long long out = std::stoull(v, &pos);
        if (pos == v.size()) return out;
    } catch (const std::exception&) {
    }
    throw DataError("config: bad seed value '" + v + "'");
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

void apply_config_entry(PipelineConfig& cfg, const std::string& key, const std::string& value) {
    if (key == "seed") {
        cfg.seed = parse_u64(value);
    } else if (key == "ir_dir") {
        cfg.irDir = value;
    } else if (key == "vis_dir") {
        cfg.visDir = value;
    } else if (key == "labels_dir") {
        cfg.labelsDir = value;
    } else if (key == "out_dir") {
        cfg.outDir = value;
    } else if (key == "epochs") {
        cfg.train.epochs = parse_int(value);
    } else if (key == "batch_size") {
        cfg.train.batchSize = parse_int(value);
    } else if (key == "image_size") {
        cfg.train.imageSize = parse_int(value);
        cfg.synth.imageSize = cfg.train.imageSize;
    } else if (key == "lr0") {
        cfg.train.lr0 = parse_double(value);
    } else if (key == "momentum") {
        cfg.train.momentum = parse_double(value);
    } else if (key == "lambda_loc") {
        cfg.train.lossWeights.loc = parse_double(value);
    } else if (key == "lambda_conf") {
        cfg.train.lossWeights.conf = parse_double(value);
    } else if (key == "lambda_cls") {
        cfg.train.lossWeights.cls = parse_double(value);
    } else if (key == "num_classes") {
        cfg.model.numClasses = parse_int(value);
    } else if (key == "stem_channels") {
        cfg.model.stemChannels = parse_int(value);
    } else if (key == "backbone_channels") {
        cfg.model.backboneChannels = parse_int(value);
    } else if (key == "mlp_reduction") {
        cfg.model.mlpReduction = parse_int(value);
    } else if (key == "enable_cbam") {
        cfg.model.enableCbam = parse_bool(value);
    } else if (key == "enable_fusion") {
        cfg.model.enableFusion = parse_bool(value);
    } else if (key == "modality") {
        if (value == "both")
            cfg.model.modality = Modality::Both;
        else if (value == "ir")
            cfg.model.modality = Modality::IrOnly;
        else if (value == "vis")
            cfg.model.modality = Modality::VisOnly;
        else
            throw DataError("config: modality must be both|ir|vis");
    } else if (key == "max_keypoints") {
        cfg.reg.maxKeypoints = parse_int(value);
    } else if (key == "match_ratio") {
        cfg.reg.matchRatio = parse_double(value);
    } else if (key == "ransac_thresh") {
        cfg.reg.ransacThreshPx = parse_double(value);
    } else if (key == "ransac_iters") {
        cfg.reg.ransacIters = parse_int(value);
    } else if (key == "synth_blobs_min") {
        cfg.synth.minBlobs = parse_int(value);
    } else if (key == "synth_blobs_max") {
        cfg.synth.maxBlobs = parse_int(value);
    } else if (key == "synth_radius_min") {
        cfg.synth.minRadius = parse_double(value);
    } else if (key == "synth_radius_max") {
        cfg.synth.maxRadius = parse_double(value);
    } else if (key == "synth_corner_shift") {
        cfg.synth.maxCornerShift = parse_double(value);
    } else if (key == "synth_noise_sigma") {
        cfg.synth.noiseSigma = parse_double(value);
    } else if (key == "synth_ir_flares") {
        cfg.synth.maxIrFlares = parse_int(value);
    } else if (key == "synth_vis_stains") {
        cfg.synth.maxVisStains = parse_int(value);
    } else if (key == "synth_landmarks") {
        cfg.synth.landmarkCount = parse_int(value);
    } else if (key == "conf_thresh") {
        cfg.detectConfThresh = parse_double(value);
    } else if (key == "eval_conf_thresh") {
        cfg.evalConfThresh = parse_double(value);
    } else if (key == "nms_iou") {
        cfg.nmsIou = parse_double(value);
    } else {
        throw DataError("config: unknown key '" + key + "'");
    }
}

PipelineConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("config: cannot open " + path);
    PipelineConfig cfg;
    std::string line;
    int lineNo = 0;
    while (std::getline(in, line)) {
        ++lineNo;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw DataError("config: missing '=' at " + path + ":" + std::to_string(lineNo));
        apply_config_entry(cfg, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    }
    cfg.fan_out_seed();
    return cfg;
}

}  // namespace fusedet
