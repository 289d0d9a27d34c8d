#include <CLI11.hpp>
#include <iostream>

#include "fusedet/pipeline.hpp"

namespace {

struct GlobalFlags {
    std::string configPath;
    std::string outDir;
    uint64_t seed = 0;
    bool seedSet = false;
    bool noCbam = false;
    bool noFusion = false;
    bool irOnly = false;
    bool visOnly = false;
};

fusedet::PipelineConfig build_config(const GlobalFlags& g) {
    fusedet::PipelineConfig cfg;
    if (!g.configPath.empty()) cfg = fusedet::load_config(g.configPath);
    if (g.seedSet) cfg.seed = g.seed;
    if (!g.outDir.empty()) cfg.outDir = g.outDir;
    if (g.noCbam) cfg.model.enableCbam = false;
    if (g.noFusion) cfg.model.enableFusion = false;
    if (g.irOnly && g.visOnly) throw fusedet::DataError("--ir-only and --vis-only conflict");
    if (g.irOnly) cfg.model.modality = fusedet::Modality::IrOnly;
    if (g.visOnly) cfg.model.modality = fusedet::Modality::VisOnly;
    cfg.fan_out_seed();
    return cfg;
}

void add_global_flags(CLI::App* cmd, GlobalFlags& g) {
    cmd->add_option("--config", g.configPath, "key=value configuration file");
    cmd->add_option("--out", g.outDir, "output directory");
    cmd->add_option("--seed", g.seed, "explicit RNG seed")->each([&g](const std::string&) {
        g.seedSet = true;
    });
    cmd->add_flag("--no-cbam", g.noCbam, "disable the CBAM block");
    cmd->add_flag("--no-fusion", g.noFusion, "disable IR/VIS fusion");
    cmd->add_flag("--ir-only", g.irOnly, "use the infrared modality only");
    cmd->add_flag("--vis-only", g.visOnly, "use the visible modality only");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fusedet: infrared/visible fusion small-target detection pipeline"};
    app.require_subcommand(1);

    GlobalFlags g;

    int synthCount = 10;
    auto* synth = app.add_subcommand("synth", "generate a synthetic IR/VIS dataset");
    add_global_flags(synth, g);
    synth->add_option("-n,--count", synthCount, "number of scenes");

    std::string irDir, visDir, labelsDir;
    auto* reg = app.add_subcommand("register", "register visible frames onto infrared frames");
    add_global_flags(reg, g);
    reg->add_option("--ir-dir", irDir, "directory with ir_XXXX.pgm");
    reg->add_option("--vis-dir", visDir, "directory with vis_XXXX.pgm");

    auto* trainCmd = app.add_subcommand("train", "train the detector");
    add_global_flags(trainCmd, g);
    trainCmd->add_option("--ir-dir", irDir, "directory with ir_XXXX.pgm");
    trainCmd->add_option("--vis-dir", visDir, "directory with registered vis_XXXX.pgm");
    trainCmd->add_option("--labels-dir", labelsDir, "directory with labels_XXXX.txt");

    std::string checkpoint;
    auto* evalCmd = app.add_subcommand("eval", "evaluate a checkpoint on a dataset");
    add_global_flags(evalCmd, g);
    evalCmd->add_option("checkpoint", checkpoint, "checkpoint file")->required();
    evalCmd->add_option("--ir-dir", irDir, "directory with ir_XXXX.pgm");
    evalCmd->add_option("--vis-dir", visDir, "directory with registered vis_XXXX.pgm");
    evalCmd->add_option("--labels-dir", labelsDir, "directory with labels_XXXX.txt");

    std::string irImage, visImage, annotate;
    auto* detect = app.add_subcommand("detect", "detect targets in one IR/VIS pair");
    add_global_flags(detect, g);
    detect->add_option("checkpoint", checkpoint, "checkpoint file")->required();
    detect->add_option("--ir", irImage, "infrared image (PGM)");
    detect->add_option("--vis", visImage, "visible image (PGM)");
    detect->add_option("--annotate", annotate, "write an annotated PGM here");

    CLI11_PARSE(app, argc, argv);

    try {
        fusedet::PipelineConfig cfg = build_config(g);
        if (!irDir.empty()) cfg.irDir = irDir;
        if (!visDir.empty()) cfg.visDir = visDir;
        if (!labelsDir.empty()) cfg.labelsDir = labelsDir;

        if (synth->parsed()) return fusedet::cli::cmd_synth(cfg, synthCount, std::cout);
        if (reg->parsed()) return fusedet::cli::cmd_register(cfg, std::cout);
        if (trainCmd->parsed()) return fusedet::cli::cmd_train(cfg, std::cout);
        if (evalCmd->parsed()) return fusedet::cli::cmd_eval(cfg, checkpoint, std::cout);
        if (detect->parsed())
            return fusedet::cli::cmd_detect(cfg, checkpoint, irImage, visImage, annotate,
                                            std::cout);
    } catch (const fusedet::DivergenceError& e) {
        std::cerr << "error: " << e.what() << " (epoch " << e.epoch << ", batch " << e.batch
                  << ")\n";
        return fusedet::cli::kExitDivergence;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return fusedet::cli::kExitData;
    }
    return fusedet::cli::kExitUsage;
}
