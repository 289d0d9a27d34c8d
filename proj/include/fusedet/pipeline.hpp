#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "fusedet/config.hpp"

namespace fusedet {
namespace cli {

// Exit codes shared by every command.
constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;
constexpr int kExitDivergence = 3;

// Writes count scenes: ir_XXXX.pgm, vis_XXXX.pgm (unaligned), labels_XXXX.txt
// and the ground-truth homography hom_XXXX.txt.
int cmd_synth(const PipelineConfig& cfg, int count, std::ostream& log);

// Registers every (ir, vis) pair found in the input dirs: writes the warped
// vis_XXXX.pgm and hom_est_XXXX.txt into outDir plus a report.csv. Per-pair
// failures are recorded in the report, not fatal. When the IR dir carries
// hom_XXXX.txt ground truth, the report includes the corner-transfer error.
int cmd_register(const PipelineConfig& cfg, std::ostream& log);

// Trains per the config toggles; writes checkpoint.fdet and loss_log.csv.
int cmd_train(const PipelineConfig& cfg, std::ostream& log);

// Runs inference + metrics; writes summary.csv, pr_<class>.csv, f1.csv and
// prints the mAP@0.5 and F1 peak/confidence lines.
int cmd_eval(const PipelineConfig& cfg, const std::string& checkpointPath, std::ostream& log);

// Single-pair detection: register, fuse, attend, detect, suppress; prints one
// line per detection. Registration failure degrades to IR-only with a
// warning. Optionally writes an annotated PGM.
int cmd_detect(const PipelineConfig& cfg, const std::string& checkpointPath,
               const std::string& irPath, const std::string& visPath,
               const std::string& annotatePath, std::ostream& log);

// Zero-padded 4-digit dataset index helpers shared by the commands.
std::string index_name(const std::string& prefix, int index, const std::string& ext);
std::vector<int> list_indices(const std::string& dir, const std::string& prefix,
                              const std::string& ext);

}  // namespace cli
}  // namespace fusedet
