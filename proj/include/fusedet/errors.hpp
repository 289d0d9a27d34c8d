#pragma once

#include <stdexcept>
#include <string>

namespace fusedet {

// Incompatible shapes or an empty extent where a nonempty one is required.
struct DimensionError : std::runtime_error {
    explicit DimensionError(const std::string& msg) : std::runtime_error(msg) {}
};

// Point configuration too degenerate to constrain a homography.
struct DegeneracyError : std::runtime_error {
    explicit DegeneracyError(const std::string& msg) : std::runtime_error(msg) {}
};

// A projective map sent a point to (or too close to) the plane at infinity,
// or a matrix that must be invertible is not.
struct SingularityError : std::runtime_error {
    explicit SingularityError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or out-of-range input data (files, labels, boxes).
struct DataError : std::runtime_error {
    explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training produced a non-finite loss.
struct DivergenceError : std::runtime_error {
    DivergenceError(const std::string& msg, int epoch_, int batch_)
        : std::runtime_error(msg), epoch(epoch_), batch(batch_) {}
    int epoch = -1;
    int batch = -1;
};

enum class RegistrationStage { Detection, Description, Matching, Ransac, Refinement, Warp };

inline const char* to_string(RegistrationStage s) {
    switch (s) {
        case RegistrationStage::Detection: return "detection";
        case RegistrationStage::Description: return "description";
        case RegistrationStage::Matching: return "matching";
        case RegistrationStage::Ransac: return "ransac";
        case RegistrationStage::Refinement: return "refinement";
        case RegistrationStage::Warp: return "warp";
    }
    return "unknown";
}

// Registration pipeline failure; carries the stage that failed.
struct RegistrationError : std::runtime_error {
    RegistrationError(RegistrationStage stage_, const std::string& msg)
        : std::runtime_error(std::string(to_string(stage_)) + ": " + msg), stage(stage_) {}
    RegistrationStage stage;
};

// Gradient check could not be evaluated (non-finite forward output).
struct CheckFailure : std::runtime_error {
    explicit CheckFailure(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace fusedet
