#pragma once

#include <string>

#include "fusedet/detector.hpp"

namespace fusedet {

// Versioned binary checkpoint. Layout:
//   magic "FDET", format version u32 LE, then named parameter blocks until
//   EOF. Each block: name length u32 LE, name bytes, shape rank u32 LE,
//   dims u32 LE each, then f64 LE data.
// Architecture/toggle settings travel as scalar "meta/..." blocks so a
// checkpoint is self-describing.
void save_checkpoint(const std::string& path, const DetectorModel& model);
DetectorModel load_checkpoint(const std::string& path);

}  // namespace fusedet
