#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rnnt/model.h"

namespace rnnt {

// Binary feature file: a fixed header {feature_dim, frame_shift_ms, n_frames}
// followed by the row-major frame matrix as little-endian float64.
struct FeatureFile {
  int32_t feature_dim = 0;
  int64_t frame_shift_ms = 10;
  std::vector<AudioFrame> frames;
};

void save_features(const FeatureFile& file, const std::string& path);
FeatureFile load_features(const std::string& path);

}  // namespace rnnt
