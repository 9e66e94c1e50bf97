#include "rnnt/feature_file.h"

#include <bit>
#include <cstring>
#include <fstream>

#include "rnnt/types.h"

static_assert(std::endian::native == std::endian::little,
              "feature files are little-endian; big-endian hosts are unsupported");

namespace rnnt {
namespace {

constexpr char kMagic[4] = {'R', 'N', 'T', 'F'};
constexpr uint32_t kVersion = 1;

template <typename T>
void write_pod(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T read_pod(std::ifstream& in, const std::string& path) {
  T value;
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  if (!in) throw IoError("truncated feature file: " + path);
  return value;
}

}  // namespace

void save_features(const FeatureFile& file, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open for writing: " + path);
  out.write(kMagic, 4);
  write_pod<uint32_t>(out, kVersion);
  write_pod<uint32_t>(out, static_cast<uint32_t>(file.feature_dim));
  write_pod<uint32_t>(out, static_cast<uint32_t>(file.frame_shift_ms));
  write_pod<uint64_t>(out, file.frames.size());
  for (const auto& frame : file.frames) {
    if (static_cast<int32_t>(frame.features.size()) != file.feature_dim) {
      throw IoError("frame width does not match header feature_dim");
    }
    out.write(reinterpret_cast<const char*>(frame.features.data()),
              static_cast<std::streamsize>(frame.features.size() * sizeof(double)));
  }
  if (!out) throw IoError("write failed: " + path);
}

FeatureFile load_features(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open feature file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMagic, 4) != 0) {
    throw IoError("not a feature file (bad magic): " + path);
  }
  const auto version = read_pod<uint32_t>(in, path);
  if (version != kVersion) {
    throw IoError("unsupported feature file version " + std::to_string(version) + ": " + path);
  }
  FeatureFile file;
  file.feature_dim = static_cast<int32_t>(read_pod<uint32_t>(in, path));
  file.frame_shift_ms = static_cast<int64_t>(read_pod<uint32_t>(in, path));
  const auto n_frames = read_pod<uint64_t>(in, path);
  if (file.feature_dim < 0) throw IoError("invalid feature_dim: " + path);

  file.frames.reserve(n_frames);
  for (uint64_t i = 0; i < n_frames; ++i) {
    AudioFrame frame;
    frame.timestamp_ms = static_cast<int64_t>(i) * file.frame_shift_ms;
    frame.features.resize(file.feature_dim);
    in.read(reinterpret_cast<char*>(frame.features.data()),
            static_cast<std::streamsize>(frame.features.size() * sizeof(double)));
    if (!in) throw IoError("truncated feature file: " + path);
    file.frames.push_back(std::move(frame));
  }
  return file;
}

}  // namespace rnnt
