#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace shsnet {

/// FNV-1a 64-bit content hash (not cryptographic; identifies outputs).
[[nodiscard]] std::uint64_t fnv1a64_file(const std::filesystem::path& path);

/// Record of one tool invocation: what ran, from which inputs, and every
/// file it emitted with a content hash.
struct RunManifest {
  std::string command;
  std::string scenario;
  std::uint64_t seed = 0;
  std::string out_dir;
  std::string version;
  double wall_clock_sec = 0.0;

  struct FileEntry {
    std::string path;
    std::uint64_t hash = 0;
  };
  std::vector<FileEntry> files;

  /// Hashes and records an emitted file.
  void add_file(const std::filesystem::path& path);
  /// Writes manifest.json into the output directory.
  void write(const std::filesystem::path& path) const;
};

}  // namespace shsnet
