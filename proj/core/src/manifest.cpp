#include "shsnet/manifest.hpp"

#include "json.hpp"  // vendored nlohmann/json

#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace shsnet {

std::uint64_t fnv1a64_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot hash missing file: " + path.string());
  std::uint64_t h = 0xcbf29ce484222325ULL;
  char buffer[4096];
  while (in) {
    in.read(buffer, sizeof(buffer));
    const std::streamsize got = in.gcount();
    for (std::streamsize i = 0; i < got; ++i) {
      h ^= static_cast<unsigned char>(buffer[i]);
      h *= 0x100000001b3ULL;
    }
  }
  return h;
}

void RunManifest::add_file(const std::filesystem::path& path) {
  files.push_back({path.string(), fnv1a64_file(path)});
}

void RunManifest::write(const std::filesystem::path& path) const {
  nlohmann::json j;
  j["command"] = command;
  j["scenario"] = scenario;
  j["seed"] = seed;
  j["out_dir"] = out_dir;
  j["version"] = version;
  j["wall_clock_sec"] = wall_clock_sec;
  j["files"] = nlohmann::json::array();
  for (const auto& f : files) {
    char hex[17];
    std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(f.hash));
    j["files"].push_back({{"path", f.path}, {"fnv1a64", hex}});
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write manifest: " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace shsnet
