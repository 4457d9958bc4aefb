#pragma once

#include "shsnet/types.hpp"

#include <filesystem>
#include <iosfwd>

namespace shsnet {

/// Plain comma-separated numeric matrix, one row per line.
[[nodiscard]] Matrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(const std::filesystem::path& path, const Matrix& m);

}  // namespace shsnet
