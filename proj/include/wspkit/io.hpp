#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "wspkit/tensor.hpp"

namespace wspkit {

std::string read_file(const std::filesystem::path& path);

// Writes to a sibling temp file, then renames over the target, so a failed
// run never leaves a partial artifact behind.
void atomic_write_file(const std::filesystem::path& path, const std::string& bytes);

std::vector<std::string> read_lines(const std::filesystem::path& path);

// Grayscale image as (1, H, W) tensor with values in [0, 1], stored as an
// 8-bit binary PGM (P5, maxval 255).
void write_pgm(const std::filesystem::path& path, const Tensor& image);
Tensor read_pgm(const std::filesystem::path& path);

}  // namespace wspkit
