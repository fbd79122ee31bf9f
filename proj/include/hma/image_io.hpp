#pragma once

#include <Eigen/Dense>
#include <filesystem>

namespace hma {

/// Reads an 8-bit grayscale image (PGM P2/P5 or PNG by magic bytes) as a
/// matrix of intensities in [0, 255]. Color PNG is converted to luma.
Eigen::MatrixXd read_image(const std::filesystem::path& path);

/// Reads a 16-bit PGM depth map; values kept as-is, 0 denotes a hole.
Eigen::MatrixXd read_depth_pgm(const std::filesystem::path& path);

/// Writes an 8-bit grayscale image; intensities clamped to [0, 255] and
/// rounded. Format chosen by extension (.pgm or .png).
void write_image(const std::filesystem::path& path, const Eigen::MatrixXd& image);

void write_pgm(const std::filesystem::path& path, const Eigen::MatrixXd& image);
void write_png(const std::filesystem::path& path, const Eigen::MatrixXd& image);

}  // namespace hma
