#pragma once

#include <Eigen/Dense>
#include <string>

namespace hma {

enum class FeatureKind { Raw, Hog };
enum class FeatureNormalize { None, L2Global };

std::string to_string(FeatureKind kind);
FeatureKind feature_kind_from_string(const std::string& text);
std::string to_string(FeatureNormalize mode);
FeatureNormalize feature_normalize_from_string(const std::string& text);

/// How images become input-space vectors. Raw: resized intensities scaled to
/// [0, 1]. Hog: per-cell orientation histograms on an n x n grid.
struct FeatureConfig {
  FeatureKind kind = FeatureKind::Raw;
  int resize_rows = 112;
  int resize_cols = 112;
  int hog_grid = 7;
  int hog_bins = 9;
  FeatureNormalize normalize = FeatureNormalize::None;

  int dimension() const;
  std::string digest() const;  ///< canonical tag binding vectors to their config
  void validate() const;
};

struct FeatureVector {
  Eigen::VectorXd values;
  std::string config_digest;
};

/// Images are matrices of intensities in [0, 255].
FeatureVector extract(const Eigen::MatrixXd& image, const FeatureConfig& config);

/// Depth maps use 0 for holes. Holes are filled by a recursive 3x3 median,
/// valid depths are min-max scaled to [0, 255], then extract() applies.
FeatureVector extract_depth(const Eigen::MatrixXd& depth, const FeatureConfig& config);

Eigen::MatrixXd resize_bilinear(const Eigen::MatrixXd& image, int rows, int cols);

/// Recursive hole filling; stops when a pass changes nothing or after
/// max_passes.
Eigen::MatrixXd fill_depth_holes(const Eigen::MatrixXd& depth, int max_passes = 10);

}  // namespace hma
