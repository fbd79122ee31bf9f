#include "hma/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <vector>

#include "hma/errors.hpp"

namespace hma {

std::string to_string(FeatureKind kind) {
  return kind == FeatureKind::Raw ? "raw" : "hog";
}

FeatureKind feature_kind_from_string(const std::string& text) {
  if (text == "raw") return FeatureKind::Raw;
  if (text == "hog") return FeatureKind::Hog;
  throw std::invalid_argument("unknown feature kind '" + text + "'");
}

std::string to_string(FeatureNormalize mode) {
  return mode == FeatureNormalize::None ? "none" : "l2_global";
}

FeatureNormalize feature_normalize_from_string(const std::string& text) {
  if (text == "none") return FeatureNormalize::None;
  if (text == "l2_global") return FeatureNormalize::L2Global;
  throw std::invalid_argument("unknown normalize mode '" + text + "'");
}

int FeatureConfig::dimension() const {
  return kind == FeatureKind::Raw ? resize_rows * resize_cols : hog_grid * hog_grid * hog_bins;
}

std::string FeatureConfig::digest() const {
  std::string tag = to_string(kind) + ":" + std::to_string(resize_rows) + "x" +
                    std::to_string(resize_cols);
  if (kind == FeatureKind::Hog) {
    tag += ":" + std::to_string(hog_grid) + ":" + std::to_string(hog_bins) + ":" +
           to_string(normalize);
  }
  return tag;
}

void FeatureConfig::validate() const {
  if (resize_rows < 1 || resize_cols < 1) throw std::invalid_argument("resize must be positive");
  if (kind == FeatureKind::Hog) {
    if (hog_grid < 1) throw std::invalid_argument("hog grid must be >= 1");
    if (hog_bins < 2) throw std::invalid_argument("hog needs at least 2 orientation bins");
    if (resize_rows < hog_grid || resize_cols < hog_grid) {
      throw std::invalid_argument("resize target smaller than the hog grid");
    }
  }
}

Eigen::MatrixXd resize_bilinear(const Eigen::MatrixXd& image, int rows, int cols) {
  const int in_rows = static_cast<int>(image.rows());
  const int in_cols = static_cast<int>(image.cols());
  if (in_rows == rows && in_cols == cols) return image;
  Eigen::MatrixXd out(rows, cols);
  const double scale_r = static_cast<double>(in_rows) / rows;
  const double scale_c = static_cast<double>(in_cols) / cols;
  for (int i = 0; i < rows; ++i) {
    const double sy = std::clamp((i + 0.5) * scale_r - 0.5, 0.0, in_rows - 1.0);
    const int y0 = static_cast<int>(sy);
    const int y1 = std::min(y0 + 1, in_rows - 1);
    const double fy = sy - y0;
    for (int j = 0; j < cols; ++j) {
      const double sx = std::clamp((j + 0.5) * scale_c - 0.5, 0.0, in_cols - 1.0);
      const int x0 = static_cast<int>(sx);
      const int x1 = std::min(x0 + 1, in_cols - 1);
      const double fx = sx - x0;
      out(i, j) = (1.0 - fy) * ((1.0 - fx) * image(y0, x0) + fx * image(y0, x1)) +
                  fy * ((1.0 - fx) * image(y1, x0) + fx * image(y1, x1));
    }
  }
  return out;
}

namespace {

Eigen::VectorXd hog_features(const Eigen::MatrixXd& image, const FeatureConfig& config) {
  const int rows = static_cast<int>(image.rows());
  const int cols = static_cast<int>(image.cols());
  const int n = config.hog_grid;
  const int bins = config.hog_bins;
  const double bin_width = std::numbers::pi / bins;
  Eigen::VectorXd histogram = Eigen::VectorXd::Zero(n * n * bins);

  for (int i = 0; i < rows; ++i) {
    const int up = std::max(i - 1, 0);
    const int down = std::min(i + 1, rows - 1);
    for (int j = 0; j < cols; ++j) {
      const int left = std::max(j - 1, 0);
      const int right = std::min(j + 1, cols - 1);
      const double gx = image(i, right) - image(i, left);
      const double gy = image(down, j) - image(up, j);
      const double magnitude = std::hypot(gx, gy);
      if (magnitude == 0.0) continue;
      double angle = std::atan2(gy, gx);  // unsigned orientation in [0, pi)
      if (angle < 0.0) angle += std::numbers::pi;
      if (angle >= std::numbers::pi) angle -= std::numbers::pi;
      // Linear vote split between the two nearest bin centers (centers at
      // b * bin_width), wrapping circularly at pi.
      const double t = angle / bin_width;
      const int lower = static_cast<int>(t);
      const double frac = t - lower;
      const int cell = (i * n / rows) * n + (j * n / cols);
      histogram[cell * bins + lower % bins] += (1.0 - frac) * magnitude;
      histogram[cell * bins + (lower + 1) % bins] += frac * magnitude;
    }
  }

  if (config.normalize == FeatureNormalize::L2Global) {
    const double norm = histogram.norm();
    histogram /= std::sqrt(norm * norm + 1e-12 * 1e-12);
  }
  return histogram;
}

}  // namespace

FeatureVector extract(const Eigen::MatrixXd& image, const FeatureConfig& config) {
  config.validate();
  if (image.size() == 0) throw EmptyImage("cannot featurize an empty image");
  const Eigen::MatrixXd resized = resize_bilinear(image, config.resize_rows, config.resize_cols);

  FeatureVector feature;
  feature.config_digest = config.digest();
  if (config.kind == FeatureKind::Raw) {
    feature.values.resize(resized.size());
    for (int i = 0; i < resized.rows(); ++i) {
      for (int j = 0; j < resized.cols(); ++j) {
        feature.values[i * resized.cols() + j] = resized(i, j) / 255.0;
      }
    }
  } else {
    feature.values = hog_features(resized, config);
  }
  return feature;
}

Eigen::MatrixXd fill_depth_holes(const Eigen::MatrixXd& depth, int max_passes) {
  Eigen::MatrixXd filled = depth;
  const int rows = static_cast<int>(depth.rows());
  const int cols = static_cast<int>(depth.cols());
  for (int pass = 0; pass < max_passes; ++pass) {
    bool changed = false;
    const Eigen::MatrixXd snapshot = filled;
    std::vector<double> neighbors;
    for (int i = 0; i < rows; ++i) {
      for (int j = 0; j < cols; ++j) {
        if (snapshot(i, j) > 0.0) continue;
        neighbors.clear();
        for (int di = -1; di <= 1; ++di) {
          for (int dj = -1; dj <= 1; ++dj) {
            const int ni = i + di;
            const int nj = j + dj;
            if (ni < 0 || nj < 0 || ni >= rows || nj >= cols) continue;
            if (snapshot(ni, nj) > 0.0) neighbors.push_back(snapshot(ni, nj));
          }
        }
        if (neighbors.empty()) continue;
        std::sort(neighbors.begin(), neighbors.end());
        const std::size_t h = neighbors.size() / 2;
        filled(i, j) = neighbors.size() % 2 == 1 ? neighbors[h]
                                                 : 0.5 * (neighbors[h - 1] + neighbors[h]);
        changed = true;
      }
    }
    if (!changed) break;
  }
  return filled;
}

FeatureVector extract_depth(const Eigen::MatrixXd& depth, const FeatureConfig& config) {
  config.validate();
  if (depth.size() == 0) throw EmptyImage("cannot featurize an empty depth map");
  if ((depth.array() > 0.0).count() == 0) {
    throw AllHoles("depth map contains no valid measurements");
  }
  const Eigen::MatrixXd filled = fill_depth_holes(depth);

  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < filled.rows(); ++i) {
    for (int j = 0; j < filled.cols(); ++j) {
      if (filled(i, j) > 0.0) {
        lo = std::min(lo, filled(i, j));
        hi = std::max(hi, filled(i, j));
      }
    }
  }
  const double range = hi - lo;
  Eigen::MatrixXd scaled(filled.rows(), filled.cols());
  for (int i = 0; i < filled.rows(); ++i) {
    for (int j = 0; j < filled.cols(); ++j) {
      scaled(i, j) =
          range > 0.0 ? std::clamp((filled(i, j) - lo) / range, 0.0, 1.0) * 255.0 : 0.0;
    }
  }
  return extract(scaled, config);
}

}  // namespace hma
