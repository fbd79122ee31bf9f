#pragma once

#include <Eigen/Dense>
#include <optional>
#include <string>
#include <vector>

#include "hma/manifold.hpp"

namespace hma {

/// Style vectors with their instance and category labels, the support set of
/// the nearest-neighbor classifier.
struct LabeledStyleSet {
  Eigen::MatrixXd styles;  ///< d_s x n, one column per entry
  std::vector<std::string> instance_ids;
  std::vector<std::string> category_ids;

  int size() const { return static_cast<int>(styles.cols()); }
  void validate() const;
};

enum class LabelTarget { Category, Instance };

/// Majority vote among the k Euclidean-nearest support styles. Vote ties fall
/// back to smaller mean distance, then to lexicographic label order.
std::string knn_classify(const LabeledStyleSet& support, const Eigen::VectorXd& query, int k,
                         LabelTarget target);

struct PosePrediction {
  PoseAngles pose;
  std::string category;
  std::string instance;
};

struct EvalReport {
  double mae_degrees = 0.0;
  double pct_ae_under_22_5 = 0.0;
  double pct_ae_under_45 = 0.0;
  double category_accuracy = 0.0;
  double instance_accuracy = 0.0;
  /// Percentage of correctly categorized records with yaw error < 45 deg.
  double pose_accuracy_given_correct_category = 0.0;
  /// Mean of (1 - yaw error / 180) * 100 with misclassified records scored 0.
  double pose_accuracy_zero_if_misclassified = 0.0;
  std::optional<double> synthesis_mse;
};

/// Yaw metrics use circular error; threshold percentages are strict.
EvalReport evaluate(const std::vector<PosePrediction>& predictions,
                    const std::vector<PosePrediction>& ground_truth,
                    std::optional<double> synthesis_mse = std::nullopt);

}  // namespace hma
