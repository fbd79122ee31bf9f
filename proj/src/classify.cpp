#include "hma/classify.hpp"

#include <algorithm>
#include <map>
#include <numeric>

#include "hma/errors.hpp"

namespace hma {

void LabeledStyleSet::validate() const {
  if (styles.cols() == 0) throw EmptySupport("labeled style set is empty");
  if (instance_ids.size() != static_cast<std::size_t>(styles.cols()) ||
      category_ids.size() != static_cast<std::size_t>(styles.cols())) {
    throw LengthMismatch("label lists do not match the style count");
  }
}

std::string knn_classify(const LabeledStyleSet& support, const Eigen::VectorXd& query, int k,
                         LabelTarget target) {
  support.validate();
  const int n = support.size();
  if (k < 1 || k > n) throw std::invalid_argument("k must be in [1, support size]");
  if (query.size() != support.styles.rows()) {
    throw DimensionMismatch("query style length does not match the support set");
  }

  std::vector<int> order(n);
  std::iota(order.begin(), order.end(), 0);
  Eigen::VectorXd distances(n);
  for (int i = 0; i < n; ++i) distances[i] = (support.styles.col(i) - query).norm();
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (distances[a] != distances[b]) return distances[a] < distances[b];
    return a < b;
  });

  struct Tally {
    int votes = 0;
    double distance_sum = 0.0;
  };
  std::map<std::string, Tally> tallies;
  for (int i = 0; i < k; ++i) {
    const int idx = order[i];
    const std::string& label = target == LabelTarget::Category ? support.category_ids[idx]
                                                               : support.instance_ids[idx];
    Tally& tally = tallies[label];
    ++tally.votes;
    tally.distance_sum += distances[idx];
  }

  const std::string* winner = nullptr;
  double winner_mean = 0.0;
  int winner_votes = 0;
  for (const auto& [label, tally] : tallies) {  // map order = lexicographic
    const double mean = tally.distance_sum / tally.votes;
    if (!winner || tally.votes > winner_votes ||
        (tally.votes == winner_votes && mean < winner_mean)) {
      winner = &label;
      winner_votes = tally.votes;
      winner_mean = mean;
    }
  }
  return *winner;
}

EvalReport evaluate(const std::vector<PosePrediction>& predictions,
                    const std::vector<PosePrediction>& ground_truth,
                    std::optional<double> synthesis_mse) {
  if (predictions.size() != ground_truth.size() || predictions.empty()) {
    throw LengthMismatch("predictions and ground truth must have equal nonzero length");
  }
  const double n = static_cast<double>(predictions.size());

  EvalReport report;
  report.synthesis_mse = synthesis_mse;
  double ae_sum = 0.0;
  int under_22_5 = 0, under_45 = 0, category_hits = 0, instance_hits = 0;
  int conditioned_hits = 0;
  double zeroed_sum = 0.0;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    const double ae_deg =
        angular_error(predictions[i].pose.yaw, ground_truth[i].pose.yaw) * 180.0 / kPi;
    ae_sum += ae_deg;
    if (ae_deg < 22.5) ++under_22_5;
    if (ae_deg < 45.0) ++under_45;
    const bool category_ok = predictions[i].category == ground_truth[i].category;
    const bool instance_ok = predictions[i].instance == ground_truth[i].instance;
    if (category_ok) {
      ++category_hits;
      if (ae_deg < 45.0) ++conditioned_hits;
      zeroed_sum += (1.0 - ae_deg / 180.0) * 100.0;
    }
    if (instance_ok) ++instance_hits;
  }

  report.mae_degrees = ae_sum / n;
  report.pct_ae_under_22_5 = under_22_5 / n * 100.0;
  report.pct_ae_under_45 = under_45 / n * 100.0;
  report.category_accuracy = category_hits / n * 100.0;
  report.instance_accuracy = instance_hits / n * 100.0;
  report.pose_accuracy_given_correct_category =
      category_hits > 0 ? conditioned_hits / static_cast<double>(category_hits) * 100.0 : 0.0;
  report.pose_accuracy_zero_if_misclassified = zeroed_sum / n;
  return report;
}

}  // namespace hma
