#include <doctest.h>

#include <algorithm>

#include "hma/classify.hpp"
#include "hma/errors.hpp"
#include "hma/rng.hpp"

using namespace hma;

namespace {

LabeledStyleSet two_clusters() {
  LabeledStyleSet support;
  support.styles.resize(2, 6);
  support.styles << 0.0, 0.1, -0.1, 10.0, 10.1, 9.9,
                    0.0, -0.1, 0.1, 10.0, 9.9, 10.1;
  support.instance_ids = {"a1", "a2", "a3", "b1", "b2", "b3"};
  support.category_ids = {"a", "a", "a", "b", "b", "b"};
  return support;
}

PosePrediction entry(double yaw_deg, const std::string& category,
                     const std::string& instance) {
  return {PoseAngles::yaw_only(yaw_deg * kPi / 180.0), category, instance};
}

}  // namespace

TEST_CASE("exact-match query returns its own label") {
  const LabeledStyleSet support = two_clusters();
  CHECK(knn_classify(support, support.styles.col(4), 1, LabelTarget::Instance) == "b2");
  CHECK(knn_classify(support, support.styles.col(4), 1, LabelTarget::Category) == "b");
}

TEST_CASE("majority vote inside a cluster") {
  const LabeledStyleSet support = two_clusters();
  const Eigen::VectorXd query = Eigen::Vector2d(0.02, 0.03);
  CHECK(knn_classify(support, query, 3, LabelTarget::Category) == "a");
}

TEST_CASE("knn is invariant to support permutations and uniform scaling") {
  LabeledStyleSet support = two_clusters();
  const Eigen::VectorXd query = Eigen::Vector2d(9.95, 10.05);
  const std::string base = knn_classify(support, query, 3, LabelTarget::Category);

  LabeledStyleSet shuffled;
  const std::vector<int> order = {5, 0, 3, 1, 4, 2};
  shuffled.styles.resize(2, 6);
  for (int i = 0; i < 6; ++i) {
    shuffled.styles.col(i) = support.styles.col(order[i]);
    shuffled.instance_ids.push_back(support.instance_ids[order[i]]);
    shuffled.category_ids.push_back(support.category_ids[order[i]]);
  }
  CHECK(knn_classify(shuffled, query, 3, LabelTarget::Category) == base);

  LabeledStyleSet scaled = support;
  scaled.styles *= 7.5;
  CHECK(knn_classify(scaled, 7.5 * query, 3, LabelTarget::Category) == base);
}

TEST_CASE("knn tie-breaking") {
  LabeledStyleSet support;
  support.styles.resize(1, 4);
  support.styles << -1.0, 1.0, -2.0, 2.0;
  support.instance_ids = {"m1", "p1", "m2", "p2"};
  support.category_ids = {"minus", "plus", "minus", "plus"};

  // k=2 at the origin: one vote each at equal distance; mean distances tie;
  // lexicographic label order decides
  CHECK(knn_classify(support, Eigen::VectorXd::Zero(1), 2, LabelTarget::Category) == "minus");

  // k=4: two votes each, but "plus" is nearer on average when shifted
  Eigen::VectorXd nudged(1);
  nudged << 0.25;
  CHECK(knn_classify(support, nudged, 4, LabelTarget::Category) == "plus");
}

TEST_CASE("knn input validation") {
  LabeledStyleSet empty;
  empty.styles.resize(2, 0);
  CHECK_THROWS_AS(knn_classify(empty, Eigen::Vector2d(0, 0), 1, LabelTarget::Category),
                  EmptySupport);
  const LabeledStyleSet support = two_clusters();
  CHECK_THROWS_AS(knn_classify(support, Eigen::Vector2d(0, 0), 7, LabelTarget::Category),
                  std::invalid_argument);
  CHECK_THROWS_AS(knn_classify(support, Eigen::Vector2d(0, 0), 0, LabelTarget::Category),
                  std::invalid_argument);
  CHECK_THROWS_AS(knn_classify(support, Eigen::VectorXd::Zero(3), 1, LabelTarget::Category),
                  DimensionMismatch);
}

TEST_CASE("evaluate: perfect predictions") {
  std::vector<PosePrediction> truth;
  for (int i = 0; i < 10; ++i) truth.push_back(entry(i * 36.0, "cat", "obj" + std::to_string(i)));
  const EvalReport report = evaluate(truth, truth);
  CHECK(report.mae_degrees == 0.0);
  CHECK(report.pct_ae_under_22_5 == 100.0);
  CHECK(report.pct_ae_under_45 == 100.0);
  CHECK(report.category_accuracy == 100.0);
  CHECK(report.instance_accuracy == 100.0);
  CHECK(report.pose_accuracy_given_correct_category == 100.0);
  CHECK(report.pose_accuracy_zero_if_misclassified == 100.0);
  CHECK_FALSE(report.synthesis_mse.has_value());
}

TEST_CASE("evaluate: wraparound pair") {
  const EvalReport report = evaluate({entry(359.0, "c", "i")}, {entry(1.0, "c", "i")});
  CHECK(report.mae_degrees == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(report.pct_ae_under_22_5 == 100.0);
  CHECK(report.pct_ae_under_45 == 100.0);
}

TEST_CASE("evaluate: uniform 30 degree errors") {
  std::vector<PosePrediction> predictions, truth;
  for (int i = 0; i < 8; ++i) {
    truth.push_back(entry(i * 45.0, "c", "i"));
    predictions.push_back(entry(i * 45.0 + 30.0, "c", "i"));
  }
  const EvalReport report = evaluate(predictions, truth);
  CHECK(report.mae_degrees == doctest::Approx(30.0).epsilon(1e-12));
  CHECK(report.pct_ae_under_22_5 == 0.0);
  CHECK(report.pct_ae_under_45 == 100.0);
}

TEST_CASE("evaluate: both pose-conditioning conventions") {
  // two records: one misclassified with perfect pose, one correct with 90 deg error
  const std::vector<PosePrediction> predictions = {entry(0.0, "wrong", "w"),
                                                   entry(90.0, "right", "r")};
  const std::vector<PosePrediction> truth = {entry(0.0, "right", "r"),
                                             entry(0.0, "right", "r")};
  const EvalReport report = evaluate(predictions, truth);
  CHECK(report.category_accuracy == 50.0);
  // conditioned on correct category: only the second record counts, 90 >= 45
  CHECK(report.pose_accuracy_given_correct_category == 0.0);
  // zero-if-misclassified: (0 + (1 - 90/180)*100) / 2
  CHECK(report.pose_accuracy_zero_if_misclassified == doctest::Approx(25.0));
  CHECK(report.pct_ae_under_22_5 <= report.pct_ae_under_45);
}

TEST_CASE("evaluate rejects mismatched lengths") {
  CHECK_THROWS_AS(evaluate({entry(0, "c", "i")}, {}), LengthMismatch);
  CHECK_THROWS_AS(evaluate({}, {}), LengthMismatch);
}
