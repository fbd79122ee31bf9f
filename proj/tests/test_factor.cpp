#include <doctest.h>

#include <cmath>

#include "fixtures.hpp"
#include "hma/errors.hpp"
#include "hma/factor.hpp"
#include "hma/rng.hpp"

using namespace hma;

namespace {

KernelConfig small_kernel(int center_count) {
  KernelConfig config;
  config.centers = place_centers(center_count, ManifoldCase::YawOnly);
  return config;
}

MappingModel random_model(const KernelConfig& config, int feature_dim, RandomStream& rng) {
  MappingModel model;
  model.kernel = config;
  model.coefficients.resize(feature_dim, config.feature_count());
  for (int i = 0; i < model.coefficients.size(); ++i) model.coefficients.data()[i] = rng.normal();
  return model;
}

}  // namespace

TEST_CASE("stack_coefficients layout") {
  const KernelConfig config = small_kernel(3);
  RandomStream rng(1);
  const MappingModel one = random_model(config, 4, rng);

  const Eigen::MatrixXd single = stack_coefficients({one});
  REQUIRE(single.cols() == 1);
  REQUIRE(single.rows() == one.coefficients.size());
  // column-major vectorization: coefficient columns in order
  for (int j = 0; j < one.coefficients.cols(); ++j) {
    for (int i = 0; i < one.coefficients.rows(); ++i) {
      CHECK(single(j * one.coefficients.rows() + i, 0) == one.coefficients(i, j));
    }
  }

  const Eigen::MatrixXd twice = stack_coefficients({one, one});
  CHECK(twice.col(0) == twice.col(1));
}

TEST_CASE("stack rejects mismatched configurations") {
  RandomStream rng(2);
  const MappingModel a = random_model(small_kernel(3), 4, rng);
  const MappingModel b = random_model(small_kernel(4), 4, rng);
  CHECK_THROWS_AS(stack_coefficients({a, b}), ConfigMismatch);
  MappingModel c = a;
  c.kernel.ridge = 0.5;
  CHECK_THROWS_AS(stack_coefficients({a, c}), ConfigMismatch);
}

TEST_CASE("unstacking inverts stacking exactly") {
  const KernelConfig config = small_kernel(5);
  RandomStream rng(3);
  std::vector<MappingModel> models;
  for (int k = 0; k < 4; ++k) models.push_back(random_model(config, 6, rng));
  const Eigen::MatrixXd stacked = stack_coefficients(models);

  // identity basis turns reconstruction into pure unstacking
  StyleSpace identity;
  identity.basis = Eigen::MatrixXd::Identity(stacked.rows(), stacked.rows());
  identity.styles = stacked;
  identity.singular_values = Eigen::VectorXd::Ones(stacked.rows());
  identity.kernel = config;
  identity.feature_dim = 6;
  for (int k = 0; k < 4; ++k) {
    const MappingModel back = reconstruct_coefficients(identity, stacked.col(k));
    CHECK(back.coefficients == models[k].coefficients);
  }
}

TEST_CASE("factorize on the identity and on rank-1 input") {
  KernelConfig config;
  config.basis = BasisKind::Gaussian;
  config.with_polynomial = false;
  config.centers = place_centers(1, ManifoldCase::YawOnly);

  const StyleSpace id = factorize(Eigen::MatrixXd::Identity(3, 3), std::nullopt, config, 3);
  CHECK(id.singular_values.isApprox(Eigen::Vector3d::Ones(), 1e-12));
  CHECK((id.basis * id.styles - Eigen::MatrixXd::Identity(3, 3)).norm() < 1e-12);

  RandomStream rng(5);
  Eigen::VectorXd u(6), v(4);
  for (int i = 0; i < 6; ++i) u[i] = rng.normal();
  for (int i = 0; i < 4; ++i) v[i] = rng.normal();
  const Eigen::MatrixXd rank1 = u * v.transpose();
  KernelConfig config6 = config;
  config6.centers = place_centers(2, ManifoldCase::YawOnly);  // N_psi = 2, D = 3
  const StyleSpace space = factorize(rank1, 1, config6, 3);
  CHECK((space.basis * space.styles - rank1).norm() <= 1e-12 * rank1.norm());
}

TEST_CASE("factorize round trip and spectral properties") {
  const KernelConfig config = small_kernel(4);  // N_psi = 7
  RandomStream rng(7);
  Eigen::MatrixXd stacked(5 * config.feature_count(), 5);
  for (int i = 0; i < stacked.size(); ++i) stacked.data()[i] = rng.normal();

  const StyleSpace space = factorize(stacked, std::nullopt, config, 5);
  CHECK((space.basis * space.styles - stacked).norm() < 1e-10 * stacked.norm());

  // rows of styles (columns of V) are orthonormal
  const Eigen::MatrixXd gram = space.styles * space.styles.transpose();
  CHECK((gram - Eigen::MatrixXd::Identity(5, 5)).norm() < 1e-10);

  // singular values sorted, truncation error equals the tail energy
  const double total = stacked.squaredNorm();
  for (int d = 1; d <= 5; ++d) {
    if (d > 1) CHECK(space.singular_values[d - 1] <= space.singular_values[d - 2] + 1e-15);
    const StyleSpace truncated = factorize(stacked, d, config, 5);
    const double err = (truncated.basis * truncated.styles - stacked).squaredNorm();
    double tail = 0.0;
    for (int i = d; i < space.singular_values.size(); ++i) {
      tail += space.singular_values[i] * space.singular_values[i];
    }
    CHECK(err == doctest::Approx(tail).epsilon(1e-8).scale(total));
  }

  // deterministic output, fixed sign convention
  const StyleSpace again = factorize(stacked, std::nullopt, config, 5);
  CHECK(space.basis == again.basis);
  CHECK(space.styles == again.styles);
}

TEST_CASE("reconstruction error is monotone in the retained dimension") {
  const KernelConfig config = small_kernel(3);
  RandomStream rng(11);
  Eigen::MatrixXd stacked(4 * config.feature_count(), 6);
  for (int i = 0; i < stacked.size(); ++i) stacked.data()[i] = rng.normal();
  double previous = std::numeric_limits<double>::infinity();
  for (int d = 1; d <= 6; ++d) {
    const StyleSpace space = factorize(stacked, d, config, 4);
    const double err = (space.basis * space.styles - stacked).norm();
    CHECK(err <= previous + 1e-12);
    previous = err;
  }
}

TEST_CASE("reconstruct_coefficients is linear and inverts the training styles") {
  const KernelConfig config = small_kernel(4);
  RandomStream rng(13);
  std::vector<MappingModel> models;
  for (int k = 0; k < 5; ++k) models.push_back(random_model(config, 6, rng));
  const StyleSpace space = factorize_models(models);

  CHECK(reconstruct_coefficients(space, Eigen::VectorXd::Zero(space.style_dim()))
            .coefficients.norm() == 0.0);

  for (int k = 0; k < 5; ++k) {
    const MappingModel back = reconstruct_coefficients(space, space.styles.col(k));
    CHECK((back.coefficients - models[k].coefficients).norm() <
          1e-8 * models[k].coefficients.norm());
  }

  Eigen::VectorXd s1(space.style_dim()), s2(space.style_dim());
  for (int i = 0; i < space.style_dim(); ++i) {
    s1[i] = rng.normal();
    s2[i] = rng.normal();
  }
  const Eigen::MatrixXd lhs = reconstruct_coefficients(space, 0.3 * s1 + 1.7 * s2).coefficients;
  const Eigen::MatrixXd rhs = 0.3 * reconstruct_coefficients(space, s1).coefficients +
                              1.7 * reconstruct_coefficients(space, s2).coefficients;
  CHECK((lhs - rhs).norm() < 1e-12 * std::max(1.0, rhs.norm()));

  CHECK_THROWS_AS(reconstruct_coefficients(space, Eigen::VectorXd::Zero(2)), DimensionMismatch);
}

TEST_CASE("closed_form_style inverts reconstruction") {
  const KernelConfig config = small_kernel(4);
  RandomStream rng(17);
  std::vector<MappingModel> models;
  for (int k = 0; k < 5; ++k) models.push_back(random_model(config, 6, rng));
  const StyleSpace space = factorize_models(models);

  for (int k = 0; k < 5; ++k) {
    const Eigen::VectorXd s = closed_form_style(space, models[k]);
    CHECK((s - space.styles.col(k)).norm() < 1e-8);
  }

  MappingModel zero = models[0];
  zero.coefficients.setZero();
  CHECK(closed_form_style(space, zero).norm() < 1e-10);

  Eigen::VectorXd s0(space.style_dim());
  for (int i = 0; i < s0.size(); ++i) s0[i] = rng.normal();
  const Eigen::VectorXd back = closed_form_style(space, reconstruct_coefficients(space, s0));
  CHECK((back - s0).norm() < 1e-9 * std::max(1.0, s0.norm()));

  MappingModel other = models[0];
  other.kernel.shape = 2.0;
  CHECK_THROWS_AS(closed_form_style(space, other), ConfigMismatch);
}

TEST_CASE("degeneracy detection") {
  KernelConfig config = small_kernel(8);
  Eigen::MatrixXd x(8, 2);
  for (int i = 0; i < 8; ++i) {
    const double theta = kTwoPi * i / 8;
    x.row(i) << std::cos(theta), std::sin(theta);
  }
  config.centers = x;

  Eigen::MatrixXd constant(8, 5);
  constant.rowwise() = Eigen::RowVectorXd::Constant(5, 2.5);
  const MappingModel degenerate_model = fit_mapping(x, constant, config);
  const RankReport degenerate_report = degeneracy_rank(degenerate_model, 1e-8);
  CHECK(degenerate_report.degenerate);

  Eigen::MatrixXd harmonic(8, 4);
  for (int i = 0; i < 8; ++i) {
    const double theta = kTwoPi * i / 8;
    harmonic.row(i) << std::cos(theta), std::sin(theta), std::cos(2 * theta),
        std::sin(2 * theta);
  }
  const MappingModel live_model = fit_mapping(x, harmonic, config);
  const RankReport live_report = degeneracy_rank(live_model, 1e-8);
  CHECK_FALSE(live_report.degenerate);
  CHECK(live_report.effective_rank >= 2);

  MappingModel zero = live_model;
  zero.coefficients.setZero();
  const RankReport zero_report = degeneracy_rank(zero, 1e-8);
  CHECK(zero_report.effective_rank == 0);
  CHECK(zero_report.degenerate);
}
