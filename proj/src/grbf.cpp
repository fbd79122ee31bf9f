#include "hma/grbf.hpp"

#include <cmath>

#include "hma/errors.hpp"

namespace hma {

std::string to_string(BasisKind basis) {
  switch (basis) {
    case BasisKind::ThinPlateSpline: return "thin_plate_spline";
    case BasisKind::Gaussian: return "gaussian";
    case BasisKind::Multiquadric: return "multiquadric";
  }
  return "thin_plate_spline";
}

BasisKind basis_from_string(const std::string& text) {
  if (text == "thin_plate_spline" || text == "thin-plate" || text == "tps") {
    return BasisKind::ThinPlateSpline;
  }
  if (text == "gaussian") return BasisKind::Gaussian;
  if (text == "multiquadric") return BasisKind::Multiquadric;
  throw std::invalid_argument("unknown basis '" + text + "'");
}

void KernelConfig::validate() const {
  if (centers.rows() < 1) throw std::invalid_argument("kernel needs at least one center");
  if (centers.cols() < 2 || centers.cols() > 4) {
    throw std::invalid_argument("centers must live in R^2, R^3 or R^4");
  }
  for (Eigen::Index i = 0; i < centers.rows(); ++i) {
    if (std::abs(centers.row(i).norm() - 1.0) > 1e-9) {
      throw std::invalid_argument("center " + std::to_string(i) + " is not unit-norm");
    }
  }
  if (!(ridge >= 0.0)) throw std::invalid_argument("ridge must be >= 0");
  if (basis != BasisKind::ThinPlateSpline && !(shape > 0.0)) {
    throw std::invalid_argument("shape parameter must be positive");
  }
  if (basis != BasisKind::Gaussian && !with_polynomial) {
    throw std::invalid_argument(to_string(basis) + " requires the polynomial part");
  }
}

bool KernelConfig::operator==(const KernelConfig& other) const {
  return basis == other.basis && shape == other.shape && ridge == other.ridge &&
         with_polynomial == other.with_polynomial && centers.rows() == other.centers.rows() &&
         centers.cols() == other.centers.cols() && centers == other.centers;
}

double basis_value(BasisKind basis, double r, double shape) {
  switch (basis) {
    case BasisKind::ThinPlateSpline: {
      if (r <= 0.0) return 0.0;
      const double r2 = r * r;
      return r2 == 0.0 ? 0.0 : r2 * std::log(r);
    }
    case BasisKind::Gaussian:
      return std::exp(-(r * r) / (2.0 * shape * shape));
    case BasisKind::Multiquadric:
      return std::sqrt(r * r + shape * shape);
  }
  return 0.0;
}

Eigen::VectorXd kernel_map(const Eigen::VectorXd& x, const KernelConfig& config) {
  config.validate();
  if (x.size() != config.embed_dim()) {
    throw DimensionMismatch("conceptual point dimension does not match the kernel centers");
  }
  const int m = config.center_count();
  Eigen::VectorXd psi(config.feature_count());
  for (int j = 0; j < m; ++j) {
    psi[j] = basis_value(config.basis, (x - config.centers.row(j).transpose()).norm(),
                         config.shape);
  }
  if (config.with_polynomial) {
    psi[m] = 1.0;
    psi.tail(config.embed_dim()) = x;
  }
  return psi;
}

namespace {

// Solves B * sol = rhs through an SVD so the same decomposition yields the
// conditioning check. Condition numbers past 1e12 are treated as singular.
Eigen::MatrixXd solve_checked(const Eigen::MatrixXd& system, const Eigen::MatrixXd& rhs,
                              const char* what) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(system,
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericalFailure("SVD did not converge");
  const auto& sigma = svd.singularValues();
  const double largest = sigma.size() > 0 ? sigma[0] : 0.0;
  const double smallest = sigma.size() > 0 ? sigma[sigma.size() - 1] : 0.0;
  if (!(largest > 0.0) || smallest <= largest / 1e12) {
    throw SingularSystem(std::string(what) +
                         ": bordered matrix is rank-deficient beyond ridge repair");
  }
  return svd.solve(rhs);
}

}  // namespace

MappingModel fit_mapping(const Eigen::MatrixXd& embeddings, const Eigen::MatrixXd& observations,
                         const KernelConfig& config) {
  config.validate();
  const int n = static_cast<int>(embeddings.rows());
  const int m = config.center_count();
  const int p = config.polynomial_terms();
  if (n < 2) throw DimensionMismatch("need at least two views to fit a mapping");
  if (observations.rows() != n) {
    throw DimensionMismatch("observation rows do not match the embedding count");
  }
  if (embeddings.cols() != config.embed_dim()) {
    throw DimensionMismatch("embedding dimension does not match the kernel centers");
  }
  if (p > 0 && n < p) {
    throw DimensionMismatch("polynomial part needs at least e+1 distinct views");
  }

  Eigen::MatrixXd rbf_block(n, m);  // A_ij = phi(|x_i - z_j|)
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < m; ++j) {
      rbf_block(i, j) = basis_value(
          config.basis, (embeddings.row(i) - config.centers.row(j)).norm(), config.shape);
    }
  }
  Eigen::MatrixXd poly_data(n, p);     // P_x, rows [1, x_i^T]
  Eigen::MatrixXd poly_centers(m, p);  // P_t, rows [1, z_j^T]
  if (p > 0) {
    poly_data.col(0).setOnes();
    poly_data.rightCols(p - 1) = embeddings;
    poly_centers.col(0).setOnes();
    poly_centers.rightCols(p - 1) = config.centers;
  }

  Eigen::MatrixXd solution;  // (m + p) x D, rbf weights on top of polynomial coefficients
  if (n == m) {
    // Square bordered system: interpolation plus the side conditions.
    Eigen::MatrixXd system = Eigen::MatrixXd::Zero(m + p, m + p);
    system.topLeftCorner(m, m) = rbf_block;
    system.topLeftCorner(m, m).diagonal().array() += config.ridge;
    if (p > 0) {
      system.topRightCorner(m, p) = poly_data;
      system.bottomLeftCorner(p, m) = poly_centers.transpose();
    }
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m + p, observations.cols());
    rhs.topRows(n) = observations;
    solution = solve_checked(system, rhs, "fit_mapping");
  } else {
    // Constrained ridge least squares via the KKT form of the bordered
    // system: min |G u - Y|^2 + ridge |w|^2  s.t.  P_t^T w = 0.
    Eigen::MatrixXd design(n, m + p);
    design.leftCols(m) = rbf_block;
    if (p > 0) design.rightCols(p) = poly_data;
    Eigen::MatrixXd system = Eigen::MatrixXd::Zero(m + 2 * p, m + 2 * p);
    system.topLeftCorner(m + p, m + p) = design.transpose() * design;
    system.topLeftCorner(m, m).diagonal().array() += config.ridge;
    if (p > 0) {
      system.topRightCorner(m, p) = poly_centers;
      system.block(m + p, 0, p, m) = poly_centers.transpose();
    }
    Eigen::MatrixXd rhs = Eigen::MatrixXd::Zero(m + 2 * p, observations.cols());
    rhs.topRows(m + p) = design.transpose() * observations;
    solution = solve_checked(system, rhs, "fit_mapping").topRows(m + p);
  }

  MappingModel model;
  model.coefficients = solution.transpose();
  model.kernel = config;
  if (!model.coefficients.allFinite()) {
    throw NumericalFailure("mapping coefficients are not finite");
  }
  return model;
}

Eigen::VectorXd evaluate_mapping(const MappingModel& model, const Eigen::VectorXd& x) {
  return model.coefficients * kernel_map(x, model.kernel);
}

Eigen::MatrixXd synthesize_view(const MappingModel& model, const PoseAngles& pose, int rows,
                                int cols) {
  if (rows < 1 || cols < 1 || model.feature_dim() != rows * cols) {
    throw ShapeMismatch("feature dimension does not match the image shape");
  }
  const Eigen::VectorXd values = evaluate_mapping(model, embed(pose));
  Eigen::MatrixXd image(rows, cols);
  for (int i = 0; i < rows; ++i) {
    for (int j = 0; j < cols; ++j) {
      image(i, j) = std::clamp(values[i * cols + j], 0.0, 1.0);
    }
  }
  return image;
}

double synthesis_mse(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& synthesized) {
  if (reference.rows() != synthesized.rows() || reference.cols() != synthesized.cols()) {
    throw ShapeMismatch("images differ in shape");
  }
  return (reference - synthesized).squaredNorm() / static_cast<double>(reference.size());
}

}  // namespace hma
