#include "hma/factor.hpp"

#include <cmath>

#include "hma/errors.hpp"

namespace hma {

void StyleSpace::validate() const {
  kernel.validate();
  if (feature_dim < 1) throw DimensionMismatch("style space has no feature dimension");
  if (basis.rows() != static_cast<Eigen::Index>(feature_dim) * kernel.feature_count()) {
    throw DimensionMismatch("basis rows do not match D * N_psi");
  }
  if (basis.cols() != styles.rows()) {
    throw DimensionMismatch("basis and style dimensionality disagree");
  }
}

Eigen::MatrixXd stack_coefficients(const std::vector<MappingModel>& models) {
  if (models.empty()) throw std::invalid_argument("need at least one mapping model");
  const MappingModel& first = models.front();
  const Eigen::Index rows = first.coefficients.size();
  Eigen::MatrixXd stacked(rows, static_cast<Eigen::Index>(models.size()));
  for (std::size_t k = 0; k < models.size(); ++k) {
    const MappingModel& model = models[k];
    if (!(model.kernel == first.kernel)) {
      throw ConfigMismatch("model " + std::to_string(k) +
                           " was trained with a different kernel config");
    }
    if (model.coefficients.rows() != first.coefficients.rows() ||
        model.coefficients.cols() != first.coefficients.cols()) {
      throw ConfigMismatch("model " + std::to_string(k) + " has a different coefficient shape");
    }
    // Column-major vectorization: coefficient columns stacked in order.
    stacked.col(static_cast<Eigen::Index>(k)) =
        Eigen::Map<const Eigen::VectorXd>(model.coefficients.data(), rows);
  }
  return stacked;
}

StyleSpace factorize(const Eigen::MatrixXd& stacked, std::optional<int> style_dim,
                     const KernelConfig& kernel, int feature_dim) {
  if (!stacked.allFinite()) throw std::invalid_argument("stacked matrix has non-finite entries");
  if (stacked.rows() != static_cast<Eigen::Index>(feature_dim) * kernel.feature_count()) {
    throw DimensionMismatch("stacked rows do not match D * N_psi for the given kernel");
  }
  const int full = static_cast<int>(std::min(stacked.rows(), stacked.cols()));
  const int d = style_dim.value_or(full);
  if (d < 1 || d > full) {
    throw std::invalid_argument("style dimensionality must be in [1, min(D*N_psi, K)]");
  }

  Eigen::BDCSVD<Eigen::MatrixXd> svd(stacked, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (svd.info() != Eigen::Success) throw NumericalFailure("SVD did not converge");
  Eigen::MatrixXd u = svd.matrixU();
  Eigen::MatrixXd v = svd.matrixV();
  for (Eigen::Index i = 0; i < u.cols(); ++i) {
    Eigen::Index pivot = 0;
    u.col(i).cwiseAbs().maxCoeff(&pivot);
    if (u(pivot, i) < 0.0) {
      u.col(i) = -u.col(i);
      v.col(i) = -v.col(i);
    }
  }

  StyleSpace space;
  space.basis = u.leftCols(d) * svd.singularValues().head(d).asDiagonal();
  space.styles = v.leftCols(d).transpose();
  space.singular_values = svd.singularValues();
  space.kernel = kernel;
  space.feature_dim = feature_dim;
  return space;
}

StyleSpace factorize_models(const std::vector<MappingModel>& models,
                            std::optional<int> style_dim) {
  const Eigen::MatrixXd stacked = stack_coefficients(models);
  return factorize(stacked, style_dim, models.front().kernel, models.front().feature_dim());
}

MappingModel reconstruct_coefficients(const StyleSpace& space, const Eigen::VectorXd& style) {
  if (style.size() != space.style_dim()) {
    throw DimensionMismatch("style vector length does not match the style space");
  }
  const Eigen::VectorXd flat = space.basis * style;
  MappingModel model;
  model.coefficients = Eigen::Map<const Eigen::MatrixXd>(flat.data(), space.feature_dim,
                                                         space.kernel.feature_count());
  model.kernel = space.kernel;
  return model;
}

Eigen::VectorXd closed_form_style(const StyleSpace& space, const MappingModel& model) {
  if (!(model.kernel == space.kernel)) {
    throw ConfigMismatch("model kernel does not match the style space kernel");
  }
  if (model.coefficients.size() != space.basis.rows()) {
    throw DimensionMismatch("coefficient size does not match the style space basis");
  }
  const Eigen::Map<const Eigen::VectorXd> flat(model.coefficients.data(),
                                               model.coefficients.size());
  return space.basis.completeOrthogonalDecomposition().solve(flat);
}

RankReport degeneracy_rank(const MappingModel& model, double tolerance) {
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
  RankReport report;
  Eigen::BDCSVD<Eigen::MatrixXd> svd(model.coefficients);
  const auto& sigma = svd.singularValues();
  const double largest = sigma.size() > 0 ? sigma[0] : 0.0;
  if (largest <= 0.0) {
    report.effective_rank = 0;
    report.degenerate = true;
    return report;
  }
  for (Eigen::Index i = 0; i < sigma.size(); ++i) {
    if (sigma[i] > tolerance * largest) ++report.effective_rank;
  }
  // Degenerate when the rbf-weight block carries nothing at the same
  // relative scale: the map is then affine in x and pose is unrecoverable.
  const Eigen::MatrixXd weight_block = model.coefficients.leftCols(model.kernel.center_count());
  Eigen::BDCSVD<Eigen::MatrixXd> weight_svd(weight_block);
  const double weight_largest =
      weight_svd.singularValues().size() > 0 ? weight_svd.singularValues()[0] : 0.0;
  report.degenerate = weight_largest <= tolerance * largest;
  return report;
}

}  // namespace hma
