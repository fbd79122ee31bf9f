#pragma once

#include <Eigen/Dense>
#include <optional>
#include <vector>

#include "hma/grbf.hpp"

namespace hma {

/// Factorized coefficient space: basis columns are U*Sigma from the SVD of
/// the stacked coefficient matrix, style columns are rows of V. basis *
/// styles reconstructs the stacked matrix when no truncation is applied.
struct StyleSpace {
  Eigen::MatrixXd basis;            ///< (D * N_psi) x d_s
  Eigen::MatrixXd styles;           ///< d_s x K, one column per training object
  Eigen::VectorXd singular_values;  ///< full spectrum, non-increasing
  KernelConfig kernel;              ///< shared across all objects
  int feature_dim = 0;              ///< D

  int style_dim() const { return static_cast<int>(basis.cols()); }
  int object_count() const { return static_cast<int>(styles.cols()); }
  void validate() const;
};

/// Arranges per-object coefficient matrices as columns: column k is C^k
/// vectorized column-by-column. All models must share one kernel config.
Eigen::MatrixXd stack_coefficients(const std::vector<MappingModel>& models);

/// Thin SVD of the stacked matrix. style_dim = nullopt keeps the full rank
/// min(D*N_psi, K). Sign convention: the largest-magnitude entry of each
/// basis direction is non-negative, so output is deterministic.
StyleSpace factorize(const Eigen::MatrixXd& stacked, std::optional<int> style_dim,
                     const KernelConfig& kernel, int feature_dim);

StyleSpace factorize_models(const std::vector<MappingModel>& models,
                            std::optional<int> style_dim = std::nullopt);

/// Inverse of the stacking layout applied to basis * style.
MappingModel reconstruct_coefficients(const StyleSpace& space, const Eigen::VectorXd& style);

/// Least-squares style for an externally fitted coefficient matrix.
Eigen::VectorXd closed_form_style(const StyleSpace& space, const MappingModel& model);

struct RankReport {
  int effective_rank = 0;
  bool degenerate = false;
};

/// Rank analysis of the coefficient matrix. A view manifold is degenerate
/// when the rbf-weight block carries no energy relative to the whole matrix,
/// i.e. the mapping collapses to (at most) an affine function of x.
RankReport degeneracy_rank(const MappingModel& model, double tolerance = 1e-8);

}  // namespace hma
