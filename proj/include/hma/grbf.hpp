#pragma once

#include <Eigen/Dense>
#include <string>

#include "hma/manifold.hpp"

namespace hma {

enum class BasisKind { ThinPlateSpline, Gaussian, Multiquadric };

std::string to_string(BasisKind basis);
BasisKind basis_from_string(const std::string& text);

/// Kernel map configuration. One configuration is shared by every object that
/// participates in a style space, so it also pins the centers.
struct KernelConfig {
  BasisKind basis = BasisKind::ThinPlateSpline;
  Eigen::MatrixXd centers;      ///< M x e+, rows on the conceptual manifold
  double shape = 1.0;           ///< gaussian width / multiquadric shape parameter
  double ridge = 1e-8;          ///< regularizer added to the rbf-weight block
  bool with_polynomial = true;  ///< linear polynomial tail; required for
                                ///< thin-plate and multiquadric bases

  int center_count() const { return static_cast<int>(centers.rows()); }
  int embed_dim() const { return static_cast<int>(centers.cols()); }
  int polynomial_terms() const { return with_polynomial ? embed_dim() + 1 : 0; }
  /// Length of the kernel feature vector psi(x).
  int feature_count() const { return center_count() + polynomial_terms(); }

  void validate() const;
  bool operator==(const KernelConfig& other) const;
};

/// phi(r) for the configured basis. Thin-plate r^2 log r is continuous at 0.
double basis_value(BasisKind basis, double r, double shape);

/// psi(x) = [phi(|x - z_1|) ... phi(|x - z_M|), 1, x^T]^T; the polynomial tail
/// is omitted for polynomial-free gaussian configurations.
Eigen::VectorXd kernel_map(const Eigen::VectorXd& x, const KernelConfig& config);

/// Per-object generative map: feature(x) = coefficients * psi(x).
struct MappingModel {
  Eigen::MatrixXd coefficients;  ///< D x N_psi
  KernelConfig kernel;

  int feature_dim() const { return static_cast<int>(coefficients.rows()); }
};

/// Solves for the mapping coefficients of one object. With as many samples as
/// centers the bordered system is solved directly and the result
/// interpolates; with more samples a ridge-regularized least-squares problem
/// is solved under the same polynomial side conditions.
MappingModel fit_mapping(const Eigen::MatrixXd& embeddings,    // N_k x e+
                         const Eigen::MatrixXd& observations,  // N_k x D
                         const KernelConfig& config);

Eigen::VectorXd evaluate_mapping(const MappingModel& model, const Eigen::VectorXd& x);

/// Renders the mapping output at a pose as an image. The model must map to
/// raw intensities in [0, 1]; output is clamped to that range.
Eigen::MatrixXd synthesize_view(const MappingModel& model, const PoseAngles& pose, int rows,
                                int cols);

/// Mean squared intensity difference on whatever scale the images carry.
double synthesis_mse(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& synthesized);

}  // namespace hma
