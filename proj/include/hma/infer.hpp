#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "hma/factor.hpp"
#include "hma/manifold.hpp"

namespace hma {

/// Knobs of the particle sampler. sigma <= 0 selects the automatic scale
/// (median initial particle error), widened x10 up to three times if every
/// likelihood underflows.
struct InferenceConfig {
  int iterations = 30;
  double sigma = 0.0;  ///< <= 0 means auto
  int viewpoint_count = 36;
  double resample_std_style = 0.25;
  double resample_std_angle = 20.0 * kPi / 180.0;
  double decay = 0.85;
  std::uint64_t seed = 0;

  void validate() const;
};

struct InferenceResult {
  Eigen::VectorXd style;
  PoseAngles pose;
  double reconstruction_error = 0.0;
  std::vector<double> trace;  ///< best error after each iteration, non-increasing
};

struct MultimodalResult {
  Eigen::VectorXd style_a;
  Eigen::VectorXd style_b;
  Eigen::VectorXd combined_style;  ///< [weight_a * style_a; weight_b * style_b]
  PoseAngles pose;
  double fused_error = 0.0;
  std::vector<double> trace;
};

/// Squared residual |y - C_s psi(x)|^2 with C_s reconstructed from the style.
double reconstruction_error(const StyleSpace& space, const Eigen::VectorXd& style,
                            const Eigen::VectorXd& x, const Eigen::VectorXd& y);

/// exp(-error / (2 sigma^2)).
double particle_likelihood(double error, double sigma);

struct MarginalWeights {
  Eigen::VectorXd style_weights;      ///< length K, sums to 1
  Eigen::VectorXd viewpoint_weights;  ///< length L, sums to 1
};

/// Row/column marginals of a K x L likelihood matrix.
MarginalWeights marginal_weights(const Eigen::MatrixXd& likelihoods);

/// Joint style/viewpoint search by particle sampling. Style samples start at
/// the K learned style vectors; viewpoints start uniform on the manifold.
/// Deterministic for a fixed seed.
InferenceResult infer(const StyleSpace& space, const Eigen::VectorXd& y,
                      const InferenceConfig& config);

/// Exhaustive reference: all training styles crossed with a regular angle
/// grid (viewing-circle manifolds only). Returns the exact grid minimizer.
InferenceResult grid_oracle(const StyleSpace& space, const Eigen::VectorXd& y,
                            double angular_resolution);

/// 1D viewpoint search for a known style: grid scan plus golden-section
/// refinement around the best bracket. Never worse than the grid minimum.
std::pair<PoseAngles, double> viewpoint_given_style(const StyleSpace& space,
                                                    const Eigen::VectorXd& style,
                                                    const Eigen::VectorXd& y, double resolution);

/// Two-channel inference sharing one viewpoint variable; the fused error is
/// weight_a * error_a + weight_b * error_b.
MultimodalResult infer_multimodal(const StyleSpace& space_a, const StyleSpace& space_b,
                                  const Eigen::VectorXd& y_a, const Eigen::VectorXd& y_b,
                                  double weight_a, double weight_b,
                                  const InferenceConfig& config);

}  // namespace hma
