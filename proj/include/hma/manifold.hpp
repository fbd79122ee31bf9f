#pragma once

#include <Eigen/Dense>
#include <numbers>
#include <optional>
#include <string>

namespace hma {

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kTwoPi = 2.0 * std::numbers::pi;

/// Degrees of freedom covered by the conceptual manifold: a viewing circle
/// (yaw), a view sphere (yaw + pitch), or full orientation (yaw + pitch +
/// roll). The embedded representation is the unit 1-, 2-, or 3-sphere.
enum class ManifoldCase { YawOnly = 1, YawPitch = 2, YawPitchRoll = 3 };

/// Ambient dimension of the embedding: 2, 3, or 4.
int ambient_dim(ManifoldCase c);
ManifoldCase case_for_ambient_dim(int dim);
int angle_count(ManifoldCase c);

std::string to_string(ManifoldCase c);          // "1D" / "2D" / "3D"
ManifoldCase manifold_case_from_string(const std::string& text);

/// Wraps an angle into [0, 2*pi).
double wrap_angle(double radians);

/// Orientation angles in radians. Yaw spans the full circle; pitch is limited
/// to [-pi/2, pi/2] and roll to (-pi/2, pi/2) so the arcsin inverses used in
/// recovery are single-valued.
struct PoseAngles {
  double yaw = 0.0;
  std::optional<double> pitch;
  std::optional<double> roll;

  static PoseAngles yaw_only(double yaw);
  static PoseAngles yaw_pitch(double yaw, double pitch);
  static PoseAngles yaw_pitch_roll(double yaw, double pitch, double roll);
  static PoseAngles for_case(ManifoldCase c, double yaw, double pitch = 0.0,
                             double roll = 0.0);

  ManifoldCase manifold_case() const;
  void validate() const;  // throws InvalidAngles
};

/// Embeds pose angles on the unit sphere of the matching dimension.
/// Result always has unit Euclidean norm.
Eigen::VectorXd embed(const PoseAngles& pose);

/// Inverts embed(). The input must be unit-norm within 1e-9; for the 4D case
/// points with |x4| >= 1 - 1e-9 raise GimbalDegenerate.
PoseAngles recover_angles(const Eigen::VectorXd& point);

/// Circular distance between two angles, in [0, pi].
double angular_error(double a, double b);

/// Deterministic well-spread kernel centers, one per row, all unit-norm.
/// Circle: uniform angular spacing. Sphere: Fibonacci lattice. 3-sphere:
/// equal-measure latitude slices crossed with a low-discrepancy rotation.
Eigen::MatrixXd place_centers(int count, ManifoldCase c);

}  // namespace hma
