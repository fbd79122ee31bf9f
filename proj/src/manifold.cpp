#include "hma/manifold.hpp"

#include <algorithm>
#include <cmath>

#include "hma/errors.hpp"

namespace hma {

int ambient_dim(ManifoldCase c) { return static_cast<int>(c) + 1; }

ManifoldCase case_for_ambient_dim(int dim) {
  if (dim < 2 || dim > 4) {
    throw std::invalid_argument("conceptual points live in R^2, R^3 or R^4; got dimension " +
                                std::to_string(dim));
  }
  return static_cast<ManifoldCase>(dim - 1);
}

int angle_count(ManifoldCase c) { return static_cast<int>(c); }

std::string to_string(ManifoldCase c) {
  switch (c) {
    case ManifoldCase::YawOnly: return "1D";
    case ManifoldCase::YawPitch: return "2D";
    case ManifoldCase::YawPitchRoll: return "3D";
  }
  return "1D";
}

ManifoldCase manifold_case_from_string(const std::string& text) {
  if (text == "1D" || text == "1d") return ManifoldCase::YawOnly;
  if (text == "2D" || text == "2d") return ManifoldCase::YawPitch;
  if (text == "3D" || text == "3d") return ManifoldCase::YawPitchRoll;
  throw std::invalid_argument("unknown manifold case '" + text + "' (expected 1D, 2D or 3D)");
}

double wrap_angle(double radians) {
  double a = std::fmod(radians, kTwoPi);
  if (a < 0.0) a += kTwoPi;
  if (a >= kTwoPi) a = 0.0;  // fmod rounding at the seam
  return a;
}

PoseAngles PoseAngles::yaw_only(double yaw) {
  PoseAngles p;
  p.yaw = wrap_angle(yaw);
  p.validate();
  return p;
}

PoseAngles PoseAngles::yaw_pitch(double yaw, double pitch) {
  PoseAngles p;
  p.yaw = wrap_angle(yaw);
  p.pitch = pitch;
  p.validate();
  return p;
}

PoseAngles PoseAngles::yaw_pitch_roll(double yaw, double pitch, double roll) {
  PoseAngles p;
  p.yaw = wrap_angle(yaw);
  p.pitch = pitch;
  p.roll = roll;
  p.validate();
  return p;
}

PoseAngles PoseAngles::for_case(ManifoldCase c, double yaw, double pitch, double roll) {
  switch (c) {
    case ManifoldCase::YawOnly: return yaw_only(yaw);
    case ManifoldCase::YawPitch: return yaw_pitch(yaw, pitch);
    case ManifoldCase::YawPitchRoll: return yaw_pitch_roll(yaw, pitch, roll);
  }
  return yaw_only(yaw);
}

ManifoldCase PoseAngles::manifold_case() const {
  if (roll.has_value()) return ManifoldCase::YawPitchRoll;
  if (pitch.has_value()) return ManifoldCase::YawPitch;
  return ManifoldCase::YawOnly;
}

void PoseAngles::validate() const {
  if (!std::isfinite(yaw)) throw InvalidAngles("yaw is not finite");
  if (yaw < 0.0 || yaw >= kTwoPi) throw InvalidAngles("yaw outside [0, 2*pi)");
  if (roll.has_value() && !pitch.has_value()) {
    throw InvalidAngles("roll given without pitch");
  }
  if (pitch.has_value()) {
    const double b = *pitch;
    if (!std::isfinite(b)) throw InvalidAngles("pitch is not finite");
    if (b < -kPi / 2.0 || b > kPi / 2.0) throw InvalidAngles("pitch outside [-pi/2, pi/2]");
  }
  if (roll.has_value()) {
    const double z = *roll;
    if (!std::isfinite(z)) throw InvalidAngles("roll is not finite");
    if (z <= -kPi / 2.0 || z >= kPi / 2.0) throw InvalidAngles("roll outside (-pi/2, pi/2)");
  }
}

Eigen::VectorXd embed(const PoseAngles& pose) {
  pose.validate();
  const double theta = pose.yaw;
  switch (pose.manifold_case()) {
    case ManifoldCase::YawOnly: {
      Eigen::VectorXd x(2);
      x << std::cos(theta), std::sin(theta);
      return x;
    }
    case ManifoldCase::YawPitch: {
      const double beta = *pose.pitch;
      Eigen::VectorXd x(3);
      x << std::cos(theta) * std::cos(beta), std::sin(theta) * std::cos(beta), std::sin(beta);
      return x;
    }
    case ManifoldCase::YawPitchRoll: {
      const double beta = *pose.pitch;
      const double zeta = *pose.roll;
      Eigen::VectorXd x(4);
      x << std::cos(theta) * std::cos(beta) * std::cos(zeta),
          std::sin(theta) * std::cos(beta) * std::cos(zeta), std::sin(beta) * std::cos(zeta),
          std::sin(zeta);
      return x;
    }
  }
  throw std::invalid_argument("unreachable manifold case");
}

namespace {

double clamped_asin(double v) { return std::asin(std::clamp(v, -1.0, 1.0)); }

}  // namespace

PoseAngles recover_angles(const Eigen::VectorXd& point) {
  const int dim = static_cast<int>(point.size());
  const ManifoldCase c = case_for_ambient_dim(dim);
  if (std::abs(point.norm() - 1.0) > 1e-9) {
    throw std::invalid_argument("conceptual point is not unit-norm");
  }
  switch (c) {
    case ManifoldCase::YawOnly:
      return PoseAngles::yaw_only(wrap_angle(std::atan2(point[1], point[0])));
    case ManifoldCase::YawPitch: {
      const double beta = clamped_asin(point[2]);
      const double theta = wrap_angle(std::atan2(point[1], point[0]));
      return PoseAngles::yaw_pitch(theta, beta);
    }
    case ManifoldCase::YawPitchRoll: {
      if (std::abs(point[3]) >= 1.0 - 1e-9) {
        throw GimbalDegenerate("pose ambiguous at 3-sphere pole (|x4| ~ 1)");
      }
      const double zeta = clamped_asin(point[3]);
      const double beta = clamped_asin(point[2] / std::cos(zeta));
      const double theta = wrap_angle(std::atan2(point[1], point[0]));
      return PoseAngles::yaw_pitch_roll(theta, beta, zeta);
    }
  }
  throw std::invalid_argument("unreachable manifold case");
}

double angular_error(double a, double b) {
  const double d = std::fmod(std::abs(a - b), kTwoPi);
  return std::min(d, kTwoPi - d);
}

namespace {

// CDF of the 3-sphere latitude density 2*cos^2(z)/pi on [-pi/2, pi/2],
// inverted by bisection. Monotone, so 60 halvings pin the root to ~1e-18.
double latitude_from_quantile(double t) {
  double lo = -kPi / 2.0;
  double hi = kPi / 2.0;
  for (int i = 0; i < 60; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double cdf = (mid + std::sin(mid) * std::cos(mid) + kPi / 2.0) / kPi;
    if (cdf < t) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double fractional(double v) { return v - std::floor(v); }

}  // namespace

Eigen::MatrixXd place_centers(int count, ManifoldCase c) {
  if (count < 1) throw std::invalid_argument("center count must be >= 1");
  const int dim = ambient_dim(c);
  Eigen::MatrixXd centers(count, dim);
  switch (c) {
    case ManifoldCase::YawOnly: {
      for (int j = 0; j < count; ++j) {
        const double theta = kTwoPi * j / count;
        centers(j, 0) = std::cos(theta);
        centers(j, 1) = std::sin(theta);
      }
      break;
    }
    case ManifoldCase::YawPitch: {
      const double golden_angle = kPi * (3.0 - std::sqrt(5.0));
      for (int j = 0; j < count; ++j) {
        const double z = 1.0 - (2.0 * j + 1.0) / count;
        const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
        const double a = golden_angle * j;
        centers(j, 0) = r * std::cos(a);
        centers(j, 1) = r * std::sin(a);
        centers(j, 2) = z;
      }
      break;
    }
    case ManifoldCase::YawPitchRoll: {
      // Plastic-constant additive recurrence for the two free angles.
      const double plastic = 1.32471795724474602596;
      const double g1 = 1.0 / plastic;
      const double g2 = 1.0 / (plastic * plastic);
      for (int j = 0; j < count; ++j) {
        const double zeta = latitude_from_quantile((j + 0.5) / count);
        const double beta = std::asin(2.0 * fractional(0.5 + g1 * (j + 1)) - 1.0);
        const double theta = kTwoPi * fractional(0.5 + g2 * (j + 1));
        centers(j, 0) = std::cos(theta) * std::cos(beta) * std::cos(zeta);
        centers(j, 1) = std::sin(theta) * std::cos(beta) * std::cos(zeta);
        centers(j, 2) = std::sin(beta) * std::cos(zeta);
        centers(j, 3) = std::sin(zeta);
      }
      break;
    }
  }
  for (int j = 0; j < count; ++j) centers.row(j).normalize();
  return centers;
}

}  // namespace hma
