#pragma once

#include <stdexcept>
#include <string>

namespace hma {

/// Invalid or inconsistent inputs: files, shapes, labels, configuration.
struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Failures of the numerical machinery itself.
struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DimensionMismatch : DataError {
  using DataError::DataError;
};

struct ShapeMismatch : DataError {
  using DataError::DataError;
};

/// Models trained with different kernels/centers cannot share a style space.
struct ConfigMismatch : DataError {
  using DataError::DataError;
};

struct EmptyImage : DataError {
  using DataError::DataError;
};

struct AllHoles : DataError {
  using DataError::DataError;
};

struct EmptySupport : DataError {
  using DataError::DataError;
};

struct LengthMismatch : DataError {
  using DataError::DataError;
};

struct ParseError : DataError {
  using DataError::DataError;
};

struct MissingMedia : DataError {
  using DataError::DataError;
};

struct InvalidAngles : DataError {
  using DataError::DataError;
};

struct UnsupportedVersion : DataError {
  using DataError::DataError;
};

struct CorruptContainer : DataError {
  using DataError::DataError;
};

/// View synthesis needs a model trained on raw intensities.
struct RawFeaturesRequired : DataError {
  using DataError::DataError;
};

/// Pose ambiguous at a 3-sphere pole; yaw/pitch cannot be separated.
struct GimbalDegenerate : NumericalError {
  using NumericalError::NumericalError;
};

/// The bordered system is rank-deficient beyond ridge repair.
struct SingularSystem : NumericalError {
  using NumericalError::NumericalError;
};

struct NumericalFailure : NumericalError {
  using NumericalError::NumericalError;
};

/// Every particle underflowed to zero likelihood; sigma too small for the
/// error scale.
struct AllZeroLikelihoods : NumericalError {
  using NumericalError::NumericalError;
};

}  // namespace hma
