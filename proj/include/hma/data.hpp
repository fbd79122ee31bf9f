#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "hma/classify.hpp"
#include "hma/factor.hpp"
#include "hma/features.hpp"
#include "hma/manifold.hpp"

namespace hma {

/// One labeled view. Angles are stored in degrees exactly as written in the
/// manifest (the file convention); `pose` carries the radian equivalent used
/// by the API.
struct ManifestRecord {
  std::string media_path;          ///< empty for inline records
  Eigen::VectorXd inline_features; ///< size 0 for media-backed records
  std::string object_id;
  std::string category_id;
  double yaw_deg = 0.0;
  std::optional<double> pitch_deg;
  std::optional<double> roll_deg;
  bool is_test = false;
  PoseAngles pose;

  bool has_inline() const { return inline_features.size() > 0; }
};

struct DatasetManifest {
  int format_version = 1;
  ManifoldCase manifold_case = ManifoldCase::YawOnly;
  FeatureConfig feature_config;
  std::vector<ManifestRecord> records;
  std::filesystem::path base_dir;  ///< directory the manifest was loaded from

  void validate() const;
  /// Media path resolved against the manifest location.
  std::filesystem::path resolve_media(const ManifestRecord& record) const;
};

DatasetManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path);

/// Turntable stand-in: every object is a random truncated Fourier curve in
/// feature space, sampled at evenly spaced yaw angles.
struct SyntheticSpec {
  int object_count = 5;
  int views_per_object = 72;
  int feature_dim = 40;
  int harmonic_order = 3;
  double noise_std = 0.0;
  std::uint64_t seed = 0;
  int heldout_every = 4;  ///< every n-th view goes to the test split; 0 disables

  void validate() const;
};

DatasetManifest generate_synthetic(const SyntheticSpec& spec);

/// Everything needed to run inference: the factorized style space (kernel
/// inside), labeled training styles, and the featurization recipe.
struct ModelContainer {
  int format_version = 1;
  ManifoldCase manifold_case = ManifoldCase::YawOnly;
  StyleSpace space;
  LabeledStyleSet labels;
  FeatureConfig feature_config;
  std::uint64_t seed = 0;             ///< provenance
  std::string creation_params;        ///< provenance, free-form

  void validate() const;
};

/// Single-file container: magic, JSON header, raw little-endian float64
/// arrays, trailing CRC32. Round trips are bit-exact.
void save_model(const ModelContainer& container, const std::filesystem::path& path);
ModelContainer load_model(const std::filesystem::path& path);

}  // namespace hma
