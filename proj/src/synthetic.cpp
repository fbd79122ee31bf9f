#include <cmath>
#include <cstdio>

#include "hma/data.hpp"
#include "hma/errors.hpp"
#include "hma/rng.hpp"

namespace hma {

void SyntheticSpec::validate() const {
  if (object_count < 1) throw std::invalid_argument("object_count must be >= 1");
  if (views_per_object < 1) throw std::invalid_argument("views_per_object must be >= 1");
  if (harmonic_order < 1) throw std::invalid_argument("harmonic_order must be >= 1");
  if (feature_dim < 2 * harmonic_order) {
    throw std::invalid_argument("feature_dim must be >= 2 * harmonic_order");
  }
  if (noise_std < 0.0) throw std::invalid_argument("noise_std must be >= 0");
  if (heldout_every < 0 || heldout_every == 1) {
    throw std::invalid_argument("heldout_every must be 0 (no test split) or >= 2");
  }
}

DatasetManifest generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  DatasetManifest manifest;
  manifest.manifold_case = ManifoldCase::YawOnly;
  manifest.base_dir = ".";

  const int harmonics = spec.harmonic_order;
  RandomStream noise_rng(split_seed(spec.seed, 7));
  for (int k = 0; k < spec.object_count; ++k) {
    // Per-object curve coefficients come from their own stream so objects
    // stay stable when the count changes.
    RandomStream curve_rng(split_seed(spec.seed, 100 + static_cast<std::uint64_t>(k)));
    Eigen::MatrixXd curve(spec.feature_dim, 2 * harmonics);
    const double scale = 1.0 / std::sqrt(static_cast<double>(harmonics));
    for (int i = 0; i < curve.rows(); ++i) {
      for (int j = 0; j < curve.cols(); ++j) curve(i, j) = scale * curve_rng.normal();
    }

    for (int i = 0; i < spec.views_per_object; ++i) {
      const double theta = kTwoPi * i / spec.views_per_object;
      Eigen::VectorXd phases(2 * harmonics);
      for (int h = 1; h <= harmonics; ++h) {
        phases[2 * (h - 1)] = std::cos(h * theta);
        phases[2 * (h - 1) + 1] = std::sin(h * theta);
      }
      ManifestRecord record;
      record.inline_features = curve * phases;
      if (spec.noise_std > 0.0) {
        for (Eigen::Index d = 0; d < record.inline_features.size(); ++d) {
          record.inline_features[d] += spec.noise_std * noise_rng.normal();
        }
      }
      char object_name[32];
      std::snprintf(object_name, sizeof(object_name), "obj-%02d", k);
      char category_name[32];
      std::snprintf(category_name, sizeof(category_name), "cat-%02d", k / 2);
      record.object_id = object_name;
      record.category_id = category_name;
      record.yaw_deg = 360.0 * i / spec.views_per_object;
      record.is_test = spec.heldout_every > 0 && i % spec.heldout_every == 0;
      record.pose = PoseAngles::yaw_only(theta);
      manifest.records.push_back(std::move(record));
    }
  }
  manifest.validate();
  return manifest;
}

}  // namespace hma
