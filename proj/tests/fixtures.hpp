#pragma once

// Shared builders for the synthetic turntable benchmark and the rotating-bar
// image set used by the mapping/inference/acceptance tests.

#include <Eigen/Dense>
#include <cmath>
#include <map>
#include <string>
#include <vector>

#include "hma/data.hpp"
#include "hma/factor.hpp"
#include "hma/grbf.hpp"
#include "hma/infer.hpp"
#include "hma/manifold.hpp"

namespace hma_tests {

struct Benchmark {
  hma::DatasetManifest manifest;
  hma::StyleSpace space;
  hma::LabeledStyleSet labels;
  std::vector<int> train_indices;
  std::vector<int> heldout_indices;
};

struct GroupedObject {
  std::string object_id;
  std::string category_id;
  Eigen::MatrixXd embeddings;    // N_k x e+
  Eigen::MatrixXd observations;  // N_k x D
};

/// Groups the training records of a manifest by object, in first-appearance
/// order. Only inline-feature manifests are supported here.
inline std::vector<GroupedObject> group_training(const hma::DatasetManifest& manifest) {
  std::vector<GroupedObject> groups;
  std::map<std::string, std::size_t> index;
  std::map<std::string, std::vector<const hma::ManifestRecord*>> rows;
  for (const auto& record : manifest.records) {
    if (record.is_test) continue;
    if (!index.count(record.object_id)) {
      index[record.object_id] = groups.size();
      groups.push_back({record.object_id, record.category_id, {}, {}});
    }
    rows[record.object_id].push_back(&record);
  }
  for (auto& group : groups) {
    const auto& list = rows[group.object_id];
    group.embeddings.resize(list.size(), hma::ambient_dim(manifest.manifold_case));
    group.observations.resize(list.size(), list.front()->inline_features.size());
    for (std::size_t i = 0; i < list.size(); ++i) {
      group.embeddings.row(i) = hma::embed(list[i]->pose).transpose();
      group.observations.row(i) = list[i]->inline_features.transpose();
    }
  }
  return groups;
}

/// The five-object synthetic turntable benchmark: K=5, N=72, D=40, H=3,
/// hold out every 4th view, thin-plate mapping with M uniform centers.
inline Benchmark build_benchmark(std::uint64_t seed, double noise_std = 0.01,
                                 int center_count = 12) {
  hma::SyntheticSpec spec;
  spec.object_count = 5;
  spec.views_per_object = 72;
  spec.feature_dim = 40;
  spec.harmonic_order = 3;
  spec.noise_std = noise_std;
  spec.seed = seed;
  spec.heldout_every = 4;

  Benchmark bench;
  bench.manifest = hma::generate_synthetic(spec);
  for (int i = 0; i < static_cast<int>(bench.manifest.records.size()); ++i) {
    (bench.manifest.records[i].is_test ? bench.heldout_indices : bench.train_indices)
        .push_back(i);
  }

  hma::KernelConfig kernel;
  kernel.basis = hma::BasisKind::ThinPlateSpline;
  kernel.centers = hma::place_centers(center_count, hma::ManifoldCase::YawOnly);
  kernel.ridge = 1e-8;

  std::vector<hma::MappingModel> models;
  const auto groups = group_training(bench.manifest);
  for (const auto& group : groups) {
    models.push_back(hma::fit_mapping(group.embeddings, group.observations, kernel));
    bench.labels.instance_ids.push_back(group.object_id);
    bench.labels.category_ids.push_back(group.category_id);
  }
  bench.space = hma::factorize_models(models);
  bench.labels.styles = bench.space.styles;
  return bench;
}

/// Soft asymmetric bar through the image center at the given angle; smooth in
/// both pixel position and angle, intensities in [0, 1].
inline Eigen::MatrixXd bar_image(double theta, int size) {
  Eigen::MatrixXd image(size, size);
  const double mid = (size - 1) / 2.0;
  const double width = size / 12.0;
  const double length = size / 2.8;
  const double c = std::cos(theta);
  const double s = std::sin(theta);
  for (int i = 0; i < size; ++i) {
    for (int j = 0; j < size; ++j) {
      const double u = j - mid;
      const double v = i - mid;
      const double along = u * c + v * s;
      const double across = -u * s + v * c;
      const double bar = std::exp(-(across * across) / (2.0 * width * width)) *
                         std::exp(-std::pow(along / length, 4.0));
      const double tip_u = u - length * c;
      const double tip_v = v - length * s;
      const double tip = 0.8 * std::exp(-(tip_u * tip_u + tip_v * tip_v) /
                                        (2.0 * width * width));
      image(i, j) = std::min(1.0, bar + tip);
    }
  }
  return image;
}

inline Eigen::VectorXd flatten_row_major(const Eigen::MatrixXd& image) {
  Eigen::VectorXd flat(image.size());
  for (int i = 0; i < image.rows(); ++i) {
    for (int j = 0; j < image.cols(); ++j) flat[i * image.cols() + j] = image(i, j);
  }
  return flat;
}

}  // namespace hma_tests
