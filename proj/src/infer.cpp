#include "hma/infer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hma/errors.hpp"
#include "hma/rng.hpp"

namespace hma {

void InferenceConfig::validate() const {
  if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
  if (viewpoint_count < 1) throw std::invalid_argument("viewpoint count must be >= 1");
  if (!(resample_std_style > 0.0)) throw std::invalid_argument("style std must be positive");
  if (!(resample_std_angle > 0.0)) throw std::invalid_argument("angle std must be positive");
  if (!(decay > 0.0) || decay > 1.0) throw std::invalid_argument("decay must be in (0, 1]");
}

double reconstruction_error(const StyleSpace& space, const Eigen::VectorXd& style,
                            const Eigen::VectorXd& x, const Eigen::VectorXd& y) {
  if (y.size() != space.feature_dim) {
    throw DimensionMismatch("feature vector length does not match the style space");
  }
  const MappingModel model = reconstruct_coefficients(space, style);
  return (y - evaluate_mapping(model, x)).squaredNorm();
}

double particle_likelihood(double error, double sigma) {
  if (!(sigma > 0.0)) throw std::invalid_argument("sigma must be positive");
  return std::exp(-error / (2.0 * sigma * sigma));
}

MarginalWeights marginal_weights(const Eigen::MatrixXd& likelihoods) {
  if (likelihoods.size() == 0) throw std::invalid_argument("empty likelihood matrix");
  if (likelihoods.minCoeff() < 0.0) {
    throw std::invalid_argument("likelihoods must be non-negative");
  }
  const double total = likelihoods.sum();
  if (!(total > 0.0)) {
    throw AllZeroLikelihoods("all particle likelihoods are zero; widen sigma");
  }
  MarginalWeights weights;
  weights.style_weights = likelihoods.rowwise().sum() / total;
  weights.viewpoint_weights = likelihoods.colwise().sum().transpose() / total;
  return weights;
}

namespace {

// D x d_s response of the style basis at one kernel feature vector: column j
// is unvec(basis_j) * psi, so error(s) = |y - response * s|^2.
Eigen::MatrixXd style_response(const StyleSpace& space, const Eigen::VectorXd& psi) {
  const int d = space.feature_dim;
  const int n_psi = space.kernel.feature_count();
  Eigen::MatrixXd response(d, space.style_dim());
  for (int j = 0; j < space.style_dim(); ++j) {
    const Eigen::Map<const Eigen::MatrixXd> slab(space.basis.col(j).data(), d, n_psi);
    response.col(j) = slab * psi;
  }
  return response;
}

struct Channel {
  const StyleSpace* space = nullptr;
  const Eigen::VectorXd* feature = nullptr;
  double weight = 1.0;
};

struct EngineResult {
  std::vector<Eigen::VectorXd> styles;  // per channel
  PoseAngles pose;
  double error = 0.0;
  std::vector<double> trace;
};

// One viewpoint particle, kept in the angle domain so perturbed samples stay
// on the manifold by construction.
struct ViewSample {
  PoseAngles angles;
  Eigen::VectorXd point;
};

ViewSample make_view(const PoseAngles& angles) { return {angles, embed(angles)}; }

ViewSample sample_uniform_view(ManifoldCase c, RandomStream& rng) {
  switch (c) {
    case ManifoldCase::YawOnly:
      return make_view(PoseAngles::yaw_only(rng.uniform(0.0, kTwoPi)));
    case ManifoldCase::YawPitch: {
      const double yaw = rng.uniform(0.0, kTwoPi);
      const double pitch = std::asin(rng.uniform(-1.0, 1.0));
      return make_view(PoseAngles::yaw_pitch(yaw, pitch));
    }
    case ManifoldCase::YawPitchRoll: {
      // Latitude density on the 3-sphere is proportional to cos^2; invert its
      // CDF by bisection on the drawn quantile.
      const double t = rng.uniform();
      double lo = -kPi / 2.0, hi = kPi / 2.0;
      for (int i = 0; i < 60; ++i) {
        const double mid = 0.5 * (lo + hi);
        const double cdf = (mid + std::sin(mid) * std::cos(mid) + kPi / 2.0) / kPi;
        (cdf < t ? lo : hi) = mid;
      }
      const double roll_limit = kPi / 2.0 - 1e-9;
      const double roll = std::clamp(0.5 * (lo + hi), -roll_limit, roll_limit);
      const double pitch = std::asin(rng.uniform(-1.0, 1.0));
      const double yaw = rng.uniform(0.0, kTwoPi);
      return make_view(PoseAngles::yaw_pitch_roll(yaw, pitch, roll));
    }
  }
  throw std::invalid_argument("unreachable manifold case");
}

ViewSample perturb_view(const ViewSample& parent, ManifoldCase c, double std_angle,
                        RandomStream& rng) {
  double yaw = parent.angles.yaw + std_angle * rng.normal();
  switch (c) {
    case ManifoldCase::YawOnly:
      return make_view(PoseAngles::yaw_only(yaw));
    case ManifoldCase::YawPitch: {
      double pitch = *parent.angles.pitch + std_angle * rng.normal();
      // Crossing a pole flips to the opposite meridian.
      while (std::abs(pitch) > kPi / 2.0) {
        pitch = (pitch > 0.0 ? kPi : -kPi) - pitch;
        yaw += kPi;
      }
      return make_view(PoseAngles::yaw_pitch(yaw, pitch));
    }
    case ManifoldCase::YawPitchRoll: {
      double pitch = *parent.angles.pitch + std_angle * rng.normal();
      double roll = *parent.angles.roll + std_angle * rng.normal();
      while (std::abs(pitch) > kPi / 2.0) {
        pitch = (pitch > 0.0 ? kPi : -kPi) - pitch;
        yaw += kPi;
      }
      const double roll_limit = kPi / 2.0 - 1e-9;
      roll = std::clamp(roll, -roll_limit, roll_limit);
      return make_view(PoseAngles::yaw_pitch_roll(yaw, pitch, roll));
    }
  }
  throw std::invalid_argument("unreachable manifold case");
}

// Shared particle engine. Style populations hold K samples per channel and
// evolve jointly (one parent index drives every channel); viewpoints are a
// separate population of L angle-domain samples. Random draws are split into
// fixed streams (selection / per-channel style noise / viewpoint) so adding a
// channel does not disturb the draws of the others.
EngineResult run_particle_engine(const std::vector<Channel>& channels,
                                 const InferenceConfig& config) {
  config.validate();
  if (channels.empty()) throw std::invalid_argument("no channels");
  const StyleSpace& lead = *channels.front().space;
  const ManifoldCase manifold = case_for_ambient_dim(lead.kernel.embed_dim());
  const int object_count = lead.object_count();
  for (const Channel& channel : channels) {
    channel.space->validate();
    if (channel.space->kernel.embed_dim() != lead.kernel.embed_dim()) {
      throw ConfigMismatch("channels span different conceptual manifolds");
    }
    if (channel.space->object_count() != object_count) {
      throw ConfigMismatch("channels hold different numbers of training styles");
    }
    if (channel.feature->size() != channel.space->feature_dim) {
      throw DimensionMismatch("feature vector length does not match its style space");
    }
    if (!(channel.weight > 0.0)) throw std::invalid_argument("channel weights must be positive");
  }

  const int num_channels = static_cast<int>(channels.size());
  const int num_views = config.viewpoint_count;

  RandomStream view_rng(split_seed(config.seed, 0));
  RandomStream select_rng(split_seed(config.seed, 10));
  RandomStream style_rng(split_seed(config.seed, 1));

  // Style populations start at the learned style vectors; the perturbation
  // scale follows the RMS norm of those columns.
  std::vector<Eigen::MatrixXd> styles(num_channels);
  std::vector<double> style_scale(num_channels);
  int max_style_dim = 0;
  for (int c = 0; c < num_channels; ++c) {
    styles[c] = channels[c].space->styles;
    style_scale[c] = std::sqrt(styles[c].colwise().squaredNorm().mean());
    if (!(style_scale[c] > 0.0)) style_scale[c] = 1.0;
    max_style_dim = std::max(max_style_dim, static_cast<int>(styles[c].rows()));
  }

  std::vector<ViewSample> views;
  views.reserve(num_views);
  for (int l = 0; l < num_views; ++l) views.push_back(sample_uniform_view(manifold, view_rng));

  double sigma = config.sigma;
  int widenings = 0;

  EngineResult best;
  best.styles.resize(num_channels);
  best.error = std::numeric_limits<double>::infinity();
  best.trace.reserve(config.iterations);

  Eigen::MatrixXd errors(object_count, num_views);
  for (int iter = 0; iter < config.iterations; ++iter) {
    errors.setZero();
    for (int l = 0; l < num_views; ++l) {
      for (int c = 0; c < num_channels; ++c) {
        const Eigen::VectorXd psi = kernel_map(views[l].point, channels[c].space->kernel);
        const Eigen::MatrixXd response = style_response(*channels[c].space, psi);
        const Eigen::MatrixXd residual =
            (response * styles[c]).colwise() - *channels[c].feature;
        errors.col(l) += channels[c].weight * residual.colwise().squaredNorm().transpose();
      }
    }

    if (iter == 0 && !(sigma > 0.0)) {
      std::vector<double> flat(errors.data(), errors.data() + errors.size());
      std::sort(flat.begin(), flat.end());
      const std::size_t n = flat.size();
      double median = n % 2 == 1 ? flat[n / 2] : 0.5 * (flat[n / 2 - 1] + flat[n / 2]);
      if (!(median > 0.0)) median = errors.mean();
      sigma = median > 0.0 ? std::sqrt(median) : 1.0;
    }

    // Scalar std::exp: the vectorized exp turns -inf into a subnormal
    // instead of 0, which would mask genuine underflow here.
    Eigen::MatrixXd likelihoods(object_count, num_views);
    const auto fill_likelihoods = [&] {
      const double denom = 2.0 * sigma * sigma;
      for (int k = 0; k < object_count; ++k) {
        for (int l = 0; l < num_views; ++l) {
          likelihoods(k, l) = std::exp(-errors(k, l) / denom);
        }
      }
    };
    fill_likelihoods();
    while (!(likelihoods.sum() > 0.0)) {
      if (++widenings > 3) {
        throw AllZeroLikelihoods("likelihoods underflow even after widening sigma 3 times");
      }
      sigma *= 10.0;
      fill_likelihoods();
    }
    const MarginalWeights weights = marginal_weights(likelihoods);

    int best_k = 0, best_l = 0;
    double iteration_best = std::numeric_limits<double>::infinity();
    for (int k = 0; k < object_count; ++k) {
      for (int l = 0; l < num_views; ++l) {
        if (errors(k, l) < iteration_best) {
          iteration_best = errors(k, l);
          best_k = k;
          best_l = l;
        }
      }
    }
    if (iteration_best < best.error) {
      best.error = iteration_best;
      for (int c = 0; c < num_channels; ++c) best.styles[c] = styles[c].col(best_k);
      best.pose = views[best_l].angles;
    }
    best.trace.push_back(best.error);

    if (iter + 1 == config.iterations) break;

    // Resample around weight-chosen parents with geometrically cooled noise;
    // the best particle survives verbatim in slot 0 of both populations. One
    // noise buffer per slot is shared by every channel, so duplicated
    // channels evolve identically to a single-channel run.
    const double cooling = std::pow(config.decay, iter);
    std::vector<Eigen::MatrixXd> next_styles(num_channels);
    for (int c = 0; c < num_channels; ++c) {
      next_styles[c].resizeLike(styles[c]);
      next_styles[c].col(0) = best.styles[c];
    }
    Eigen::VectorXd noise(max_style_dim);
    for (int i = 1; i < object_count; ++i) {
      const int parent =
          select_rng.categorical(weights.style_weights.data(), object_count);
      for (Eigen::Index d = 0; d < noise.size(); ++d) noise[d] = style_rng.normal();
      for (int c = 0; c < num_channels; ++c) {
        const double noise_std = config.resample_std_style * style_scale[c] * cooling;
        next_styles[c].col(i) =
            styles[c].col(parent) + noise_std * noise.head(styles[c].rows());
      }
    }
    styles = std::move(next_styles);

    std::vector<ViewSample> next_views;
    next_views.reserve(num_views);
    next_views.push_back(make_view(best.pose));
    const double angle_std = config.resample_std_angle * cooling;
    for (int l = 1; l < num_views; ++l) {
      const int parent = view_rng.categorical(weights.viewpoint_weights.data(), num_views);
      next_views.push_back(perturb_view(views[parent], manifold, angle_std, view_rng));
    }
    views = std::move(next_views);
  }
  return best;
}

}  // namespace

InferenceResult infer(const StyleSpace& space, const Eigen::VectorXd& y,
                      const InferenceConfig& config) {
  const EngineResult raw = run_particle_engine({{&space, &y, 1.0}}, config);
  InferenceResult result;
  result.style = raw.styles[0];
  result.pose = raw.pose;
  result.reconstruction_error = raw.error;
  result.trace = raw.trace;
  return result;
}

MultimodalResult infer_multimodal(const StyleSpace& space_a, const StyleSpace& space_b,
                                  const Eigen::VectorXd& y_a, const Eigen::VectorXd& y_b,
                                  double weight_a, double weight_b,
                                  const InferenceConfig& config) {
  if (!(weight_a > 0.0) || !(weight_b > 0.0)) {
    throw std::invalid_argument("channel weights must be positive");
  }
  const EngineResult raw =
      run_particle_engine({{&space_a, &y_a, weight_a}, {&space_b, &y_b, weight_b}}, config);
  MultimodalResult result;
  result.style_a = raw.styles[0];
  result.style_b = raw.styles[1];
  result.combined_style.resize(result.style_a.size() + result.style_b.size());
  result.combined_style << weight_a * result.style_a, weight_b * result.style_b;
  result.pose = raw.pose;
  result.fused_error = raw.error;
  result.trace = raw.trace;
  return result;
}

InferenceResult grid_oracle(const StyleSpace& space, const Eigen::VectorXd& y,
                            double angular_resolution) {
  space.validate();
  if (space.kernel.embed_dim() != 2) {
    throw std::invalid_argument("grid oracle requires a viewing-circle manifold");
  }
  if (!(angular_resolution > 0.0)) throw std::invalid_argument("resolution must be positive");
  if (y.size() != space.feature_dim) {
    throw DimensionMismatch("feature vector length does not match the style space");
  }
  const int steps = std::max(1, static_cast<int>(std::floor(kTwoPi / angular_resolution + 1e-9)));

  InferenceResult best;
  best.reconstruction_error = std::numeric_limits<double>::infinity();
  for (int g = 0; g < steps; ++g) {
    const double theta = g * angular_resolution;
    const PoseAngles pose = PoseAngles::yaw_only(theta);
    const Eigen::VectorXd psi = kernel_map(embed(pose), space.kernel);
    const Eigen::MatrixXd response = style_response(space, psi);
    for (int k = 0; k < space.object_count(); ++k) {
      const double error = (y - response * space.styles.col(k)).squaredNorm();
      if (error < best.reconstruction_error) {
        best.reconstruction_error = error;
        best.style = space.styles.col(k);
        best.pose = pose;
      }
    }
  }
  best.trace = {best.reconstruction_error};
  return best;
}

std::pair<PoseAngles, double> viewpoint_given_style(const StyleSpace& space,
                                                    const Eigen::VectorXd& style,
                                                    const Eigen::VectorXd& y,
                                                    double resolution) {
  space.validate();
  if (space.kernel.embed_dim() != 2) {
    throw std::invalid_argument("viewpoint search requires a viewing-circle manifold");
  }
  if (!(resolution > 0.0)) throw std::invalid_argument("resolution must be positive");
  if (style.size() != space.style_dim()) {
    throw DimensionMismatch("style vector length does not match the style space");
  }

  const auto error_at = [&](double theta) {
    const Eigen::VectorXd psi =
        kernel_map(embed(PoseAngles::yaw_only(wrap_angle(theta))), space.kernel);
    return (y - style_response(space, psi) * style).squaredNorm();
  };

  const int steps = std::max(1, static_cast<int>(std::floor(kTwoPi / resolution + 1e-9)));
  double best_theta = 0.0;
  double best_error = std::numeric_limits<double>::infinity();
  for (int g = 0; g < steps; ++g) {
    const double theta = g * resolution;
    const double error = error_at(theta);
    if (error < best_error) {
      best_error = error;
      best_theta = theta;
    }
  }

  // Golden-section refinement on the winning bracket.
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = best_theta - resolution;
  double hi = best_theta + resolution;
  double c = hi - inv_phi * (hi - lo);
  double d = lo + inv_phi * (hi - lo);
  double error_c = error_at(c);
  double error_d = error_at(d);
  for (int i = 0; i < 100 && (hi - lo) > 1e-7; ++i) {
    if (error_c < error_d) {
      hi = d;
      d = c;
      error_d = error_c;
      c = hi - inv_phi * (hi - lo);
      error_c = error_at(c);
    } else {
      lo = c;
      c = d;
      error_c = error_d;
      d = lo + inv_phi * (hi - lo);
      error_d = error_at(d);
    }
  }
  const double refined = 0.5 * (lo + hi);
  const double refined_error = error_at(refined);
  if (refined_error < best_error) {
    best_error = refined_error;
    best_theta = refined;
  }
  return {PoseAngles::yaw_only(wrap_angle(best_theta)), best_error};
}

}  // namespace hma
