// Command line front end: train, infer, synthesize, evaluate, cross-validate
// and gen-synthetic subcommands over the hma core library.

#include <CLI11.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "hma/classify.hpp"
#include "hma/data.hpp"
#include "hma/errors.hpp"
#include "hma/factor.hpp"
#include "hma/features.hpp"
#include "hma/grbf.hpp"
#include "hma/image_io.hpp"
#include "hma/infer.hpp"
#include "hma/manifold.hpp"

namespace {

using namespace hma;

constexpr double kRadToDeg = 180.0 / kPi;
constexpr double kDegToRad = kPi / 180.0;

// ---------------------------------------------------------------------------
// output helpers

std::string fmt_full(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

std::string fmt_short(double v) {
  char buffer[40];
  std::snprintf(buffer, sizeof(buffer), "%.6g", v);
  return buffer;
}

using Fields = std::vector<std::pair<std::string, std::string>>;

struct Output {
  bool records = false;

  // one machine line: type <tab> key=value ...
  void emit(const std::string& type, const Fields& fields) const {
    if (!records) return;
    std::string line = type;
    for (const auto& [key, value] : fields) line += "\t" + key + "=" + value;
    std::cout << line << "\n";
  }

  void text(const std::string& line) const {
    if (!records) std::cout << line << "\n";
  }
};

struct GlobalOptions {
  std::uint64_t seed = 0;
  int threads = 0;  // 0: HMA_THREADS or 1
  std::string output_format = "text";
  std::string log_path;

  int resolved_threads() const {
    if (threads > 0) return threads;
    if (const char* env = std::getenv("HMA_THREADS")) {
      const int n = std::atoi(env);
      if (n > 0) return n;
    }
    return 1;
  }
  Output output() const { return Output{output_format == "records"}; }
};

void append_run_record(const GlobalOptions& global, const std::string& command,
                       double wall_ms, const Fields& metrics) {
  if (global.log_path.empty()) return;
  std::ofstream log(global.log_path, std::ios::app);
  std::string line = "run\tcommand=" + command + "\tseed=" + std::to_string(global.seed) +
                     "\twall_ms=" + fmt_short(wall_ms);
  for (const auto& [key, value] : metrics) line += "\t" + key + "=" + value;
  log << line << "\n";
}

// ---------------------------------------------------------------------------
// bounded worker pool; results keyed by index so output order is fixed

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  threads = std::min(std::max(threads, 1), std::max(count, 1));
  if (threads == 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next.fetch_add(1); i < count; i = next.fetch_add(1)) {
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(failure_mutex);
          if (!failure) failure = std::current_exception();
          return;
        }
      }
    });
  }
  for (std::thread& worker : pool) worker.join();
  if (failure) std::rethrow_exception(failure);
}

// ---------------------------------------------------------------------------
// featurization and training pipeline

Eigen::VectorXd featurize_record(const DatasetManifest& manifest, const ManifestRecord& record,
                                 const FeatureConfig& config) {
  if (record.has_inline()) return record.inline_features;
  return extract(read_image(manifest.resolve_media(record)), config).values;
}

struct ObjectViews {
  std::string object_id;
  std::string category_id;
  std::vector<int> record_indices;  // into manifest.records
};

std::vector<ObjectViews> group_train_objects(const DatasetManifest& manifest) {
  std::vector<ObjectViews> groups;
  std::map<std::string, std::size_t> position;
  for (int i = 0; i < static_cast<int>(manifest.records.size()); ++i) {
    const ManifestRecord& record = manifest.records[i];
    if (record.is_test) continue;
    auto [it, inserted] = position.try_emplace(record.object_id, groups.size());
    if (inserted) groups.push_back({record.object_id, record.category_id, {}});
    ObjectViews& group = groups[it->second];
    if (record.category_id != group.category_id) {
      throw DataError("object '" + record.object_id + "' appears under categories '" +
                      group.category_id + "' and '" + record.category_id + "'");
    }
    group.record_indices.push_back(i);
  }
  if (groups.empty()) throw DataError("manifest has no training records");
  return groups;
}

struct TrainOptions {
  int center_count = 35;
  std::string centers_mode = "uniform";  // uniform | data
  std::string basis = "thin_plate_spline";
  double shape = 1.0;
  double ridge = 1e-8;
  int style_dim = 0;  // 0: full
};

struct TrainedModel {
  StyleSpace space;
  LabeledStyleSet labels;
  std::vector<double> max_rel_residual;  // per object
  std::vector<double> mean_rel_residual;
};

Eigen::MatrixXd embeddings_of(const DatasetManifest& manifest, const std::vector<int>& indices) {
  Eigen::MatrixXd embeddings(indices.size(), ambient_dim(manifest.manifold_case));
  for (std::size_t r = 0; r < indices.size(); ++r) {
    embeddings.row(r) = embed(manifest.records[indices[r]].pose).transpose();
  }
  return embeddings;
}

TrainedModel train_model(const DatasetManifest& manifest,
                         const std::vector<ObjectViews>& groups,
                         const std::vector<Eigen::VectorXd>& features,  // per record index
                         const TrainOptions& options, int threads) {
  KernelConfig kernel;
  kernel.basis = basis_from_string(options.basis);
  kernel.shape = options.shape;
  kernel.ridge = options.ridge;
  if (options.centers_mode == "data") {
    const Eigen::MatrixXd shared = embeddings_of(manifest, groups.front().record_indices);
    for (const ObjectViews& group : groups) {
      const Eigen::MatrixXd own = embeddings_of(manifest, group.record_indices);
      if (own.rows() != shared.rows() || (own - shared).norm() > 1e-12) {
        throw DataError("--centers data needs identical training poses for every object");
      }
    }
    kernel.centers = shared;
  } else if (options.centers_mode == "uniform") {
    std::size_t fewest = std::numeric_limits<std::size_t>::max();
    std::string smallest_object;
    for (const ObjectViews& group : groups) {
      if (group.record_indices.size() < fewest) {
        fewest = group.record_indices.size();
        smallest_object = group.object_id;
      }
    }
    if (static_cast<std::size_t>(options.center_count) > fewest) {
      std::cerr << "warning: M=" << options.center_count << " exceeds the " << fewest
                << " training views of object '" << smallest_object
                << "'; the mapping problem is ill-posed. Lower --M or add views.\n";
      throw DataError("refusing ill-posed training (M > training views)");
    }
    kernel.centers = place_centers(options.center_count, manifest.manifold_case);
  } else {
    throw std::invalid_argument("--centers must be 'uniform' or 'data'");
  }

  std::vector<MappingModel> models(groups.size());
  TrainedModel trained;
  trained.max_rel_residual.resize(groups.size());
  trained.mean_rel_residual.resize(groups.size());
  parallel_for(static_cast<int>(groups.size()), threads, [&](int g) {
    const ObjectViews& group = groups[g];
    const Eigen::MatrixXd embeddings = embeddings_of(manifest, group.record_indices);
    Eigen::MatrixXd observations(group.record_indices.size(), features[group.record_indices[0]].size());
    for (std::size_t r = 0; r < group.record_indices.size(); ++r) {
      observations.row(r) = features[group.record_indices[r]].transpose();
    }
    try {
      models[g] = fit_mapping(embeddings, observations, kernel);
    } catch (const std::exception& e) {
      throw DataError("object '" + group.object_id + "': " + e.what());
    }
    double worst = 0.0, total = 0.0;
    for (std::size_t r = 0; r < group.record_indices.size(); ++r) {
      const Eigen::VectorXd out = evaluate_mapping(models[g], embeddings.row(r).transpose());
      const double rel = (out - observations.row(r).transpose()).norm() /
                         std::max(observations.row(r).norm(), 1e-300);
      worst = std::max(worst, rel);
      total += rel;
    }
    trained.max_rel_residual[g] = worst;
    trained.mean_rel_residual[g] = total / group.record_indices.size();
  });

  trained.space = factorize_models(
      models, options.style_dim > 0 ? std::optional<int>(options.style_dim) : std::nullopt);
  trained.labels.styles = trained.space.styles;
  for (const ObjectViews& group : groups) {
    trained.labels.instance_ids.push_back(group.object_id);
    trained.labels.category_ids.push_back(group.category_id);
  }
  return trained;
}

// ---------------------------------------------------------------------------
// shared inference plumbing

struct InferenceFlags {
  int iterations = 30;
  double sigma = 0.0;
  int viewpoints = 36;
  double resample_std_style = 0.25;
  double resample_std_angle_deg = 20.0;
  double decay = 0.85;
  bool oracle = false;
  double resolution_deg = 1.0;
  int knn_k = 1;

  InferenceConfig config(std::uint64_t seed) const {
    InferenceConfig config;
    config.iterations = iterations;
    config.sigma = sigma;
    config.viewpoint_count = viewpoints;
    config.resample_std_style = resample_std_style;
    config.resample_std_angle = resample_std_angle_deg * kDegToRad;
    config.decay = decay;
    config.seed = seed;
    return config;
  }

  void add_to(CLI::App* cmd) {
    cmd->add_option("--iterations", iterations, "sampler iterations")->capture_default_str();
    cmd->add_option("--sigma", sigma, "likelihood scale; 0 selects it automatically")
        ->capture_default_str();
    cmd->add_option("--viewpoints", viewpoints, "viewpoint sample count")->capture_default_str();
    cmd->add_option("--resample-std-style", resample_std_style,
                    "style perturbation, in units of the mean style norm")
        ->capture_default_str();
    cmd->add_option("--resample-std-angle", resample_std_angle_deg,
                    "viewpoint perturbation in degrees")
        ->capture_default_str();
    cmd->add_option("--decay", decay, "per-iteration cooling factor")->capture_default_str();
    cmd->add_flag("--oracle", oracle, "use the exhaustive grid search instead of sampling");
    cmd->add_option("--resolution", resolution_deg, "grid resolution in degrees")
        ->capture_default_str();
    cmd->add_option("--knn-k", knn_k, "neighbors for the style classifier")
        ->capture_default_str();
  }
};

InferenceResult run_inference(const StyleSpace& space, const Eigen::VectorXd& features,
                              const InferenceFlags& flags, std::uint64_t seed) {
  if (flags.oracle) return grid_oracle(space, features, flags.resolution_deg * kDegToRad);
  return infer(space, features, flags.config(seed));
}

// ---------------------------------------------------------------------------
// subcommand options

struct TrainCmd {
  std::string manifest_path;
  std::string model_path;
  TrainOptions options;
};

struct InferCmd {
  std::string model_path;
  std::string input_path;
  std::string input_kind = "auto";  // auto | image | features
  InferenceFlags flags;
};

struct SynthesizeCmd {
  std::string model_path;
  std::string object_id;
  int object_index = -1;
  double yaw_deg = 0.0;
  double pitch_deg = 0.0;
  double roll_deg = 0.0;
  std::string out_path;
  std::string reference_path;
};

struct EvaluateCmd {
  std::string model_path;
  std::string manifest_path;
  InferenceFlags flags;
};

struct CrossValidateCmd {
  std::string manifest_path;
  std::vector<int> center_grid = {35};
  std::vector<int> hog_grid;
  int folds = 0;  // 0: leave-one-object-out
  std::string sampler = "oracle";  // oracle | particle
  InferenceFlags flags;
  TrainOptions train;
};

struct GenSyntheticCmd {
  SyntheticSpec spec;
  std::string out_path;
};

// ---------------------------------------------------------------------------
// command implementations

void cmd_train(const GlobalOptions& global, const TrainCmd& cmd,
               const std::string& command_line) {
  const auto started = std::chrono::steady_clock::now();
  const Output out = global.output();
  const DatasetManifest manifest = load_manifest(cmd.manifest_path);
  const std::vector<ObjectViews> groups = group_train_objects(manifest);

  std::vector<Eigen::VectorXd> features(manifest.records.size());
  std::vector<int> train_records;
  for (const ObjectViews& group : groups) {
    train_records.insert(train_records.end(), group.record_indices.begin(),
                         group.record_indices.end());
  }
  parallel_for(static_cast<int>(train_records.size()), global.resolved_threads(), [&](int i) {
    const int idx = train_records[i];
    features[idx] = featurize_record(manifest, manifest.records[idx], manifest.feature_config);
  });

  const TrainedModel trained =
      train_model(manifest, groups, features, cmd.options, global.resolved_threads());

  for (std::size_t g = 0; g < groups.size(); ++g) {
    out.text("object " + groups[g].object_id + ": views=" +
             std::to_string(groups[g].record_indices.size()) +
             " max_rel_residual=" + fmt_short(trained.max_rel_residual[g]) +
             " mean_rel_residual=" + fmt_short(trained.mean_rel_residual[g]));
    out.emit("train.object",
             {{"object", groups[g].object_id},
              {"views", std::to_string(groups[g].record_indices.size())},
              {"max_rel_residual", fmt_full(trained.max_rel_residual[g])},
              {"mean_rel_residual", fmt_full(trained.mean_rel_residual[g])}});
  }
  std::string spectrum;
  for (int i = 0; i < trained.space.singular_values.size(); ++i) {
    spectrum += (i ? " " : "") + fmt_short(trained.space.singular_values[i]);
    out.emit("train.spectrum", {{"index", std::to_string(i)},
                                {"sigma", fmt_full(trained.space.singular_values[i])}});
  }
  out.text("singular values: " + spectrum);

  ModelContainer container;
  container.manifold_case = manifest.manifold_case;
  container.space = trained.space;
  container.labels = trained.labels;
  container.feature_config = manifest.feature_config;
  container.seed = global.seed;
  container.creation_params = command_line;
  save_model(container, cmd.model_path);

  out.text("model written to " + cmd.model_path);
  out.emit("train.model", {{"path", cmd.model_path},
                           {"objects", std::to_string(trained.labels.size())},
                           {"style_dim", std::to_string(trained.space.style_dim())},
                           {"feature_dim", std::to_string(trained.space.feature_dim)}});
  const double wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
          .count();
  append_run_record(global, command_line, wall_ms,
                    {{"objects", std::to_string(trained.labels.size())}});
}

Eigen::VectorXd load_feature_input(const InferCmd& cmd, const ModelContainer& model) {
  const std::filesystem::path path(cmd.input_path);
  std::string kind = cmd.input_kind;
  if (kind == "auto") {
    const std::string ext = path.extension().string();
    kind = (ext == ".pgm" || ext == ".png" || ext == ".PGM" || ext == ".PNG") ? "image"
                                                                              : "features";
  }
  if (kind == "image") {
    return extract(read_image(path), model.feature_config).values;
  }
  std::ifstream in(path);
  if (!in) throw DataError("cannot open feature input " + path.string());
  std::vector<double> values;
  double v = 0.0;
  while (in >> v) values.push_back(v);
  Eigen::VectorXd features(values.size());
  for (std::size_t i = 0; i < values.size(); ++i) features[i] = values[i];
  if (features.size() != model.space.feature_dim) {
    throw DimensionMismatch("input has " + std::to_string(features.size()) +
                            " values; the model expects " +
                            std::to_string(model.space.feature_dim));
  }
  return features;
}

void emit_pose_fields(Fields& fields, const PoseAngles& pose) {
  fields.push_back({"yaw_deg", fmt_full(pose.yaw * kRadToDeg)});
  if (pose.pitch) fields.push_back({"pitch_deg", fmt_full(*pose.pitch * kRadToDeg)});
  if (pose.roll) fields.push_back({"roll_deg", fmt_full(*pose.roll * kRadToDeg)});
}

void cmd_infer(const GlobalOptions& global, const InferCmd& cmd) {
  const Output out = global.output();
  const ModelContainer model = load_model(cmd.model_path);
  const Eigen::VectorXd features = load_feature_input(cmd, model);

  const InferenceResult result = run_inference(model.space, features, cmd.flags, global.seed);
  const std::string category =
      knn_classify(model.labels, result.style, cmd.flags.knn_k, LabelTarget::Category);
  const std::string instance =
      knn_classify(model.labels, result.style, cmd.flags.knn_k, LabelTarget::Instance);

  std::string pose_text = "yaw=" + fmt_short(result.pose.yaw * kRadToDeg) + " deg";
  if (result.pose.pitch) pose_text += " pitch=" + fmt_short(*result.pose.pitch * kRadToDeg);
  if (result.pose.roll) pose_text += " roll=" + fmt_short(*result.pose.roll * kRadToDeg);
  out.text(pose_text);
  out.text("category=" + category + " instance=" + instance);
  out.text("reconstruction_error=" + fmt_short(result.reconstruction_error));

  Fields fields;
  emit_pose_fields(fields, result.pose);
  fields.push_back({"category", category});
  fields.push_back({"instance", instance});
  fields.push_back({"error", fmt_full(result.reconstruction_error)});
  out.emit("infer.result", fields);
  for (std::size_t i = 0; i < result.trace.size(); ++i) {
    out.emit("infer.trace",
             {{"iteration", std::to_string(i)}, {"best_error", fmt_full(result.trace[i])}});
  }
  if (!out.records && result.trace.size() > 1) {
    out.text("trace: " + fmt_short(result.trace.front()) + " -> " +
             fmt_short(result.trace.back()) + " over " + std::to_string(result.trace.size()) +
             " iterations");
  }
}

void cmd_synthesize(const GlobalOptions& global, const SynthesizeCmd& cmd) {
  const Output out = global.output();
  const ModelContainer model = load_model(cmd.model_path);
  if (model.feature_config.kind != FeatureKind::Raw) {
    throw RawFeaturesRequired("view synthesis needs a model trained on raw intensities");
  }

  int index = cmd.object_index;
  if (!cmd.object_id.empty()) {
    for (int i = 0; i < model.labels.size(); ++i) {
      if (model.labels.instance_ids[i] == cmd.object_id) index = i;
    }
    if (index < 0) throw DataError("unknown object '" + cmd.object_id + "'");
  }
  if (index < 0 || index >= model.labels.size()) {
    throw DataError("choose an object with --object or --object-index");
  }

  const PoseAngles pose =
      PoseAngles::for_case(model.manifold_case, cmd.yaw_deg * kDegToRad,
                           cmd.pitch_deg * kDegToRad, cmd.roll_deg * kDegToRad);
  const MappingModel mapping =
      reconstruct_coefficients(model.space, model.labels.styles.col(index));
  const Eigen::MatrixXd image = synthesize_view(
      mapping, pose, model.feature_config.resize_rows, model.feature_config.resize_cols);
  write_image(cmd.out_path, 255.0 * image);

  Fields fields{{"path", cmd.out_path}, {"object", model.labels.instance_ids[index]}};
  out.text("synthesized view written to " + cmd.out_path);
  if (!cmd.reference_path.empty()) {
    const Eigen::MatrixXd reference = read_image(cmd.reference_path);
    const double mse = synthesis_mse(reference, 255.0 * image);
    out.text("mse=" + fmt_short(mse) + " (8-bit scale)");
    fields.push_back({"mse", fmt_full(mse)});
  }
  out.emit("synthesize.image", fields);
}

struct EvalRow {
  int record_index = 0;
  std::uint64_t seed = 0;
  PosePrediction predicted;
  PosePrediction truth;
  double error = 0.0;
};

void cmd_evaluate(const GlobalOptions& global, const EvaluateCmd& cmd,
                  const std::string& command_line) {
  const auto started = std::chrono::steady_clock::now();
  const Output out = global.output();
  const ModelContainer model = load_model(cmd.model_path);
  const DatasetManifest manifest = load_manifest(cmd.manifest_path);
  if (manifest.manifold_case != model.manifold_case) {
    throw ConfigMismatch("manifest and model disagree on the manifold case");
  }

  std::vector<int> test_records;
  for (int i = 0; i < static_cast<int>(manifest.records.size()); ++i) {
    if (manifest.records[i].is_test) test_records.push_back(i);
  }
  if (test_records.empty()) throw DataError("manifest has no test records");

  std::vector<EvalRow> rows(test_records.size());
  parallel_for(static_cast<int>(test_records.size()), global.resolved_threads(), [&](int r) {
    const int idx = test_records[r];
    const ManifestRecord& record = manifest.records[idx];
    const Eigen::VectorXd features =
        featurize_record(manifest, record, model.feature_config);
    if (features.size() != model.space.feature_dim) {
      throw DimensionMismatch("record features do not match the model feature dimension");
    }
    EvalRow row;
    row.record_index = idx;
    row.seed = global.seed + static_cast<std::uint64_t>(idx);
    const InferenceResult result = run_inference(model.space, features, cmd.flags, row.seed);
    row.predicted.pose = result.pose;
    row.predicted.category =
        knn_classify(model.labels, result.style, cmd.flags.knn_k, LabelTarget::Category);
    row.predicted.instance =
        knn_classify(model.labels, result.style, cmd.flags.knn_k, LabelTarget::Instance);
    row.truth = {record.pose, record.category_id, record.object_id};
    row.error = result.reconstruction_error;
    rows[r] = row;
  });

  std::vector<PosePrediction> predictions, truths;
  for (const EvalRow& row : rows) {
    predictions.push_back(row.predicted);
    truths.push_back(row.truth);
    const double ae_deg = angular_error(row.predicted.pose.yaw, row.truth.pose.yaw) * kRadToDeg;
    Fields fields{{"index", std::to_string(row.record_index)},
                  {"seed", std::to_string(row.seed)},
                  {"object", row.truth.instance}};
    fields.push_back({"yaw_true_deg", fmt_full(row.truth.pose.yaw * kRadToDeg)});
    fields.push_back({"yaw_est_deg", fmt_full(row.predicted.pose.yaw * kRadToDeg)});
    fields.push_back({"ae_deg", fmt_full(ae_deg)});
    fields.push_back({"category_true", row.truth.category});
    fields.push_back({"category_est", row.predicted.category});
    fields.push_back({"instance_true", row.truth.instance});
    fields.push_back({"instance_est", row.predicted.instance});
    fields.push_back({"error", fmt_full(row.error)});
    out.emit("eval.record", fields);
  }

  const EvalReport report = evaluate(predictions, truths);
  out.text("records evaluated: " + std::to_string(rows.size()));
  out.text("MAE: " + fmt_short(report.mae_degrees) + " deg");
  out.text("AE<22.5: " + fmt_short(report.pct_ae_under_22_5) + "%   AE<45: " +
           fmt_short(report.pct_ae_under_45) + "%");
  out.text("category accuracy: " + fmt_short(report.category_accuracy) +
           "%   instance accuracy: " + fmt_short(report.instance_accuracy) + "%");
  out.text("pose accuracy (conditioned on correct category): " +
           fmt_short(report.pose_accuracy_given_correct_category) + "%");
  out.text("pose accuracy (zero when misclassified): " +
           fmt_short(report.pose_accuracy_zero_if_misclassified) + "%");

  const Fields summary{
      {"count", std::to_string(rows.size())},
      {"mae_degrees", fmt_full(report.mae_degrees)},
      {"pct_ae_under_22_5", fmt_full(report.pct_ae_under_22_5)},
      {"pct_ae_under_45", fmt_full(report.pct_ae_under_45)},
      {"category_accuracy", fmt_full(report.category_accuracy)},
      {"instance_accuracy", fmt_full(report.instance_accuracy)},
      {"pose_accuracy_given_correct_category",
       fmt_full(report.pose_accuracy_given_correct_category)},
      {"pose_accuracy_zero_if_misclassified",
       fmt_full(report.pose_accuracy_zero_if_misclassified)}};
  out.emit("eval.summary", summary);
  const double wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
          .count();
  append_run_record(global, command_line, wall_ms, summary);
}

struct CvMetrics {
  double mae = 0.0;
  double pct_22_5 = 0.0;
  double pct_45 = 0.0;
};

void cmd_cross_validate(const GlobalOptions& global, const CrossValidateCmd& cmd,
                        const std::string& command_line) {
  const auto started = std::chrono::steady_clock::now();
  const Output out = global.output();
  const DatasetManifest manifest = load_manifest(cmd.manifest_path);
  const std::vector<ObjectViews> groups = group_train_objects(manifest);
  const int object_count = static_cast<int>(groups.size());
  if (object_count < 2) throw DataError("cross-validation needs at least two training objects");

  const bool sweep_hog = !cmd.hog_grid.empty();
  bool media_backed = true;
  for (const ObjectViews& group : groups) {
    for (const int idx : group.record_indices) {
      media_backed = media_backed && !manifest.records[idx].has_inline();
    }
  }
  if (sweep_hog && (!media_backed || manifest.feature_config.kind != FeatureKind::Hog)) {
    throw std::invalid_argument(
        "--hog-grid requires a media-backed manifest with hog features");
  }
  if (cmd.sampler == "oracle" && manifest.manifold_case != ManifoldCase::YawOnly) {
    throw std::invalid_argument("the oracle sampler needs a 1D manifold; use --sampler particle");
  }

  const int fold_count = cmd.folds > 0 ? std::min(cmd.folds, object_count) : object_count;
  const std::vector<int> hog_values = sweep_hog
                                          ? cmd.hog_grid
                                          : std::vector<int>{manifest.feature_config.hog_grid};

  double best_mae = std::numeric_limits<double>::infinity();
  int best_m = 0, best_n = 0;
  for (const int m : cmd.center_grid) {
    for (const int n : hog_values) {
      FeatureConfig feature_config = manifest.feature_config;
      if (sweep_hog) feature_config.hog_grid = n;

      std::vector<Eigen::VectorXd> features(manifest.records.size());
      std::vector<int> all_train;
      for (const ObjectViews& group : groups) {
        all_train.insert(all_train.end(), group.record_indices.begin(),
                         group.record_indices.end());
      }
      parallel_for(static_cast<int>(all_train.size()), global.resolved_threads(), [&](int i) {
        const int idx = all_train[i];
        features[idx] = featurize_record(manifest, manifest.records[idx], feature_config);
      });

      std::vector<double> errors_deg;
      for (int fold = 0; fold < fold_count; ++fold) {
        std::vector<ObjectViews> fit_groups;
        std::vector<const ObjectViews*> held_out;
        for (int g = 0; g < object_count; ++g) {
          if (g % fold_count == fold) {
            held_out.push_back(&groups[g]);
          } else {
            fit_groups.push_back(groups[g]);
          }
        }
        TrainOptions train = cmd.train;
        train.center_count = m;
        const TrainedModel fold_model =
            train_model(manifest, fit_groups, features, train, global.resolved_threads());

        std::vector<double> fold_errors;
        std::vector<int> query_records;
        for (const ObjectViews* object : held_out) {
          query_records.insert(query_records.end(), object->record_indices.begin(),
                               object->record_indices.end());
        }
        fold_errors.resize(query_records.size());
        parallel_for(static_cast<int>(query_records.size()), global.resolved_threads(),
                     [&](int q) {
                       const int idx = query_records[q];
                       const ManifestRecord& record = manifest.records[idx];
                       InferenceFlags flags = cmd.flags;
                       flags.oracle = cmd.sampler == "oracle";
                       const InferenceResult result =
                           run_inference(fold_model.space, features[idx], flags,
                                         global.seed + static_cast<std::uint64_t>(idx));
                       fold_errors[q] =
                           angular_error(result.pose.yaw, record.pose.yaw) * kRadToDeg;
                     });
        errors_deg.insert(errors_deg.end(), fold_errors.begin(), fold_errors.end());
      }

      CvMetrics metrics;
      for (const double e : errors_deg) {
        metrics.mae += e;
        if (e < 22.5) metrics.pct_22_5 += 1.0;
        if (e < 45.0) metrics.pct_45 += 1.0;
      }
      const double count = static_cast<double>(errors_deg.size());
      metrics.mae /= count;
      metrics.pct_22_5 *= 100.0 / count;
      metrics.pct_45 *= 100.0 / count;

      out.text("M=" + std::to_string(m) + (sweep_hog ? " n=" + std::to_string(n) : "") +
               ": MAE=" + fmt_short(metrics.mae) + " AE<22.5=" + fmt_short(metrics.pct_22_5) +
               "% AE<45=" + fmt_short(metrics.pct_45) + "%");
      out.emit("cv.cell", {{"M", std::to_string(m)},
                           {"hog_grid", std::to_string(sweep_hog ? n : 0)},
                           {"mae_degrees", fmt_full(metrics.mae)},
                           {"pct_ae_under_22_5", fmt_full(metrics.pct_22_5)},
                           {"pct_ae_under_45", fmt_full(metrics.pct_45)}});
      if (metrics.mae < best_mae) {
        best_mae = metrics.mae;
        best_m = m;
        best_n = sweep_hog ? n : 0;
      }
    }
  }

  out.text("selected: M=" + std::to_string(best_m) +
           (sweep_hog ? " n=" + std::to_string(best_n) : "") + " (MAE=" + fmt_short(best_mae) +
           ")");
  out.emit("cv.selected", {{"M", std::to_string(best_m)},
                           {"hog_grid", std::to_string(best_n)},
                           {"mae_degrees", fmt_full(best_mae)}});
  const double wall_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - started)
          .count();
  append_run_record(global, command_line, wall_ms,
                    {{"selected_M", std::to_string(best_m)},
                     {"selected_hog_grid", std::to_string(best_n)},
                     {"mae_degrees", fmt_full(best_mae)}});
}

void cmd_gen_synthetic(const GlobalOptions& global, const GenSyntheticCmd& cmd) {
  const Output out = global.output();
  SyntheticSpec spec = cmd.spec;
  spec.seed = global.seed;
  const DatasetManifest manifest = generate_synthetic(spec);
  save_manifest(manifest, cmd.out_path);
  out.text("manifest with " + std::to_string(manifest.records.size()) + " records written to " +
           cmd.out_path);
  out.emit("gen.manifest", {{"path", cmd.out_path},
                            {"records", std::to_string(manifest.records.size())},
                            {"objects", std::to_string(spec.object_count)}});
}

std::string join_command_line(int argc, char** argv) {
  std::string joined;
  for (int i = 0; i < argc; ++i) {
    if (i) joined += " ";
    joined += argv[i];
  }
  return joined;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"joint object category, instance and continuous pose estimation "
               "via homeomorphic manifold analysis"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_config("--config");

  GlobalOptions global;
  app.add_option("--seed", global.seed, "base random seed")->capture_default_str();
  app.add_option("--threads", global.threads,
                 "worker threads (0: HMA_THREADS env or 1)")
      ->capture_default_str();
  app.add_option("--output-format", global.output_format, "text or records")
      ->check(CLI::IsMember({"text", "records"}))
      ->capture_default_str();
  app.add_option("--log", global.log_path, "append one run record per batch command");

  TrainCmd train_cmd;
  CLI::App* train = app.add_subcommand("train", "fit per-object mappings and factorize");
  train->add_option("manifest", train_cmd.manifest_path, "dataset manifest")->required();
  train->add_option("-o,--out", train_cmd.model_path, "output model path")->required();
  train->add_option("--M", train_cmd.options.center_count, "kernel center count")
      ->capture_default_str();
  train->add_option("--centers", train_cmd.options.centers_mode,
                    "center placement: uniform or data")
      ->check(CLI::IsMember({"uniform", "data"}))
      ->capture_default_str();
  train->add_option("--basis", train_cmd.options.basis,
                    "thin_plate_spline, gaussian or multiquadric")
      ->capture_default_str();
  train->add_option("--shape", train_cmd.options.shape,
                    "gaussian width / multiquadric shape")
      ->capture_default_str();
  train->add_option("--ridge", train_cmd.options.ridge, "regularizer on the rbf weights")
      ->capture_default_str();
  train->add_option("--style-dim", train_cmd.options.style_dim,
                    "retained style dimensions (0: full)")
      ->capture_default_str();

  InferCmd infer_cmd;
  CLI::App* infer_app = app.add_subcommand("infer", "joint style/pose inference on one input");
  infer_app->add_option("model", infer_cmd.model_path, "trained model")->required();
  infer_app->add_option("input", infer_cmd.input_path, "image or feature file")->required();
  infer_app->add_option("--input-kind", infer_cmd.input_kind, "auto, image or features")
      ->check(CLI::IsMember({"auto", "image", "features"}))
      ->capture_default_str();
  infer_cmd.flags.add_to(infer_app);

  SynthesizeCmd synth_cmd;
  CLI::App* synth = app.add_subcommand("synthesize", "render a view of a learned object");
  synth->add_option("model", synth_cmd.model_path, "trained model")->required();
  synth->add_option("-o,--out", synth_cmd.out_path, "output image (.pgm or .png)")->required();
  synth->add_option("--object", synth_cmd.object_id, "instance id");
  synth->add_option("--object-index", synth_cmd.object_index, "instance index");
  synth->add_option("--yaw", synth_cmd.yaw_deg, "yaw in degrees")->required();
  synth->add_option("--pitch", synth_cmd.pitch_deg, "pitch in degrees");
  synth->add_option("--roll", synth_cmd.roll_deg, "roll in degrees");
  synth->add_option("--reference", synth_cmd.reference_path,
                    "reference image; prints the mse against it");

  EvaluateCmd eval_cmd;
  CLI::App* evaluate_app =
      app.add_subcommand("evaluate", "run inference over the test split and report metrics");
  evaluate_app->add_option("model", eval_cmd.model_path, "trained model")->required();
  evaluate_app->add_option("manifest", eval_cmd.manifest_path, "manifest with a test split")
      ->required();
  eval_cmd.flags.add_to(evaluate_app);

  CrossValidateCmd cv_cmd;
  CLI::App* cv = app.add_subcommand("cross-validate",
                                    "sweep center counts (and hog grids) by object folds");
  cv->add_option("manifest", cv_cmd.manifest_path, "dataset manifest")->required();
  cv->add_option("--M-grid", cv_cmd.center_grid, "center counts to try")->delimiter(',');
  cv->add_option("--hog-grid", cv_cmd.hog_grid, "hog grid sizes to try")->delimiter(',');
  cv->add_option("--folds", cv_cmd.folds, "fold count (0: leave-one-object-out)")
      ->capture_default_str();
  cv->add_option("--sampler", cv_cmd.sampler, "oracle or particle")
      ->check(CLI::IsMember({"oracle", "particle"}))
      ->capture_default_str();
  cv->add_option("--basis", cv_cmd.train.basis, "kernel basis")->capture_default_str();
  cv->add_option("--ridge", cv_cmd.train.ridge, "regularizer")->capture_default_str();
  cv_cmd.flags.add_to(cv);

  GenSyntheticCmd gen_cmd;
  CLI::App* gen = app.add_subcommand("gen-synthetic", "write a synthetic turntable manifest");
  gen->add_option("-o,--out", gen_cmd.out_path, "output manifest path")->required();
  gen->add_option("--objects", gen_cmd.spec.object_count, "object count")
      ->capture_default_str();
  gen->add_option("--views", gen_cmd.spec.views_per_object, "views per object")
      ->capture_default_str();
  gen->add_option("--feature-dim", gen_cmd.spec.feature_dim, "feature dimension")
      ->capture_default_str();
  gen->add_option("--harmonics", gen_cmd.spec.harmonic_order, "curve harmonic order")
      ->capture_default_str();
  gen->add_option("--noise-std", gen_cmd.spec.noise_std, "additive noise std")
      ->capture_default_str();
  gen->add_option("--heldout-every", gen_cmd.spec.heldout_every,
                  "every n-th view goes to the test split (0: none)")
      ->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  const std::string command_line = join_command_line(argc, argv);
  try {
    if (train->parsed()) {
      cmd_train(global, train_cmd, command_line);
    } else if (infer_app->parsed()) {
      cmd_infer(global, infer_cmd);
    } else if (synth->parsed()) {
      cmd_synthesize(global, synth_cmd);
    } else if (evaluate_app->parsed()) {
      cmd_evaluate(global, eval_cmd, command_line);
    } else if (cv->parsed()) {
      cmd_cross_validate(global, cv_cmd, command_line);
    } else if (gen->parsed()) {
      cmd_gen_synthetic(global, gen_cmd);
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const NumericalError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  }
  return 0;
}
