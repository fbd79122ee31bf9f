// Python bindings for the core operations: manifold embeddings, GRBF
// mappings, style factorization, particle inference, features, metrics and
// the data containers.

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "hma/classify.hpp"
#include "hma/data.hpp"
#include "hma/errors.hpp"
#include "hma/factor.hpp"
#include "hma/features.hpp"
#include "hma/grbf.hpp"
#include "hma/image_io.hpp"
#include "hma/infer.hpp"
#include "hma/manifold.hpp"

namespace py = pybind11;
using namespace hma;

namespace {

std::string pose_repr(const PoseAngles& pose) {
  std::string text = "PoseAngles(yaw=" + std::to_string(pose.yaw);
  if (pose.pitch) text += ", pitch=" + std::to_string(*pose.pitch);
  if (pose.roll) text += ", roll=" + std::to_string(*pose.roll);
  return text + ")";
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Joint object category, instance and continuous pose estimation "
            "on homeomorphic view manifolds";

  // exceptions
  const auto data_error = py::register_exception<DataError>(m, "DataError");
  const auto numerical_error = py::register_exception<NumericalError>(m, "NumericalError");
  py::register_exception<GimbalDegenerate>(m, "GimbalDegenerate", numerical_error);
  py::register_exception<SingularSystem>(m, "SingularSystem", numerical_error);
  py::register_exception<AllZeroLikelihoods>(m, "AllZeroLikelihoods", numerical_error);
  py::register_exception<CorruptContainer>(m, "CorruptContainer", data_error);
  py::register_exception<UnsupportedVersion>(m, "UnsupportedVersion", data_error);

  // manifold
  py::enum_<ManifoldCase>(m, "ManifoldCase")
      .value("YAW_ONLY", ManifoldCase::YawOnly)
      .value("YAW_PITCH", ManifoldCase::YawPitch)
      .value("YAW_PITCH_ROLL", ManifoldCase::YawPitchRoll);

  py::class_<PoseAngles>(m, "PoseAngles")
      .def_static("yaw_only", &PoseAngles::yaw_only, py::arg("yaw"))
      .def_static("yaw_pitch", &PoseAngles::yaw_pitch, py::arg("yaw"), py::arg("pitch"))
      .def_static("yaw_pitch_roll", &PoseAngles::yaw_pitch_roll, py::arg("yaw"),
                  py::arg("pitch"), py::arg("roll"))
      .def_readonly("yaw", &PoseAngles::yaw)
      .def_readonly("pitch", &PoseAngles::pitch)
      .def_readonly("roll", &PoseAngles::roll)
      .def_property_readonly("manifold_case", &PoseAngles::manifold_case)
      .def("__repr__", &pose_repr);

  m.def("ambient_dim", &ambient_dim, py::arg("manifold_case"));
  m.def("wrap_angle", &wrap_angle, py::arg("radians"));
  m.def("embed", &embed, py::arg("pose"), "Unit-sphere embedding of pose angles.");
  m.def("recover_angles", &recover_angles, py::arg("point"),
        "Invert the embedding back to pose angles.");
  m.def("angular_error", &angular_error, py::arg("a"), py::arg("b"),
        "Circular distance between two angles, in [0, pi].");
  m.def("place_centers", &place_centers, py::arg("count"), py::arg("manifold_case"),
        "Deterministic well-spread kernel centers, one per row.");

  // grbf
  py::enum_<BasisKind>(m, "BasisKind")
      .value("THIN_PLATE_SPLINE", BasisKind::ThinPlateSpline)
      .value("GAUSSIAN", BasisKind::Gaussian)
      .value("MULTIQUADRIC", BasisKind::Multiquadric);

  py::class_<KernelConfig>(m, "KernelConfig")
      .def(py::init<>())
      .def_readwrite("basis", &KernelConfig::basis)
      .def_readwrite("centers", &KernelConfig::centers)
      .def_readwrite("shape", &KernelConfig::shape)
      .def_readwrite("ridge", &KernelConfig::ridge)
      .def_readwrite("with_polynomial", &KernelConfig::with_polynomial)
      .def_property_readonly("feature_count", &KernelConfig::feature_count)
      .def("validate", &KernelConfig::validate);

  py::class_<MappingModel>(m, "MappingModel")
      .def(py::init<>())
      .def_readwrite("coefficients", &MappingModel::coefficients)
      .def_readwrite("kernel", &MappingModel::kernel)
      .def_property_readonly("feature_dim", &MappingModel::feature_dim);

  m.def("basis_value", &basis_value, py::arg("basis"), py::arg("r"), py::arg("shape"));
  m.def("kernel_map", &kernel_map, py::arg("x"), py::arg("config"),
        "psi(x): rbf responses plus the polynomial tail.");
  m.def("fit_mapping", &fit_mapping, py::arg("embeddings"), py::arg("observations"),
        py::arg("config"), "Solve the bordered system for one object's coefficients.");
  m.def("evaluate_mapping", &evaluate_mapping, py::arg("model"), py::arg("x"));
  m.def("synthesize_view", &synthesize_view, py::arg("model"), py::arg("pose"), py::arg("rows"),
        py::arg("cols"), "Render the mapping output as a [0,1] intensity image.");
  m.def("synthesis_mse", &synthesis_mse, py::arg("reference"), py::arg("synthesized"));

  // factor
  py::class_<StyleSpace>(m, "StyleSpace")
      .def(py::init<>())
      .def_readwrite("basis", &StyleSpace::basis)
      .def_readwrite("styles", &StyleSpace::styles)
      .def_readwrite("singular_values", &StyleSpace::singular_values)
      .def_readwrite("kernel", &StyleSpace::kernel)
      .def_readwrite("feature_dim", &StyleSpace::feature_dim)
      .def_property_readonly("style_dim", &StyleSpace::style_dim)
      .def_property_readonly("object_count", &StyleSpace::object_count);

  py::class_<RankReport>(m, "RankReport")
      .def_readonly("effective_rank", &RankReport::effective_rank)
      .def_readonly("degenerate", &RankReport::degenerate);

  m.def("stack_coefficients", &stack_coefficients, py::arg("models"));
  m.def("factorize", &factorize, py::arg("stacked"), py::arg("style_dim"), py::arg("kernel"),
        py::arg("feature_dim"),
        "Thin SVD of the stacked coefficients; style_dim=None keeps full rank.");
  m.def("factorize_models", &factorize_models, py::arg("models"),
        py::arg("style_dim") = std::nullopt);
  m.def("reconstruct_coefficients", &reconstruct_coefficients, py::arg("space"),
        py::arg("style"));
  m.def("closed_form_style", &closed_form_style, py::arg("space"), py::arg("model"),
        "Least-squares style vector for a fitted coefficient matrix.");
  m.def("degeneracy_rank", &degeneracy_rank, py::arg("model"), py::arg("tolerance") = 1e-8);

  // infer
  py::class_<InferenceConfig>(m, "InferenceConfig")
      .def(py::init<>())
      .def_readwrite("iterations", &InferenceConfig::iterations)
      .def_readwrite("sigma", &InferenceConfig::sigma)
      .def_readwrite("viewpoint_count", &InferenceConfig::viewpoint_count)
      .def_readwrite("resample_std_style", &InferenceConfig::resample_std_style)
      .def_readwrite("resample_std_angle", &InferenceConfig::resample_std_angle)
      .def_readwrite("decay", &InferenceConfig::decay)
      .def_readwrite("seed", &InferenceConfig::seed);

  py::class_<InferenceResult>(m, "InferenceResult")
      .def_readonly("style", &InferenceResult::style)
      .def_readonly("pose", &InferenceResult::pose)
      .def_readonly("reconstruction_error", &InferenceResult::reconstruction_error)
      .def_readonly("trace", &InferenceResult::trace);

  py::class_<MultimodalResult>(m, "MultimodalResult")
      .def_readonly("style_a", &MultimodalResult::style_a)
      .def_readonly("style_b", &MultimodalResult::style_b)
      .def_readonly("combined_style", &MultimodalResult::combined_style)
      .def_readonly("pose", &MultimodalResult::pose)
      .def_readonly("fused_error", &MultimodalResult::fused_error)
      .def_readonly("trace", &MultimodalResult::trace);

  py::class_<MarginalWeights>(m, "MarginalWeights")
      .def_readonly("style_weights", &MarginalWeights::style_weights)
      .def_readonly("viewpoint_weights", &MarginalWeights::viewpoint_weights);

  m.def("reconstruction_error", &reconstruction_error, py::arg("space"), py::arg("style"),
        py::arg("x"), py::arg("y"));
  m.def("particle_likelihood", &particle_likelihood, py::arg("error"), py::arg("sigma"));
  m.def("marginal_weights", &marginal_weights, py::arg("likelihoods"));
  m.def("infer", &infer, py::arg("space"), py::arg("y"), py::arg("config"),
        "Joint style/viewpoint inference by particle sampling.");
  m.def("grid_oracle", &grid_oracle, py::arg("space"), py::arg("y"),
        py::arg("angular_resolution"),
        "Exhaustive training-style x angle-grid reference search.");
  m.def("viewpoint_given_style", &viewpoint_given_style, py::arg("space"), py::arg("style"),
        py::arg("y"), py::arg("resolution"));
  m.def("infer_multimodal", &infer_multimodal, py::arg("space_a"), py::arg("space_b"),
        py::arg("y_a"), py::arg("y_b"), py::arg("weight_a"), py::arg("weight_b"),
        py::arg("config"));

  // features
  py::enum_<FeatureKind>(m, "FeatureKind")
      .value("RAW", FeatureKind::Raw)
      .value("HOG", FeatureKind::Hog);
  py::enum_<FeatureNormalize>(m, "FeatureNormalize")
      .value("NONE", FeatureNormalize::None)
      .value("L2_GLOBAL", FeatureNormalize::L2Global);

  py::class_<FeatureConfig>(m, "FeatureConfig")
      .def(py::init<>())
      .def_readwrite("kind", &FeatureConfig::kind)
      .def_readwrite("resize_rows", &FeatureConfig::resize_rows)
      .def_readwrite("resize_cols", &FeatureConfig::resize_cols)
      .def_readwrite("hog_grid", &FeatureConfig::hog_grid)
      .def_readwrite("hog_bins", &FeatureConfig::hog_bins)
      .def_readwrite("normalize", &FeatureConfig::normalize)
      .def_property_readonly("dimension", &FeatureConfig::dimension)
      .def("digest", &FeatureConfig::digest);

  py::class_<FeatureVector>(m, "FeatureVector")
      .def_readonly("values", &FeatureVector::values)
      .def_readonly("config_digest", &FeatureVector::config_digest);

  m.def("extract", &extract, py::arg("image"), py::arg("config"),
        "Featurize an intensity image (values in [0, 255]).");
  m.def("extract_depth", &extract_depth, py::arg("depth"), py::arg("config"),
        "Fill depth holes, rescale, then featurize.");
  m.def("resize_bilinear", &resize_bilinear, py::arg("image"), py::arg("rows"), py::arg("cols"));
  m.def("fill_depth_holes", &fill_depth_holes, py::arg("depth"), py::arg("max_passes") = 10);

  // classify
  py::enum_<LabelTarget>(m, "LabelTarget")
      .value("CATEGORY", LabelTarget::Category)
      .value("INSTANCE", LabelTarget::Instance);

  py::class_<LabeledStyleSet>(m, "LabeledStyleSet")
      .def(py::init<>())
      .def_readwrite("styles", &LabeledStyleSet::styles)
      .def_readwrite("instance_ids", &LabeledStyleSet::instance_ids)
      .def_readwrite("category_ids", &LabeledStyleSet::category_ids)
      .def_property_readonly("size", &LabeledStyleSet::size);

  py::class_<PosePrediction>(m, "PosePrediction")
      .def(py::init([](const PoseAngles& pose, const std::string& category,
                       const std::string& instance) {
             return PosePrediction{pose, category, instance};
           }),
           py::arg("pose"), py::arg("category"), py::arg("instance"))
      .def_readwrite("pose", &PosePrediction::pose)
      .def_readwrite("category", &PosePrediction::category)
      .def_readwrite("instance", &PosePrediction::instance);

  py::class_<EvalReport>(m, "EvalReport")
      .def_readonly("mae_degrees", &EvalReport::mae_degrees)
      .def_readonly("pct_ae_under_22_5", &EvalReport::pct_ae_under_22_5)
      .def_readonly("pct_ae_under_45", &EvalReport::pct_ae_under_45)
      .def_readonly("category_accuracy", &EvalReport::category_accuracy)
      .def_readonly("instance_accuracy", &EvalReport::instance_accuracy)
      .def_readonly("pose_accuracy_given_correct_category",
                    &EvalReport::pose_accuracy_given_correct_category)
      .def_readonly("pose_accuracy_zero_if_misclassified",
                    &EvalReport::pose_accuracy_zero_if_misclassified)
      .def_readonly("synthesis_mse", &EvalReport::synthesis_mse);

  m.def("knn_classify", &knn_classify, py::arg("support"), py::arg("query"), py::arg("k"),
        py::arg("target"));
  m.def("evaluate", &evaluate, py::arg("predictions"), py::arg("ground_truth"),
        py::arg("synthesis_mse") = std::nullopt);

  // data
  py::class_<ManifestRecord>(m, "ManifestRecord")
      .def_readonly("media_path", &ManifestRecord::media_path)
      .def_readonly("inline_features", &ManifestRecord::inline_features)
      .def_readonly("object_id", &ManifestRecord::object_id)
      .def_readonly("category_id", &ManifestRecord::category_id)
      .def_readonly("yaw_deg", &ManifestRecord::yaw_deg)
      .def_readonly("pitch_deg", &ManifestRecord::pitch_deg)
      .def_readonly("roll_deg", &ManifestRecord::roll_deg)
      .def_readonly("is_test", &ManifestRecord::is_test)
      .def_readonly("pose", &ManifestRecord::pose)
      .def("has_inline", &ManifestRecord::has_inline);

  py::class_<DatasetManifest>(m, "DatasetManifest")
      .def(py::init<>())
      .def_readonly("manifold_case", &DatasetManifest::manifold_case)
      .def_readonly("feature_config", &DatasetManifest::feature_config)
      .def_readonly("records", &DatasetManifest::records)
      .def("resolve_media", &DatasetManifest::resolve_media, py::arg("record"));

  py::class_<SyntheticSpec>(m, "SyntheticSpec")
      .def(py::init<>())
      .def_readwrite("object_count", &SyntheticSpec::object_count)
      .def_readwrite("views_per_object", &SyntheticSpec::views_per_object)
      .def_readwrite("feature_dim", &SyntheticSpec::feature_dim)
      .def_readwrite("harmonic_order", &SyntheticSpec::harmonic_order)
      .def_readwrite("noise_std", &SyntheticSpec::noise_std)
      .def_readwrite("seed", &SyntheticSpec::seed)
      .def_readwrite("heldout_every", &SyntheticSpec::heldout_every);

  py::class_<ModelContainer>(m, "ModelContainer")
      .def(py::init<>())
      .def_readwrite("manifold_case", &ModelContainer::manifold_case)
      .def_readwrite("space", &ModelContainer::space)
      .def_readwrite("labels", &ModelContainer::labels)
      .def_readwrite("feature_config", &ModelContainer::feature_config)
      .def_readwrite("seed", &ModelContainer::seed)
      .def_readwrite("creation_params", &ModelContainer::creation_params);

  m.def("load_manifest", &load_manifest, py::arg("path"));
  m.def("save_manifest", &save_manifest, py::arg("manifest"), py::arg("path"));
  m.def("generate_synthetic", &generate_synthetic, py::arg("spec"),
        "Seeded turntable stand-in with inline features.");
  m.def("save_model", &save_model, py::arg("container"), py::arg("path"));
  m.def("load_model", &load_model, py::arg("path"));
  m.def("read_image", &read_image, py::arg("path"));
  m.def("read_depth_pgm", &read_depth_pgm, py::arg("path"));
  m.def("write_image", &write_image, py::arg("path"), py::arg("image"));

#ifdef HMA_VERSION
  m.attr("__version__") = HMA_VERSION;
#else
  m.attr("__version__") = "dev";
#endif
}
