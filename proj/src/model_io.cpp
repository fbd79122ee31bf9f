#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <vector>

#include <zlib.h>

#include <json.hpp>

#include "hma/data.hpp"
#include "hma/errors.hpp"

static_assert(std::endian::native == std::endian::little,
              "model container assumes a little-endian host");

namespace hma {

namespace {

using nlohmann::json;

constexpr char kMagic[8] = {'H', 'M', 'A', 'M', 'O', 'D', 'E', 'L'};

void append_array(std::string& payload, json& index, const char* name,
                  const Eigen::MatrixXd& matrix) {
  index.push_back({{"name", name}, {"rows", matrix.rows()}, {"cols", matrix.cols()}});
  const std::size_t bytes = static_cast<std::size_t>(matrix.size()) * sizeof(double);
  const std::size_t offset = payload.size();
  payload.resize(offset + bytes);
  std::memcpy(payload.data() + offset, matrix.data(), bytes);
}

Eigen::MatrixXd take_array(const std::string& blob, std::size_t& cursor, const json& entry) {
  const Eigen::Index rows = entry.at("rows").get<Eigen::Index>();
  const Eigen::Index cols = entry.at("cols").get<Eigen::Index>();
  if (rows < 0 || cols < 0) throw CorruptContainer("negative array shape");
  const std::size_t bytes = static_cast<std::size_t>(rows) * cols * sizeof(double);
  if (cursor + bytes > blob.size()) throw CorruptContainer("array payload truncated");
  Eigen::MatrixXd matrix(rows, cols);
  std::memcpy(matrix.data(), blob.data() + cursor, bytes);
  cursor += bytes;
  return matrix;
}

std::uint32_t checksum(const std::string& bytes) {
  return static_cast<std::uint32_t>(
      crc32(0L, reinterpret_cast<const Bytef*>(bytes.data()),
            static_cast<uInt>(bytes.size())));
}

}  // namespace

void ModelContainer::validate() const {
  space.validate();
  labels.validate();
  feature_config.validate();
  if (labels.styles.rows() != space.style_dim()) {
    throw DimensionMismatch("labeled styles do not match the style space dimensionality");
  }
  if (ambient_dim(manifold_case) != space.kernel.embed_dim()) {
    throw DimensionMismatch("manifold case does not match the kernel centers");
  }
}

void save_model(const ModelContainer& container, const std::filesystem::path& path) {
  container.validate();
  json header;
  header["format_version"] = container.format_version;
  header["manifold_case"] = to_string(container.manifold_case);
  header["kernel"] = {{"basis", to_string(container.space.kernel.basis)},
                      {"shape", container.space.kernel.shape},
                      {"ridge", container.space.kernel.ridge},
                      {"with_polynomial", container.space.kernel.with_polynomial}};
  header["feature_dim"] = container.space.feature_dim;
  const FeatureConfig& f = container.feature_config;
  header["feature"] = {{"kind", to_string(f.kind)},
                       {"resize", {f.resize_rows, f.resize_cols}},
                       {"grid", f.hog_grid},
                       {"bins", f.hog_bins},
                       {"normalize", to_string(f.normalize)}};
  header["labels"] = {{"instance_ids", container.labels.instance_ids},
                      {"category_ids", container.labels.category_ids}};
  header["provenance"] = {{"seed", container.seed},
                          {"creation_params", container.creation_params}};

  std::string payload;
  json index = json::array();
  append_array(payload, index, "centers", container.space.kernel.centers);
  append_array(payload, index, "basis", container.space.basis);
  append_array(payload, index, "styles", container.space.styles);
  append_array(payload, index, "singular_values", container.space.singular_values);
  append_array(payload, index, "label_styles", container.labels.styles);
  header["arrays"] = index;

  const std::string header_text = header.dump();
  std::string blob;
  blob.append(kMagic, sizeof(kMagic));
  const std::uint64_t header_size = header_text.size();
  blob.append(reinterpret_cast<const char*>(&header_size), sizeof(header_size));
  blob += header_text;
  blob += payload;
  const std::uint32_t crc = checksum(blob);
  blob.append(reinterpret_cast<const char*>(&crc), sizeof(crc));

  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write model " + path.string());
  out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
  if (!out) throw DataError("failed writing model " + path.string());
}

ModelContainer load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot open model " + path.string());
  std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  if (blob.size() < sizeof(kMagic) + sizeof(std::uint64_t) + sizeof(std::uint32_t)) {
    throw CorruptContainer(path.string() + ": file too short");
  }
  if (std::memcmp(blob.data(), kMagic, sizeof(kMagic)) != 0) {
    throw CorruptContainer(path.string() + ": bad magic");
  }
  const std::string body = blob.substr(0, blob.size() - sizeof(std::uint32_t));
  std::uint32_t stored_crc = 0;
  std::memcpy(&stored_crc, blob.data() + body.size(), sizeof(stored_crc));
  if (checksum(body) != stored_crc) {
    throw CorruptContainer(path.string() + ": checksum mismatch");
  }

  std::uint64_t header_size = 0;
  std::memcpy(&header_size, body.data() + sizeof(kMagic), sizeof(header_size));
  const std::size_t header_start = sizeof(kMagic) + sizeof(header_size);
  if (header_start + header_size > body.size()) {
    throw CorruptContainer(path.string() + ": header extends past the file");
  }

  json header;
  try {
    header = json::parse(body.substr(header_start, header_size));
  } catch (const json::exception& e) {
    throw CorruptContainer(path.string() + ": bad header: " + e.what());
  }

  ModelContainer container;
  try {
    container.format_version = header.at("format_version").get<int>();
    if (container.format_version != 1) {
      throw UnsupportedVersion(path.string() + ": model format version " +
                               std::to_string(container.format_version) + " is not supported");
    }
    container.manifold_case =
        manifold_case_from_string(header.at("manifold_case").get<std::string>());
    const json& kernel = header.at("kernel");
    container.space.kernel.basis = basis_from_string(kernel.at("basis").get<std::string>());
    container.space.kernel.shape = kernel.at("shape").get<double>();
    container.space.kernel.ridge = kernel.at("ridge").get<double>();
    container.space.kernel.with_polynomial = kernel.at("with_polynomial").get<bool>();
    container.space.feature_dim = header.at("feature_dim").get<int>();
    const json& f = header.at("feature");
    container.feature_config.kind = feature_kind_from_string(f.at("kind").get<std::string>());
    container.feature_config.resize_rows = f.at("resize").at(0).get<int>();
    container.feature_config.resize_cols = f.at("resize").at(1).get<int>();
    container.feature_config.hog_grid = f.at("grid").get<int>();
    container.feature_config.hog_bins = f.at("bins").get<int>();
    container.feature_config.normalize =
        feature_normalize_from_string(f.at("normalize").get<std::string>());
    container.labels.instance_ids =
        header.at("labels").at("instance_ids").get<std::vector<std::string>>();
    container.labels.category_ids =
        header.at("labels").at("category_ids").get<std::vector<std::string>>();
    container.seed = header.at("provenance").at("seed").get<std::uint64_t>();
    container.creation_params =
        header.at("provenance").at("creation_params").get<std::string>();

    const json& arrays = header.at("arrays");
    std::size_t cursor = header_start + header_size;
    const std::map<std::string, int> expected = {
        {"centers", 0}, {"basis", 1}, {"styles", 2}, {"singular_values", 3}, {"label_styles", 4}};
    if (arrays.size() != expected.size()) {
      throw CorruptContainer(path.string() + ": unexpected array count");
    }
    for (const json& entry : arrays) {
      const std::string name = entry.at("name").get<std::string>();
      if (!expected.count(name)) {
        throw CorruptContainer(path.string() + ": unknown array '" + name + "'");
      }
      Eigen::MatrixXd matrix = take_array(body, cursor, entry);
      switch (expected.at(name)) {
        case 0: container.space.kernel.centers = std::move(matrix); break;
        case 1: container.space.basis = std::move(matrix); break;
        case 2: container.space.styles = std::move(matrix); break;
        case 3: container.space.singular_values = matrix.col(0); break;
        case 4: container.labels.styles = std::move(matrix); break;
      }
    }
    if (cursor != body.size()) {
      throw CorruptContainer(path.string() + ": trailing bytes after the arrays");
    }
  } catch (const json::exception& e) {
    throw CorruptContainer(path.string() + ": bad header: " + e.what());
  }

  try {
    container.validate();
  } catch (const std::exception& e) {
    throw CorruptContainer(path.string() + ": inconsistent container: " + e.what());
  }
  return container;
}

}  // namespace hma
