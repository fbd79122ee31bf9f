#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "hma/data.hpp"
#include "hma/errors.hpp"

namespace hma {

namespace {

constexpr double kDegToRad = kPi / 180.0;

std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t pos = line.find('\t', start);
    if (pos == std::string::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

double parse_double(const std::string& text, int line_no, const char* what) {
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw ParseError("line " + std::to_string(line_no) + ": cannot parse " + what + " '" +
                     text + "'");
  }
}

bool angle_absent(const std::string& field) { return field.empty() || field == "-"; }

std::string format_double(double v) {
  char buffer[32];
  std::snprintf(buffer, sizeof(buffer), "%.17g", v);
  return buffer;
}

void apply_header(DatasetManifest& manifest, const std::string& key, const std::string& value,
                  int line_no) {
  if (key == "format_version") {
    manifest.format_version = static_cast<int>(parse_double(value, line_no, "format_version"));
    if (manifest.format_version != 1) {
      throw ParseError("line " + std::to_string(line_no) + ": unsupported manifest version " +
                       value);
    }
  } else if (key == "manifold_case") {
    try {
      manifest.manifold_case = manifold_case_from_string(value);
    } catch (const std::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
  } else if (key == "feature.kind") {
    manifest.feature_config.kind = feature_kind_from_string(value);
  } else if (key == "feature.resize") {
    const std::size_t x = value.find('x');
    if (x == std::string::npos) {
      throw ParseError("line " + std::to_string(line_no) + ": feature.resize must be RxC");
    }
    manifest.feature_config.resize_rows =
        static_cast<int>(parse_double(value.substr(0, x), line_no, "resize rows"));
    manifest.feature_config.resize_cols =
        static_cast<int>(parse_double(value.substr(x + 1), line_no, "resize cols"));
  } else if (key == "feature.grid") {
    manifest.feature_config.hog_grid = static_cast<int>(parse_double(value, line_no, "grid"));
  } else if (key == "feature.bins") {
    manifest.feature_config.hog_bins = static_cast<int>(parse_double(value, line_no, "bins"));
  } else if (key == "feature.normalize") {
    manifest.feature_config.normalize = feature_normalize_from_string(value);
  } else {
    throw ParseError("line " + std::to_string(line_no) + ": unknown header key '" + key + "'");
  }
}

ManifestRecord parse_record(const std::vector<std::string>& fields, ManifoldCase manifold,
                            int line_no) {
  if (fields.size() < 7) {
    throw ParseError("line " + std::to_string(line_no) +
                     ": record needs 7 tab-separated columns "
                     "(path, object, category, yaw, pitch, roll, split)");
  }
  ManifestRecord record;
  const bool is_inline = fields[0] == "@inline";
  if (!is_inline) {
    record.media_path = fields[0];
    if (record.media_path.empty()) {
      throw ParseError("line " + std::to_string(line_no) + ": empty media path");
    }
    if (fields.size() != 7) {
      throw ParseError("line " + std::to_string(line_no) +
                       ": media records take exactly 7 columns");
    }
  }
  record.object_id = fields[1];
  record.category_id = fields[2];
  if (record.object_id.empty() || record.category_id.empty()) {
    throw ParseError("line " + std::to_string(line_no) + ": empty object or category id");
  }

  if (angle_absent(fields[3])) {
    throw InvalidAngles("line " + std::to_string(line_no) + ": record for object '" +
                        record.object_id + "' is missing yaw");
  }
  record.yaw_deg = parse_double(fields[3], line_no, "yaw");
  if (!std::isfinite(record.yaw_deg)) {
    throw InvalidAngles("line " + std::to_string(line_no) + ": yaw is not finite");
  }

  const bool want_pitch = manifold != ManifoldCase::YawOnly;
  const bool want_roll = manifold == ManifoldCase::YawPitchRoll;
  if (angle_absent(fields[4]) == want_pitch) {
    throw ParseError("line " + std::to_string(line_no) + ": pitch column does not match the " +
                     to_string(manifold) + " manifold case");
  }
  if (angle_absent(fields[5]) == want_roll) {
    throw ParseError("line " + std::to_string(line_no) + ": roll column does not match the " +
                     to_string(manifold) + " manifold case");
  }
  if (want_pitch) {
    record.pitch_deg = parse_double(fields[4], line_no, "pitch");
    if (!std::isfinite(*record.pitch_deg) || *record.pitch_deg < -90.0 ||
        *record.pitch_deg > 90.0) {
      throw InvalidAngles("line " + std::to_string(line_no) + ": pitch outside [-90, 90]");
    }
  }
  if (want_roll) {
    record.roll_deg = parse_double(fields[5], line_no, "roll");
    if (!std::isfinite(*record.roll_deg) || *record.roll_deg <= -90.0 ||
        *record.roll_deg >= 90.0) {
      throw InvalidAngles("line " + std::to_string(line_no) + ": roll outside (-90, 90)");
    }
  }

  const std::string& split = fields[6];
  if (split == "train") {
    record.is_test = false;
  } else if (split == "test") {
    record.is_test = true;
  } else {
    throw ParseError("line " + std::to_string(line_no) + ": split must be train or test, got '" +
                     split + "'");
  }

  if (is_inline) {
    if (fields.size() < 8) {
      throw ParseError("line " + std::to_string(line_no) +
                       ": @inline record has no feature values");
    }
    record.inline_features.resize(static_cast<Eigen::Index>(fields.size() - 7));
    for (std::size_t i = 7; i < fields.size(); ++i) {
      record.inline_features[static_cast<Eigen::Index>(i - 7)] =
          parse_double(fields[i], line_no, "inline feature");
    }
  }

  try {
    record.pose = PoseAngles::for_case(
        manifold, record.yaw_deg * kDegToRad, record.pitch_deg.value_or(0.0) * kDegToRad,
        record.roll_deg.value_or(0.0) * kDegToRad);
  } catch (const InvalidAngles& e) {
    throw InvalidAngles("line " + std::to_string(line_no) + ": " + e.what());
  }
  return record;
}

}  // namespace

void DatasetManifest::validate() const {
  std::map<std::string, int> train_counts;
  Eigen::Index inline_dim = -1;
  for (const ManifestRecord& record : records) {
    if (!record.is_test) ++train_counts[record.object_id];
    if (record.has_inline()) {
      if (inline_dim < 0) inline_dim = record.inline_features.size();
      if (record.inline_features.size() != inline_dim) {
        throw ParseError("inline feature vectors differ in length");
      }
    }
  }
  for (const auto& [object, count] : train_counts) {
    if (count < 2) {
      throw ParseError("object '" + object +
                       "' has fewer than two training views; a view manifold needs more");
    }
  }
}

std::filesystem::path DatasetManifest::resolve_media(const ManifestRecord& record) const {
  const std::filesystem::path p(record.media_path);
  return p.is_absolute() ? p : base_dir / p;
}

DatasetManifest load_manifest(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open manifest " + path.string());
  DatasetManifest manifest;
  manifest.base_dir = path.has_parent_path() ? path.parent_path() : ".";

  std::string line;
  int line_no = 0;
  bool in_header = true;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() || line[0] == '#') continue;
    if (in_header && line.find('\t') == std::string::npos) {
      const std::size_t colon = line.find(':');
      if (colon == std::string::npos) {
        throw ParseError("line " + std::to_string(line_no) + ": expected 'key: value' header");
      }
      std::string key = line.substr(0, colon);
      std::string value = line.substr(colon + 1);
      while (!value.empty() && value.front() == ' ') value.erase(value.begin());
      while (!value.empty() && value.back() == ' ') value.pop_back();
      apply_header(manifest, key, value, line_no);
      continue;
    }
    in_header = false;
    manifest.records.push_back(parse_record(split_tabs(line), manifest.manifold_case, line_no));
  }

  manifest.validate();
  for (const ManifestRecord& record : manifest.records) {
    if (!record.has_inline() && !std::filesystem::exists(manifest.resolve_media(record))) {
      throw MissingMedia("missing media file " + manifest.resolve_media(record).string());
    }
  }
  return manifest;
}

void save_manifest(const DatasetManifest& manifest, const std::filesystem::path& path) {
  manifest.validate();
  std::ofstream out(path);
  if (!out) throw DataError("cannot write manifest " + path.string());
  out << "format_version: " << manifest.format_version << "\n";
  out << "manifold_case: " << to_string(manifest.manifold_case) << "\n";
  const FeatureConfig& f = manifest.feature_config;
  out << "feature.kind: " << to_string(f.kind) << "\n";
  out << "feature.resize: " << f.resize_rows << "x" << f.resize_cols << "\n";
  out << "feature.grid: " << f.hog_grid << "\n";
  out << "feature.bins: " << f.hog_bins << "\n";
  out << "feature.normalize: " << to_string(f.normalize) << "\n";
  out << "\n";
  for (const ManifestRecord& record : manifest.records) {
    out << (record.has_inline() ? "@inline" : record.media_path) << '\t' << record.object_id
        << '\t' << record.category_id << '\t' << format_double(record.yaw_deg) << '\t'
        << (record.pitch_deg ? format_double(*record.pitch_deg) : "-") << '\t'
        << (record.roll_deg ? format_double(*record.roll_deg) : "-") << '\t'
        << (record.is_test ? "test" : "train");
    for (Eigen::Index i = 0; i < record.inline_features.size(); ++i) {
      out << '\t' << format_double(record.inline_features[i]);
    }
    out << "\n";
  }
  if (!out) throw DataError("failed writing manifest " + path.string());
}

}  // namespace hma
