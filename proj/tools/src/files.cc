#include "domeport_tools/files.h"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

#include "domeport/error.h"

namespace domeport::tools {
namespace {

[[noreturn]] void SchemaError(const std::string& where,
                              const std::string& message) {
  Throw(ErrorCode::kSchemaViolation, where + ": " + message);
}

void RejectUnknownKeys(const Json& object, const std::set<std::string>& allowed,
                       const std::string& where) {
  if (!object.is_object()) SchemaError(where, "expected an object");
  for (const auto& item : object.items()) {
    if (!allowed.count(item.key())) {
      SchemaError(where + "/" + item.key(), "unknown key");
    }
  }
}

const Json& Require(const Json& object, const std::string& key,
                    const std::string& where) {
  if (!object.contains(key)) SchemaError(where + "/" + key, "missing key");
  return object.at(key);
}

double RequireNumber(const Json& object, const std::string& key,
                     const std::string& where) {
  const Json& value = Require(object, key, where);
  if (!value.is_number()) SchemaError(where + "/" + key, "expected a number");
  const double number = value.get<double>();
  if (!std::isfinite(number)) SchemaError(where + "/" + key, "not finite");
  return number;
}

int RequireInteger(const Json& object, const std::string& key,
                   const std::string& where) {
  const Json& value = Require(object, key, where);
  if (!value.is_number_integer()) {
    SchemaError(where + "/" + key, "expected an integer");
  }
  return value.get<int>();
}

Eigen::Vector3d RequireVector3(const Json& value, const std::string& where) {
  if (!value.is_array() || value.size() != 3) {
    SchemaError(where, "expected an array of 3 numbers");
  }
  Eigen::Vector3d v;
  for (int k = 0; k < 3; ++k) {
    if (!value[k].is_number()) SchemaError(where, "expected numbers");
    v(k) = value[k].get<double>();
  }
  return v;
}

// Splits one CSV line on commas; fields are plain (no quoting).
std::vector<std::string> SplitCsv(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  std::istringstream stream(line);
  while (std::getline(stream, field, ',')) {
    const size_t begin = field.find_first_not_of(" \t\r");
    const size_t end = field.find_last_not_of(" \t\r");
    fields.push_back(begin == std::string::npos
                         ? std::string()
                         : field.substr(begin, end - begin + 1));
  }
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

template <typename T>
T ParseField(const std::string& field, const std::string& where) {
  T value{};
  const char* begin = field.data();
  const char* end = begin + field.size();
  const auto [ptr, ec] = std::from_chars(begin, end, value);
  if (ec != std::errc() || ptr != end || field.empty()) {
    SchemaError(where, "cannot parse '" + field + "'");
  }
  return value;
}

}  // namespace

std::string ReadTextFile(const std::string& path) {
  std::ifstream stream(path, std::ios::binary);
  if (!stream) Throw(ErrorCode::kIo, "cannot open '" + path + "'");
  std::ostringstream contents;
  contents << stream.rdbuf();
  return contents.str();
}

void WriteTextFile(const std::string& path, const std::string& contents) {
  std::ofstream stream(path, std::ios::binary | std::ios::trunc);
  if (!stream) Throw(ErrorCode::kIo, "cannot write '" + path + "'");
  stream << contents;
  if (!stream) Throw(ErrorCode::kIo, "write failed for '" + path + "'");
}

std::string Fnv1aHex(const std::string& bytes) {
  uint64_t hash = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ULL;
  }
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(hash));
  return buffer;
}

std::string FormatDouble(double value) {
  char buffer[64];
  const auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc()) {
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
  }
  return std::string(buffer, ptr);
}

Json ParseJson(const std::string& text, const std::string& name) {
  try {
    return Json::parse(text);
  } catch (const Json::parse_error& error) {
    size_t line = 1;
    size_t column = 1;
    for (size_t i = 0; i + 1 < error.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    Throw(ErrorCode::kSchemaViolation,
          name + ":" + std::to_string(line) + ":" + std::to_string(column) +
              ": invalid JSON");
  }
}

RigFile RigFromJson(const Json& json, const std::string& name) {
  const std::string root = name + ":";
  RejectUnknownKeys(json, {"media", "dome", "intrinsics", "v_off_m"}, root);
  RigFile file;
  CameraRig& rig = file.rig;

  const std::string media_at = root + "/media";
  const Json& media = Require(json, "media", root);
  RejectUnknownKeys(media, {"mu_air", "mu_glass", "mu_water"}, media_at);
  rig.media.mu_air = RequireNumber(media, "mu_air", media_at);
  rig.media.mu_glass = RequireNumber(media, "mu_glass", media_at);
  rig.media.mu_water = RequireNumber(media, "mu_water", media_at);

  const std::string dome_at = root + "/dome";
  const Json& dome = Require(json, "dome", root);
  RejectUnknownKeys(dome, {"inner_radius_m", "thickness_m", "model"}, dome_at);
  rig.dome.inner_radius = RequireNumber(dome, "inner_radius_m", dome_at);
  rig.dome.thickness = RequireNumber(dome, "thickness_m", dome_at);
  const Json& model = Require(dome, "model", dome_at);
  if (!model.is_string()) SchemaError(dome_at + "/model", "expected a string");
  try {
    rig.dome.model = ParseDomeModel(model.get<std::string>());
  } catch (const Error&) {
    SchemaError(dome_at + "/model", "expected \"thin\" or \"thick\"");
  }

  const std::string intrinsics_at = root + "/intrinsics";
  const Json& intrinsics = Require(json, "intrinsics", root);
  RejectUnknownKeys(intrinsics,
                    {"fx_px", "fy_px", "cx_px", "cy_px", "width_px", "height_px"},
                    intrinsics_at);
  rig.intrinsics.focal_length_x = RequireNumber(intrinsics, "fx_px", intrinsics_at);
  rig.intrinsics.focal_length_y = RequireNumber(intrinsics, "fy_px", intrinsics_at);
  rig.intrinsics.principal_point.x() =
      RequireNumber(intrinsics, "cx_px", intrinsics_at);
  rig.intrinsics.principal_point.y() =
      RequireNumber(intrinsics, "cy_px", intrinsics_at);
  rig.intrinsics.width = RequireInteger(intrinsics, "width_px", intrinsics_at);
  rig.intrinsics.height = RequireInteger(intrinsics, "height_px", intrinsics_at);

  if (json.contains("v_off_m")) {
    rig.v_off = RequireVector3(json.at("v_off_m"), root + "/v_off_m");
    file.has_v_off = true;
  }

  try {
    rig.media.Validate();
    rig.dome.Validate();
    rig.intrinsics.Validate();
    rig.Validate();
  } catch (const Error& error) {
    SchemaError(root, error.what());
  }
  return file;
}

Json RigToJson(const CameraRig& rig, bool include_v_off) {
  Json json;
  json["media"] = {{"mu_air", rig.media.mu_air},
                   {"mu_glass", rig.media.mu_glass},
                   {"mu_water", rig.media.mu_water}};
  json["dome"] = {{"inner_radius_m", rig.dome.inner_radius},
                  {"thickness_m", rig.dome.thickness},
                  {"model", DomeModelName(rig.dome.model)}};
  json["intrinsics"] = {{"fx_px", rig.intrinsics.focal_length_x},
                        {"fy_px", rig.intrinsics.focal_length_y},
                        {"cx_px", rig.intrinsics.principal_point.x()},
                        {"cy_px", rig.intrinsics.principal_point.y()},
                        {"width_px", rig.intrinsics.width},
                        {"height_px", rig.intrinsics.height}};
  if (include_v_off) json["v_off_m"] = Vector(rig.v_off);
  return json;
}

RigFile LoadRig(const std::string& path) {
  return RigFromJson(ParseJson(ReadTextFile(path), path), path);
}

ChessboardSpec BoardFromJson(const Json& json, const std::string& name) {
  const std::string root = name + ":";
  RejectUnknownKeys(json, {"rows", "cols", "square_size_m"}, root);
  ChessboardSpec board;
  board.rows = RequireInteger(json, "rows", root);
  board.cols = RequireInteger(json, "cols", root);
  board.square_size = RequireNumber(json, "square_size_m", root);
  try {
    board.Validate();
  } catch (const Error& error) {
    SchemaError(root, error.what());
  }
  return board;
}

Json BoardToJson(const ChessboardSpec& board) {
  return {{"rows", board.rows},
          {"cols", board.cols},
          {"square_size_m", board.square_size}};
}

ChessboardSpec LoadBoard(const std::string& path) {
  return BoardFromJson(ParseJson(ReadTextFile(path), path), path);
}

ObservationSet ObservationsFromCsv(const std::string& text,
                                   const ChessboardSpec& board,
                                   const std::string& name) {
  std::istringstream stream(text);
  std::string line;
  int line_number = 0;
  bool header_seen = false;
  ObservationSet observations;
  observations.board = board;
  std::map<std::string, size_t> image_index;
  std::vector<std::vector<bool>> seen;
  while (std::getline(stream, line)) {
    ++line_number;
    const std::string where = name + ":" + std::to_string(line_number);
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> fields = SplitCsv(line);
    if (!header_seen) {
      const std::vector<std::string> expected = {"image_id", "board_i", "board_j",
                                                 "u_px", "v_px"};
      if (fields != expected) {
        SchemaError(where, "expected header image_id,board_i,board_j,u_px,v_px");
      }
      header_seen = true;
      continue;
    }
    if (fields.size() != 5) SchemaError(where, "expected 5 fields");
    if (fields[0].empty()) SchemaError(where, "empty image_id");
    const int i = ParseField<int>(fields[1], where + ": board_i");
    const int j = ParseField<int>(fields[2], where + ": board_j");
    const double u = ParseField<double>(fields[3], where + ": u_px");
    const double v = ParseField<double>(fields[4], where + ": v_px");
    if (i < 0 || i >= board.cols || j < 0 || j >= board.rows) {
      SchemaError(where, "board index outside the board");
    }
    if (!std::isfinite(u) || !std::isfinite(v)) {
      SchemaError(where, "non-finite pixel coordinate");
    }
    auto [it, inserted] = image_index.emplace(fields[0], observations.images.size());
    if (inserted) {
      ImageObservation image;
      image.id = fields[0];
      image.corners_px.assign(board.corner_count(), Eigen::Vector2d::Zero());
      observations.images.push_back(std::move(image));
      seen.emplace_back(board.corner_count(), false);
    }
    const int index = board.Index(i, j);
    if (seen[it->second][index]) SchemaError(where, "duplicate corner");
    seen[it->second][index] = true;
    observations.images[it->second].corners_px[index] = {u, v};
  }
  if (!header_seen) SchemaError(name, "missing header");
  for (size_t k = 0; k < observations.images.size(); ++k) {
    for (bool present : seen[k]) {
      if (!present) {
        SchemaError(name, "image '" + observations.images[k].id +
                              "' is not a complete grid");
      }
    }
  }
  if (observations.images.empty()) SchemaError(name, "no observations");
  return observations;
}

std::string ObservationsToCsv(const ObservationSet& observations) {
  std::string out = "image_id,board_i,board_j,u_px,v_px\n";
  const ChessboardSpec& board = observations.board;
  for (const ImageObservation& image : observations.images) {
    for (int j = 0; j < board.rows; ++j) {
      for (int i = 0; i < board.cols; ++i) {
        const Eigen::Vector2d& p = image.corners_px[board.Index(i, j)];
        out += image.id + "," + std::to_string(i) + "," + std::to_string(j) +
               "," + FormatDouble(p.x()) + "," + FormatDouble(p.y()) + "\n";
      }
    }
  }
  return out;
}

Json PoseToJson(const Pose& pose) {
  return {{"rotation_axis_angle_rad", Vector(RotationToAngleAxis(pose.rotation))},
          {"translation_m", Vector(pose.translation)}};
}

Pose PoseFromJson(const Json& json, const std::string& where) {
  RejectUnknownKeys(json, {"rotation_axis_angle_rad", "translation_m"}, where);
  Pose pose;
  pose.rotation = AngleAxisToRotation(RequireVector3(
      Require(json, "rotation_axis_angle_rad", where),
      where + "/rotation_axis_angle_rad"));
  pose.translation = RequireVector3(Require(json, "translation_m", where),
                                    where + "/translation_m");
  return pose;
}

Json GroundTruthToJson(const GroundTruth& truth) {
  Json json;
  json["v_off_m"] = Vector(truth.v_off);
  Json poses = Json::array();
  for (const Pose& pose : truth.poses) poses.push_back(PoseToJson(pose));
  json["poses"] = poses;
  return json;
}

GroundTruth GroundTruthFromJson(const Json& json, const std::string& name) {
  const std::string root = name + ":";
  if (!json.is_object()) SchemaError(root, "expected an object");
  GroundTruth truth;
  truth.v_off = RequireVector3(Require(json, "v_off_m", root), root + "/v_off_m");
  const Json& poses = Require(json, "poses", root);
  if (!poses.is_array()) SchemaError(root + "/poses", "expected an array");
  for (size_t i = 0; i < poses.size(); ++i) {
    truth.poses.push_back(
        PoseFromJson(poses[i], root + "/poses/" + std::to_string(i)));
  }
  return truth;
}

Json Vector(const Eigen::VectorXd& values) {
  Json array = Json::array();
  for (Eigen::Index k = 0; k < values.size(); ++k) array.push_back(values(k));
  return array;
}

Json Matrix(const Eigen::MatrixXd& values) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < values.rows(); ++r) {
    rows.push_back(Vector(values.row(r).transpose()));
  }
  return rows;
}

}  // namespace domeport::tools
