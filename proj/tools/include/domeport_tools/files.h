#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "domeport/observations.h"
#include "domeport/simkit.h"
#include "domeport/types.h"

namespace domeport::tools {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

std::string ReadTextFile(const std::string& path);
void WriteTextFile(const std::string& path, const std::string& contents);

// 64-bit FNV-1a, as 16 hex digits.
std::string Fnv1aHex(const std::string& bytes);

// Shortest text that parses back to the same double ("%.17g" fallback).
std::string FormatDouble(double value);

// Parses JSON text, reporting syntax errors as "<name>:<line>:<column>: ...".
Json ParseJson(const std::string& text, const std::string& name);

struct RigFile {
  CameraRig rig;
  bool has_v_off = false;
};

// Strict schema: unknown keys are rejected and every length carries its unit
// in the key name.
RigFile RigFromJson(const Json& json, const std::string& name);
Json RigToJson(const CameraRig& rig, bool include_v_off);
RigFile LoadRig(const std::string& path);

ChessboardSpec BoardFromJson(const Json& json, const std::string& name);
Json BoardToJson(const ChessboardSpec& board);
ChessboardSpec LoadBoard(const std::string& path);

// CSV "image_id,board_i,board_j,u_px,v_px"; every image must be a complete
// grid. Images keep their first-appearance order.
ObservationSet ObservationsFromCsv(const std::string& text,
                                   const ChessboardSpec& board,
                                   const std::string& name);
std::string ObservationsToCsv(const ObservationSet& observations);

Json PoseToJson(const Pose& pose);
Pose PoseFromJson(const Json& json, const std::string& where);

Json GroundTruthToJson(const GroundTruth& truth);
GroundTruth GroundTruthFromJson(const Json& json, const std::string& name);

Json Vector(const Eigen::VectorXd& values);
Json Matrix(const Eigen::MatrixXd& values);

}  // namespace domeport::tools
