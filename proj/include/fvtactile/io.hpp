#pragma once

// JSON, JSONL and CSV formats for geometry, percepts, models, datasets and
// class reports. Every JSON document carries `schema_version`.

#include "fvtactile/learn.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace fvt {

using Json = nlohmann::json;

/// Throws Error("io") when the version is missing or newer than this build.
void check_schema(const Json& j, const std::string& what);

Json to_json(const SensorGeometry& g);
SensorGeometry geometry_from_json(const Json& j);

Json to_json(const PerceptBundle& p);
Json to_json(const StirTrial& trial);

Json to_json(const KrrModel& m);
KrrModel krr_from_json(const Json& j);
Json to_json(const MlpModel& m, const std::vector<std::string>& class_names);
MlpModel mlp_from_json(const Json& j);

Json to_json(const ClassReport& r);

/// Compact single-line dump followed by '\n'.
void write_jsonl(std::ostream& out, const Json& record);
/// Throws Error("io") with the line number on malformed input.
std::vector<Json> read_jsonl(std::istream& in);
std::vector<Json> read_jsonl(const std::filesystem::path& path);

Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);

/// Press dataset CSV: episode,frame,split,force,x0..x{d-1}; split is
/// "train" or "test".
void write_press_csv(std::ostream& out, const PressDataset& ds);
PressDataset read_press_csv(std::istream& in);

/// Stir dataset CSV, one row per trial summary:
/// trial,substance,movement,seed,split,x0..x{d-1}.
void write_stir_csv(std::ostream& out, const StirDataset& ds);
StirDataset read_stir_csv(std::istream& in);

/// Shortest round-trip text form of a double (as used in the JSON logs).
std::string format_number(double v);

}  // namespace fvt
