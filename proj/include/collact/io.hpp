#pragma once

// CSV and JSON artifacts. Numbers are written with %.17g so files round-trip
// exactly and identical runs give identical bytes.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "collact/curve.hpp"
#include "collact/probkit.hpp"
#include "collact/riskmin.hpp"
#include "collact/scenario.hpp"

namespace collact {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

inline constexpr const char* kJobSchema = "collact.job/1";
inline constexpr const char* kUniverseSchema = "collact.universe/1";

std::string format_double(double v);

// Minimal CSV table: header plus rows of raw cells. No quoting; none of our
// columns can contain commas.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const;  // throws ConfigError
};

CsvTable read_csv(const fs::path& path);
void write_text(const fs::path& path, const std::string& content);
std::string read_text(const fs::path& path);

// Distribution table `x_code,y,label_mass` (zero-mass rows omitted) plus the
// universe descriptor written next to it as `<stem>.universe.json`.
void write_distribution(const fs::path& csv_path, const FiniteJointDistribution& p);
FiniteJointDistribution read_distribution(const fs::path& csv_path);
fs::path universe_sidecar(const fs::path& csv_path);

// `x_code,g_x_code`.
void write_signal_map(const fs::path& path, const Universe& u, const SignalMap& g);
SignalMap read_signal_map(const fs::path& path, const Universe& u);

std::string curve_csv(const SuccessCurve& curve);
void write_curve(const fs::path& path, const SuccessCurve& curve);
SuccessCurve read_curve(const fs::path& path);

// `weight,x_1..x_d,y`.
void write_data(const fs::path& path, const DataDistribution& p);
DataDistribution read_data(const fs::path& path);

json vector_to_json(const Vector& v);
Vector vector_from_json(const json& j);

// Job config helpers.
json load_job(const fs::path& path);  // checks the schema tag
ScenarioSpec scenario_from_json(const json& j);
json scenario_to_json(const ScenarioSpec& spec);
// Either a list of numbers or {"geometric"|"linear": {"min", "max", "count"}}.
// Absent: geometric from 1e-4 to 1 with 25 points.
std::vector<double> alpha_grid_from_json(const json& j);

}  // namespace collact
