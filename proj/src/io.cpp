#include "collact/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <sstream>

#include "collact/error.hpp"

namespace collact {

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    out.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') {
    out.emplace_back();
  }
  return out;
}

double parse_double(const std::string& s) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError("not a number: '" + s + "'");
  }
  if (pos != s.size()) {
    throw ConfigError("not a number: '" + s + "'");
  }
  return v;
}

std::int64_t parse_int(const std::string& s) {
  std::size_t pos = 0;
  long long v = 0;
  try {
    v = std::stoll(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError("not an integer: '" + s + "'");
  }
  if (pos != s.size()) {
    throw ConfigError("not an integer: '" + s + "'");
  }
  return v;
}

void expect_header(const CsvTable& t, const std::vector<std::string>& want, const fs::path& path) {
  if (t.header != want) {
    throw ConfigError("unexpected header in " + path.string());
  }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

}  // namespace

std::string format_double(double v) {
  if (v == 0.0) {
    return "0";  // folds -0
  }
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == name) {
      return i;
    }
  }
  throw ConfigError("missing column '" + name + "'");
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw ConfigError("cannot open " + path.string());
  }
  CsvTable t;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty() || line[0] == '#') {
      continue;
    }
    auto cells = split(line);
    if (first) {
      t.header = std::move(cells);
      first = false;
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw ConfigError("ragged row in " + path.string());
    }
    t.rows.push_back(std::move(cells));
  }
  if (first) {
    throw ConfigError("empty CSV file " + path.string());
  }
  return t;
}

void write_text(const fs::path& path, const std::string& content) {
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw ConfigError("cannot write " + path.string());
  }
  out << content;
  if (!out) {
    throw ConfigError("write failed for " + path.string());
  }
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open " + path.string());
  }
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path universe_sidecar(const fs::path& csv_path) {
  fs::path p = csv_path;
  p.replace_extension(".universe.json");
  return p;
}

void write_distribution(const fs::path& csv_path, const FiniteJointDistribution& p) {
  const auto& u = p.universe();
  std::string out = "x_code,y,label_mass\n";
  for (std::size_t x = 0; x < u.feature_count(); ++x) {
    for (std::size_t y = 0; y < u.label_count(); ++y) {
      const double m = p.mass(x, y);
      if (m > 0.0) {
        out += std::to_string(u.feature_code(x)) + "," + std::to_string(y) + "," + format_double(m) + "\n";
      }
    }
  }
  write_text(csv_path, out);
  json meta;
  meta["schema"] = kUniverseSchema;
  meta["label_count"] = u.label_count();
  meta["feature_codes"] = u.feature_codes();
  write_text(universe_sidecar(csv_path), meta.dump(2) + "\n");
}

FiniteJointDistribution read_distribution(const fs::path& csv_path) {
  json meta;
  try {
    meta = json::parse(read_text(universe_sidecar(csv_path)));
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad universe descriptor: ") + e.what());
  }
  if (meta.value("schema", "") != kUniverseSchema) {
    throw ConfigError("universe descriptor has the wrong schema tag");
  }
  auto u = std::make_shared<const Universe>(meta.at("feature_codes").get<std::vector<std::int64_t>>(),
                                            meta.at("label_count").get<std::size_t>());
  const CsvTable t = read_csv(csv_path);
  expect_header(t, {"x_code", "y", "label_mass"}, csv_path);
  std::vector<double> mass(u->size(), 0.0);
  for (const auto& row : t.rows) {
    const auto x = u->feature_index(parse_int(row[0]));
    const auto y = parse_int(row[1]);
    if (!x || y < 0 || static_cast<std::size_t>(y) >= u->label_count()) {
      throw ConfigError("distribution row outside the universe");
    }
    mass[u->point(*x, static_cast<std::size_t>(y))] += parse_double(row[2]);
  }
  return FiniteJointDistribution(u, std::move(mass));
}

void write_signal_map(const fs::path& path, const Universe& u, const SignalMap& g) {
  std::string out = "x_code,g_x_code\n";
  for (std::size_t x = 0; x < g.image.size(); ++x) {
    out += std::to_string(u.feature_code(x)) + "," + std::to_string(u.feature_code(g.image[x])) + "\n";
  }
  write_text(path, out);
}

SignalMap read_signal_map(const fs::path& path, const Universe& u) {
  const CsvTable t = read_csv(path);
  expect_header(t, {"x_code", "g_x_code"}, path);
  SignalMap g;
  g.image.assign(u.feature_count(), 0);
  std::vector<bool> seen(u.feature_count(), false);
  for (const auto& row : t.rows) {
    const auto x = u.feature_index(parse_int(row[0]));
    const auto gx = u.feature_index(parse_int(row[1]));
    if (!x || !gx) {
      throw ConfigError("signal map refers to an unknown feature code");
    }
    g.image[*x] = *gx;
    seen[*x] = true;
  }
  for (bool s : seen) {
    if (!s) {
      throw ConfigError("signal map does not cover every feature");
    }
  }
  return g;
}

std::string curve_csv(const SuccessCurve& curve) {
  std::string out = "alpha,success,stderr,mode\n";
  for (const auto& pt : curve.points) {
    out += format_double(pt.alpha) + "," + format_double(pt.success) + "," +
           format_double(pt.std_error) + "," + to_string(pt.mode) + "\n";
  }
  return out;
}

void write_curve(const fs::path& path, const SuccessCurve& curve) { write_text(path, curve_csv(curve)); }

SuccessCurve read_curve(const fs::path& path) {
  const CsvTable t = read_csv(path);
  expect_header(t, {"alpha", "success", "stderr", "mode"}, path);
  SuccessCurve curve;
  for (const auto& row : t.rows) {
    curve.points.push_back(
        CurvePoint{parse_double(row[0]), parse_double(row[1]), parse_double(row[2]), eval_mode_from_string(row[3])});
  }
  curve.validate(false);
  return curve;
}

void write_data(const fs::path& path, const DataDistribution& p) {
  const std::size_t d = p.dim();
  std::string out = "weight";
  for (std::size_t i = 1; i <= d; ++i) {
    out += ",x_" + std::to_string(i);
  }
  out += ",y\n";
  for (const auto& a : p.atoms()) {
    out += format_double(a.weight);
    for (std::size_t i = 0; i < d; ++i) {
      out += "," + format_double(a.x[static_cast<Eigen::Index>(i)]);
    }
    out += "," + format_double(a.y) + "\n";
  }
  write_text(path, out);
}

DataDistribution read_data(const fs::path& path) {
  const CsvTable t = read_csv(path);
  if (t.header.size() < 3 || t.header.front() != "weight" || t.header.back() != "y") {
    throw ConfigError("data file needs columns weight,x_1..x_d,y");
  }
  const std::size_t d = t.header.size() - 2;
  for (std::size_t i = 0; i < d; ++i) {
    if (t.header[i + 1] != "x_" + std::to_string(i + 1)) {
      throw ConfigError("data file needs columns weight,x_1..x_d,y");
    }
  }
  std::vector<Atom> atoms;
  for (const auto& row : t.rows) {
    Atom a;
    a.weight = parse_double(row[0]);
    a.x = Vector(static_cast<Eigen::Index>(d));
    for (std::size_t i = 0; i < d; ++i) {
      a.x[static_cast<Eigen::Index>(i)] = parse_double(row[i + 1]);
    }
    a.y = parse_double(row.back());
    atoms.push_back(std::move(a));
  }
  if (atoms.empty()) {
    throw ConfigError("data file has no rows");
  }
  return DataDistribution(std::move(atoms));
}

json vector_to_json(const Vector& v) {
  json arr = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) {
    arr.push_back(v[i]);
  }
  return arr;
}

Vector vector_from_json(const json& j) {
  const auto vals = j.get<std::vector<double>>();
  Vector v(static_cast<Eigen::Index>(vals.size()));
  for (std::size_t i = 0; i < vals.size(); ++i) {
    v[static_cast<Eigen::Index>(i)] = vals[i];
  }
  return v;
}

json load_job(const fs::path& path) {
  json j;
  try {
    j = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ConfigError("cannot parse " + path.string() + ": " + e.what());
  }
  if (!j.is_object() || j.value("schema", "") != kJobSchema) {
    throw ConfigError(path.string() + ": expected \"schema\": \"" + kJobSchema + "\"");
  }
  return j;
}

ScenarioSpec scenario_from_json(const json& j) {
  ScenarioSpec s;
  try {
    s.kind = scenario_kind_from_string(j.at("kind").get<std::string>());
    s.feature_count = get_or<std::size_t>(j, "feature_count", s.feature_count);
    s.label_count = get_or<std::size_t>(j, "label_count", s.label_count);
    s.dim = get_or<std::size_t>(j, "dim", s.dim);
    s.atom_count = get_or<std::size_t>(j, "atom_count", s.atom_count);
    if (j.contains("uniqueness")) {
      s.uniqueness = j.at("uniqueness").get<double>();
    }
    s.target_label = get_or<std::size_t>(j, "target_label", s.target_label);
    s.label_noise = get_or<double>(j, "label_noise", s.label_noise);
    s.trigger_encoding = get_or<std::size_t>(j, "trigger_encoding", s.trigger_encoding);
    s.sensitivity = get_or<double>(j, "sensitivity", s.sensitivity);
    s.ridge_lambda = get_or<double>(j, "ridge_lambda", s.ridge_lambda);
    s.seed = get_or<std::uint64_t>(j, "seed", s.seed);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad scenario block: ") + e.what());
  }
  s.validate();
  return s;
}

json scenario_to_json(const ScenarioSpec& s) {
  json j;
  j["kind"] = to_string(s.kind);
  j["feature_count"] = s.feature_count;
  j["label_count"] = s.label_count;
  j["dim"] = s.dim;
  j["atom_count"] = s.atom_count;
  if (s.uniqueness) {
    j["uniqueness"] = *s.uniqueness;
  }
  j["target_label"] = s.target_label;
  j["label_noise"] = s.label_noise;
  j["trigger_encoding"] = s.trigger_encoding;
  j["sensitivity"] = s.sensitivity;
  j["ridge_lambda"] = s.ridge_lambda;
  j["seed"] = s.seed;
  return j;
}

std::vector<double> alpha_grid_from_json(const json& j) {
  if (j.is_null()) {
    return geometric_grid(1e-4, 1.0, 25);
  }
  try {
    if (j.is_array()) {
      auto grid = j.get<std::vector<double>>();
      for (std::size_t i = 0; i < grid.size(); ++i) {
        if (!(grid[i] >= 0.0 && grid[i] <= 1.0) || (i > 0 && !(grid[i] > grid[i - 1]))) {
          throw ConfigError("alpha grid must be strictly increasing inside [0, 1]");
        }
      }
      if (grid.empty()) {
        throw ConfigError("alpha grid is empty");
      }
      return grid;
    }
    for (const char* kind : {"geometric", "linear"}) {
      if (j.contains(kind)) {
        const auto& g = j.at(kind);
        const double lo = g.at("min").get<double>();
        const double hi = g.at("max").get<double>();
        const auto n = g.at("count").get<std::size_t>();
        if (!(lo >= 0.0 && hi <= 1.0 && lo < hi) || n < 2) {
          throw ConfigError("alpha grid needs 0 <= min < max <= 1 and count >= 2");
        }
        return std::string(kind) == "geometric" ? geometric_grid(lo, hi, n) : linear_grid(lo, hi, n);
      }
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad alpha grid: ") + e.what());
  }
  throw ConfigError("alpha grid must be a list or a geometric/linear block");
}

}  // namespace collact
