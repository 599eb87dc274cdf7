#include "fvtactile/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace fvt {

namespace {

Json vec_json(const VecX& v) { return Json(std::vector<double>(v.data(), v.data() + v.size())); }

VecX json_vec(const Json& j) {
  const auto v = j.get<std::vector<double>>();
  return Eigen::Map<const VecX>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Json rows_json(const MatX& m) {
  Json out = Json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(vec_json(m.row(i).transpose()));
  return out;
}

MatX json_rows(const Json& j) {
  if (j.empty()) return {};
  MatX m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j.front().size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (j[i].size() != static_cast<std::size_t>(m.cols())) throw Error("io", "ragged matrix in JSON");
    m.row(static_cast<Eigen::Index>(i)) = json_vec(j[i]).transpose();
  }
  return m;
}

Json standardizer_json(const Standardizer& s) {
  return {{"mean", vec_json(s.mean)}, {"scale", vec_json(s.scale)}};
}

Standardizer json_standardizer(const Json& j) {
  Standardizer s;
  s.mean = json_vec(j.at("mean"));
  s.scale = json_vec(j.at("scale"));
  return s;
}

Json vec3_json(const Vec3& v) { return Json::array({v.x(), v.y(), v.z()}); }

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, std::size_t line) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Error("io", "line " + std::to_string(line) + ": not a number: '" + s + "'");
  }
}

template <typename T>
T get_field(const Json& j, const char* key) {
  try {
    return j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw Error("io", std::string("field '") + key + "': " + e.what());
  }
}

}  // namespace

std::string format_number(double v) {
  if (!std::isfinite(v)) return "nan";
  return Json(v).dump();
}

void check_schema(const Json& j, const std::string& what) {
  if (!j.is_object() || !j.contains("schema_version") || !j["schema_version"].is_number_integer()) {
    throw Error("io", what + ": missing schema_version");
  }
  const int v = j["schema_version"].get<int>();
  if (v < 1 || v > kSchemaVersion) {
    throw Error("io", what + ": unsupported schema_version " + std::to_string(v));
  }
}

// ---------------------------------------------------------------------------

Json to_json(const SensorGeometry& g) {
  Json layout = Json::array();
  for (const auto& p : g.marker_layout) layout.push_back({p.x(), p.y()});
  return {{"schema_version", kSchemaVersion},
          {"image_width", g.image_width},
          {"image_height", g.image_height},
          {"nominal_marker_radius", g.nominal_marker_radius},
          {"frame_rate_hz", g.frame_rate_hz},
          {"marker_layout", layout}};
}

SensorGeometry geometry_from_json(const Json& j) {
  check_schema(j, "geometry");
  SensorGeometry g;
  g.image_width = get_field<int>(j, "image_width");
  g.image_height = get_field<int>(j, "image_height");
  g.nominal_marker_radius = get_field<double>(j, "nominal_marker_radius");
  g.frame_rate_hz = get_field<double>(j, "frame_rate_hz");
  for (const auto& p : j.at("marker_layout")) {
    if (!p.is_array() || p.size() != 2) throw Error("io", "marker_layout entries must be [x, y]");
    g.marker_layout.emplace_back(p[0].get<double>(), p[1].get<double>());
  }
  g.validate();
  return g;
}

Json to_json(const PerceptBundle& p) {
  Json object = {{"present", p.object.present}};
  if (p.object.present) {
    object["x"] = p.object.x;
    object["y"] = p.object.y;
    object["area"] = p.object.area;
    object["theta"] = p.object.theta;
    object["degenerate_orientation"] = p.object.degenerate_orientation;
  }
  return {{"schema_version", kSchemaVersion},
          {"frame", p.frame},
          {"force", vec3_json(p.force.f)},
          {"torque", p.torque.tau_z},
          {"object", object},
          {"slip",
           {{"flow", p.slip.flow_magnitude}, {"active", p.slip.active}, {"blocks", p.slip.blocks}}}};
}

Json to_json(const StirTrial& trial) {
  Json frames = Json::array();
  for (const auto& f : trial.frames) {
    Json markers = Json::array();
    for (const auto& m : f.markers) {
      markers.push_back({m.x, m.y, m.s, m.valid});
    }
    frames.push_back({{"markers", markers},
                      {"stick", {f.stick.x, f.stick.y, f.stick.theta}}});
  }
  return {{"schema_version", kSchemaVersion},
          {"substance", std::string(substance_name(trial.substance))},
          {"movement_id", trial.movement_id},
          {"seed", trial.seed},
          {"frames", frames}};
}

// ---------------------------------------------------------------------------

Json to_json(const KrrModel& m) {
  return {{"schema_version", kSchemaVersion},
          {"kind", "krr"},
          {"gamma", m.gamma},
          {"lambda", m.lambda},
          {"standardizer", standardizer_json(m.standardizer)},
          {"support", rows_json(m.support)},
          {"weights", vec_json(m.weights)}};
}

KrrModel krr_from_json(const Json& j) {
  check_schema(j, "krr model");
  if (get_field<std::string>(j, "kind") != "krr") throw Error("io", "not a krr model");
  KrrModel m;
  m.gamma = get_field<double>(j, "gamma");
  m.lambda = get_field<double>(j, "lambda");
  m.standardizer = json_standardizer(j.at("standardizer"));
  m.support = json_rows(j.at("support"));
  m.weights = json_vec(j.at("weights"));
  if (m.weights.size() != m.support.rows()) throw Error("io", "weights/support size mismatch");
  return m;
}

Json to_json(const MlpModel& m, const std::vector<std::string>& class_names) {
  Json weights = Json::array();
  Json biases = Json::array();
  for (std::size_t l = 0; l < m.weights.size(); ++l) {
    weights.push_back(rows_json(m.weights[l]));
    biases.push_back(vec_json(m.biases[l]));
  }
  return {{"schema_version", kSchemaVersion},
          {"kind", "mlp"},
          {"layers", m.layers},
          {"activation", "sigmoid"},
          {"output", "softmax"},
          {"classes", class_names},
          {"standardizer", standardizer_json(m.standardizer)},
          {"weights", weights},
          {"biases", biases}};
}

MlpModel mlp_from_json(const Json& j) {
  check_schema(j, "mlp model");
  if (get_field<std::string>(j, "kind") != "mlp") throw Error("io", "not an mlp model");
  MlpModel m;
  m.layers = get_field<std::vector<int>>(j, "layers");
  m.standardizer = json_standardizer(j.at("standardizer"));
  const auto& w = j.at("weights");
  const auto& b = j.at("biases");
  if (w.size() + 1 != m.layers.size() || b.size() != w.size()) throw Error("io", "layer count mismatch");
  for (std::size_t l = 0; l < w.size(); ++l) {
    m.weights.push_back(json_rows(w[l]));
    m.biases.push_back(json_vec(b[l]));
    if (m.weights[l].rows() != m.layers[l + 1] || m.weights[l].cols() != m.layers[l] ||
        m.biases[l].size() != m.layers[l + 1]) {
      throw Error("io", "layer " + std::to_string(l) + " has the wrong shape");
    }
  }
  return m;
}

Json to_json(const ClassReport& r) {
  auto metrics = [](const ClassMetrics& m) {
    return Json{{"precision", m.precision}, {"recall", m.recall}, {"f1", m.f1}, {"support", m.support}};
  };
  Json classes = Json::object();
  for (const auto& c : r.classes) classes[c.name] = metrics(c);
  return {{"schema_version", kSchemaVersion},
          {"classes", classes},
          {"macro_avg", metrics(r.macro)},
          {"weighted_avg", metrics(r.weighted)},
          {"accuracy", r.accuracy},
          {"confusion", r.confusion}};
}

// ---------------------------------------------------------------------------

void write_jsonl(std::ostream& out, const Json& record) { out << record.dump() << '\n'; }

std::vector<Json> read_jsonl(std::istream& in) {
  std::vector<Json> out;
  std::string line;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    ++n;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const Json::parse_error& e) {
      throw Error("io", "line " + std::to_string(n) + ": " + e.what());
    }
  }
  return out;
}

std::vector<Json> read_jsonl(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open " + path.string());
  return read_jsonl(in);
}

Json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("io", "cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error("io", path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const Json& j) {
  std::ofstream out(path);
  if (!out) throw Error("io", "cannot write " + path.string());
  out << j.dump(2) << '\n';
}

// ---------------------------------------------------------------------------

void write_press_csv(std::ostream& out, const PressDataset& ds) {
  out << "episode,frame,split,force";
  for (Eigen::Index k = 0; k < ds.X.cols(); ++k) out << ",x" << k;
  out << '\n';
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto r = static_cast<Eigen::Index>(i);
    out << ds.episode[i] << ',' << ds.frame[i] << ',' << (ds.is_test[i] ? "test" : "train") << ','
        << format_number(ds.y(r));
    for (Eigen::Index k = 0; k < ds.X.cols(); ++k) out << ',' << format_number(ds.X(r, k));
    out << '\n';
  }
}

PressDataset read_press_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("io", "empty press dataset");
  const auto header = split_csv(line);
  if (header.size() < 5 || header[0] != "episode" || header[3] != "force") {
    throw Error("io", "line 1: not a press dataset header");
  }
  const std::size_t d = header.size() - 4;
  std::vector<std::vector<double>> rows;
  std::vector<double> y;
  PressDataset ds;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw Error("io", "line " + std::to_string(n) + ": expected " +
                            std::to_string(header.size()) + " fields");
    }
    ds.episode.push_back(static_cast<int>(parse_double(cells[0], n)));
    ds.frame.push_back(static_cast<int>(parse_double(cells[1], n)));
    if (cells[2] != "train" && cells[2] != "test") {
      throw Error("io", "line " + std::to_string(n) + ": split must be train or test");
    }
    ds.is_test.push_back(cells[2] == "test");
    y.push_back(parse_double(cells[3], n));
    std::vector<double> r(d);
    for (std::size_t k = 0; k < d; ++k) r[k] = parse_double(cells[4 + k], n);
    rows.push_back(std::move(r));
  }
  ds.X.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(d));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    ds.X.row(static_cast<Eigen::Index>(i)) =
        Eigen::Map<const VecX>(rows[i].data(), static_cast<Eigen::Index>(d)).transpose();
  }
  ds.y = Eigen::Map<const VecX>(y.data(), static_cast<Eigen::Index>(y.size()));
  return ds;
}

void write_stir_csv(std::ostream& out, const StirDataset& ds) {
  out << "trial,substance,movement,seed,split";
  const Eigen::Index d = ds.trials.empty() ? 0 : ds.trials.front().summary.size();
  for (Eigen::Index k = 0; k < d; ++k) out << ",x" << k;
  out << '\n';
  for (std::size_t i = 0; i < ds.trials.size(); ++i) {
    const auto& t = ds.trials[i];
    out << i << ',' << substance_name(t.substance) << ',' << t.movement_id << ',' << t.seed << ','
        << (t.is_test ? "test" : "train");
    for (Eigen::Index k = 0; k < d; ++k) out << ',' << format_number(t.summary(k));
    out << '\n';
  }
}

StirDataset read_stir_csv(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("io", "empty stir dataset");
  const auto header = split_csv(line);
  if (header.size() < 6 || header[0] != "trial" || header[1] != "substance") {
    throw Error("io", "line 1: not a stir dataset header");
  }
  const std::size_t d = header.size() - 5;
  StirDataset ds;
  std::size_t n = 1;
  while (std::getline(in, line)) {
    ++n;
    if (line.empty()) continue;
    const auto cells = split_csv(line);
    if (cells.size() != header.size()) {
      throw Error("io", "line " + std::to_string(n) + ": expected " +
                            std::to_string(header.size()) + " fields");
    }
    StirRecord r;
    try {
      r.substance = parse_substance(cells[1]);
      r.seed = std::stoull(cells[3]);
    } catch (const Error& e) {
      throw Error("io", "line " + std::to_string(n) + ": " + e.what());
    } catch (const std::exception&) {
      throw Error("io", "line " + std::to_string(n) + ": bad seed");
    }
    r.movement_id = static_cast<int>(parse_double(cells[2], n));
    if (cells[4] != "train" && cells[4] != "test") {
      throw Error("io", "line " + std::to_string(n) + ": split must be train or test");
    }
    r.is_test = cells[4] == "test";
    r.summary.resize(static_cast<Eigen::Index>(d));
    for (std::size_t k = 0; k < d; ++k) r.summary(static_cast<Eigen::Index>(k)) = parse_double(cells[5 + k], n);
    ds.trials.push_back(std::move(r));
  }
  return ds;
}

}  // namespace fvt
