#include "mpf/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace mpf {
namespace {

using nlohmann::json;

struct Collector {
  std::vector<std::string> errors;

  void add(const std::string& field, const std::string& message) {
    errors.push_back(field + ": " + message);
  }
  bool ok() const { return errors.empty(); }
};

double number_or(const json& j, const std::string& key, double fallback, Collector& errors,
                 const std::string& path) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number()) {
    errors.add(path + key, "expected a number");
    return fallback;
  }
  return j[key].get<double>();
}

int integer_or(const json& j, const std::string& key, int fallback, Collector& errors,
               const std::string& path) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_number_integer()) {
    errors.add(path + key, "expected an integer");
    return fallback;
  }
  return j[key].get<int>();
}

bool boolean_or(const json& j, const std::string& key, bool fallback, Collector& errors,
                const std::string& path) {
  if (!j.contains(key)) return fallback;
  if (!j[key].is_boolean()) {
    errors.add(path + key, "expected a boolean");
    return fallback;
  }
  return j[key].get<bool>();
}

// Reads an array of `expect` numbers into a Vec3, zero-padding the z entry
// for planar data.
Vec3 vec_or_zero(const json& j, int expect, Collector& errors, const std::string& path) {
  Vec3 out = Vec3::Zero();
  if (!j.is_array() || static_cast<int>(j.size()) != expect) {
    errors.add(path, "expected an array of " + std::to_string(expect) + " numbers");
    return out;
  }
  for (int d = 0; d < expect; ++d) {
    if (!j[d].is_number()) {
      errors.add(path, "expected an array of numbers");
      return Vec3::Zero();
    }
    out[d] = j[d].get<double>();
  }
  return out;
}

void parse_chain(const json& root, int dimension, ChainModel& chain, Collector& errors) {
  chain.dimension = dimension;
  if (!root.contains("chain") || !root["chain"].is_object() ||
      !root["chain"].contains("joints") || !root["chain"]["joints"].is_array() ||
      root["chain"]["joints"].empty()) {
    errors.add("chain.joints", "expected a non-empty joint array");
    return;
  }
  const json& joints = root["chain"]["joints"];
  for (std::size_t i = 0; i < joints.size(); ++i) {
    const std::string path = "chain.joints[" + std::to_string(i) + "].";
    const json& spec = joints[i];
    JointSpec joint;
    if (spec.contains("axis")) {
      joint.axis = vec_or_zero(spec["axis"], 3, errors, path + "axis");
      const double norm = joint.axis.norm();
      if (std::abs(norm - 1.0) > 1e-6) {
        errors.add(path + "axis", "must be unit length");
      }
    } else if (dimension == 2) {
      joint.axis = Vec3::UnitZ();
    } else {
      errors.add(path + "axis", "required for 3D chains");
    }
    if (spec.contains("offset")) {
      joint.parent_offset = vec_or_zero(spec["offset"], dimension, errors, path + "offset");
    } else if (i > 0) {
      errors.add(path + "offset", "required past the first joint");
    }
    if (spec.contains("limits")) {
      const json& limits = spec["limits"];
      if (!limits.is_array() || limits.size() != 2 || !limits[0].is_number() ||
          !limits[1].is_number()) {
        errors.add(path + "limits", "expected [lower, upper]");
      } else {
        joint.lower = limits[0].get<double>();
        joint.upper = limits[1].get<double>();
        if (joint.lower >= joint.upper) errors.add(path + "limits", "lower must be below upper");
      }
    }
    chain.joints.push_back(joint);
  }
}

void parse_sensors(const json& root, const std::string& key, int dimension, int joint_count,
                   std::vector<SensorSpec>& sensors, Collector& errors) {
  if (!root.contains(key)) return;
  if (!root[key].is_array()) {
    errors.add(key, "expected an array");
    return;
  }
  for (std::size_t i = 0; i < root[key].size(); ++i) {
    const std::string path = key + "[" + std::to_string(i) + "].";
    const json& spec = root[key][i];
    SensorSpec sensor;
    sensor.link_index = integer_or(spec, "link", -1, errors, path);
    if (sensor.link_index < 0 || sensor.link_index >= joint_count) {
      errors.add(path + "link", "link index outside the chain");
    }
    if (spec.contains("offset")) {
      sensor.local_offset = vec_or_zero(spec["offset"], dimension, errors, path + "offset");
    }
    sensor.radius = number_or(spec, "radius", 0.0, errors, path);
    if (sensor.radius < 0.0) errors.add(path + "radius", "must be >= 0");
    sensors.push_back(sensor);
  }
}

void parse_obstacles(const json& root, int dimension, std::vector<Primitive>& primitives,
                     Collector& errors) {
  if (!root.contains("obstacles") || !root["obstacles"].is_array()) {
    errors.add("obstacles", "expected an array");
    return;
  }
  for (std::size_t i = 0; i < root["obstacles"].size(); ++i) {
    const std::string path = "obstacles[" + std::to_string(i) + "].";
    const json& spec = root["obstacles"][i];
    if (!spec.contains("type") || !spec["type"].is_string()) {
      errors.add(path + "type", "required");
      continue;
    }
    const std::string type = spec["type"].get<std::string>();
    if (type == "point") {
      PointPrimitive p;
      p.center = vec_or_zero(spec.value("center", json::array()), dimension, errors,
                             path + "center");
      primitives.push_back(p);
    } else if (type == "sphere") {
      SpherePrimitive p;
      p.center = vec_or_zero(spec.value("center", json::array()), dimension, errors,
                             path + "center");
      p.radius = number_or(spec, "radius", -1.0, errors, path);
      if (p.radius <= 0.0) errors.add(path + "radius", "must be > 0");
      primitives.push_back(p);
    } else if (type == "box") {
      BoxPrimitive p;
      p.center = vec_or_zero(spec.value("center", json::array()), dimension, errors,
                             path + "center");
      p.half_extents = vec_or_zero(spec.value("half_extents", json::array()), dimension, errors,
                                   path + "half_extents");
      for (int d = 0; d < dimension; ++d) {
        if (p.half_extents[d] <= 0.0) {
          errors.add(path + "half_extents", "must be > 0 per axis");
          break;
        }
      }
      primitives.push_back(p);
    } else if (type == "half_space") {
      HalfSpacePrimitive p;
      p.normal = vec_or_zero(spec.value("normal", json::array()), dimension, errors,
                             path + "normal");
      if (std::abs(p.normal.norm() - 1.0) > 1e-6) errors.add(path + "normal", "must be unit length");
      p.offset = number_or(spec, "offset", 0.0, errors, path);
      primitives.push_back(p);
    } else if (type == "bitmap") {
      if (dimension != 2) {
        errors.add(path + "type", "bitmap obstacles are 2D only");
        continue;
      }
      BitmapPrimitive p;
      const Vec3 origin = vec_or_zero(spec.value("origin", json::array()), 2, errors,
                                      path + "origin");
      p.origin = Eigen::Vector2d(origin[0], origin[1]);
      p.cell_size = number_or(spec, "cell_size", -1.0, errors, path);
      if (p.cell_size <= 0.0) errors.add(path + "cell_size", "must be > 0");
      if (!spec.contains("rows") || !spec["rows"].is_array() || spec["rows"].empty()) {
        errors.add(path + "rows", "expected an array of strings of '0'/'1'");
        continue;
      }
      const json& rows = spec["rows"];
      p.rows = static_cast<int>(rows.size());
      p.cols = 0;
      bool rows_ok = true;
      for (int r = 0; r < p.rows; ++r) {
        if (!rows[r].is_string()) {
          errors.add(path + "rows", "expected strings");
          rows_ok = false;
          break;
        }
        const std::string row = rows[r].get<std::string>();
        if (r == 0) p.cols = static_cast<int>(row.size());
        if (static_cast<int>(row.size()) != p.cols || p.cols == 0) {
          errors.add(path + "rows", "rows must be equal non-zero length");
          rows_ok = false;
          break;
        }
        for (char c : row) {
          if (c != '0' && c != '1') {
            errors.add(path + "rows", "rows may contain only '0' and '1'");
            rows_ok = false;
            break;
          }
          p.mask.push_back(c == '1' ? 1 : 0);
        }
        if (!rows_ok) break;
      }
      // Row 0 of the file reads top-down; flip so row 0 sits at max y.
      if (rows_ok) {
        std::vector<std::uint8_t> flipped(p.mask.size());
        for (int r = 0; r < p.rows; ++r) {
          std::copy(p.mask.begin() + static_cast<std::ptrdiff_t>(r) * p.cols,
                    p.mask.begin() + static_cast<std::ptrdiff_t>(r + 1) * p.cols,
                    flipped.begin() + static_cast<std::ptrdiff_t>(p.rows - 1 - r) * p.cols);
        }
        p.mask = std::move(flipped);
        primitives.push_back(std::move(p));
      }
    } else {
      errors.add(path + "type", "unknown obstacle type '" + type + "'");
    }
  }
}

Config vector_param(const json& root, const std::string& key, int dim, double fallback,
                    Collector& errors) {
  Config out = Config::Constant(dim, fallback);
  if (!root.contains(key)) return out;
  const json& j = root[key];
  if (j.is_number()) {
    out.setConstant(j.get<double>());
  } else if (j.is_array() && static_cast<int>(j.size()) == dim) {
    for (int d = 0; d < dim; ++d) {
      if (!j[d].is_number()) {
        errors.add(key, "expected numbers");
        return Config::Constant(dim, fallback);
      }
      out[d] = j[d].get<double>();
    }
  } else {
    errors.add(key, "expected a number or an array of " + std::to_string(dim));
  }
  return out;
}

Scenario parse_scenario(const json& root, const std::filesystem::path& dir, Collector& errors) {
  Scenario scenario;
  scenario.name = root.value("name", std::string("unnamed"));

  const int dimension = integer_or(root, "dimension", 0, errors, "");
  if (dimension != 2 && dimension != 3) {
    errors.add("dimension", "must be 2 or 3");
    return scenario;
  }

  parse_chain(root, dimension, scenario.world.chain, errors);
  const int n = scenario.world.chain.joint_count();
  if (n == 0) return scenario;

  parse_sensors(root, "sensors", dimension, n, scenario.world.sensors, errors);
  if (scenario.world.sensors.empty()) errors.add("sensors", "expected at least one sensor");
  parse_sensors(root, "bodies", dimension, n, scenario.world.bodies, errors);
  if (scenario.world.bodies.empty()) scenario.world.bodies = scenario.world.sensors;

  WorkspaceBounds bounds;
  bounds.dimension = dimension;
  if (!root.contains("workspace") || !root["workspace"].is_object()) {
    errors.add("workspace", "expected an object with min/max");
  } else {
    bounds.min_corner = vec_or_zero(root["workspace"].value("min", json::array()), dimension,
                                    errors, "workspace.min");
    bounds.max_corner = vec_or_zero(root["workspace"].value("max", json::array()), dimension,
                                    errors, "workspace.max");
    for (int d = 0; d < dimension; ++d) {
      if (bounds.min_corner[d] >= bounds.max_corner[d]) {
        errors.add("workspace", "min must be below max per axis");
        break;
      }
    }
  }

  const double resolution = number_or(root, "sdf_resolution", 0.0, errors, "");
  if (resolution <= 0.0) errors.add("sdf_resolution", "must be > 0");

  std::vector<Primitive> primitives;
  parse_obstacles(root, dimension, primitives, errors);

  scenario.transition.dt = number_or(root, "dt", 0.1, errors, "");
  if (scenario.transition.dt <= 0.0) errors.add("dt", "must be > 0");
  scenario.transition.velocity_noise_radius =
      number_or(root, "velocity_noise_radius", 0.0, errors, "");
  if (scenario.transition.velocity_noise_radius < 0.0) {
    errors.add("velocity_noise_radius", "must be >= 0");
  }

  scenario.particle_count = integer_or(root, "particle_count", 250, errors, "");
  if (scenario.particle_count < 1) errors.add("particle_count", "must be >= 1");

  scenario.prior.variance = vector_param(root, "offset_prior_variance", n, -1.0, errors);
  for (int d = 0; d < n; ++d) {
    if (scenario.prior.variance[d] < 0.0) {
      errors.add("offset_prior_variance", "required, must be >= 0 per joint");
      break;
    }
  }
  scenario.prior.unobserved_half_width =
      number_or(root, "unobserved_half_width", 1.0, errors, "");

  scenario.observed.assign(n, 1);
  if (root.contains("observed")) {
    const json& observed = root["observed"];
    if (!observed.is_array() || static_cast<int>(observed.size()) != n) {
      errors.add("observed", "expected an array of " + std::to_string(n) + " booleans");
    } else {
      for (int d = 0; d < n; ++d) {
        if (!observed[d].is_boolean()) {
          errors.add("observed", "expected booleans");
          break;
        }
        scenario.observed[d] = observed[d].get<bool>() ? 1 : 0;
      }
    }
  }

  scenario.contact_scale = number_or(root, "contact_scale", resolution, errors, "");
  if (scenario.contact_scale <= 0.0) errors.add("contact_scale", "must be > 0");
  scenario.contact_threshold =
      number_or(root, "contact_threshold", 0.5 * resolution, errors, "");
  if (scenario.contact_threshold < 0.0) errors.add("contact_threshold", "must be >= 0");

  const json projection = root.value("projection", json::object());
  scenario.projection.learning_rate =
      number_or(projection, "learning_rate", 0.5, errors, "projection.");
  scenario.projection.max_iterations =
      integer_or(projection, "max_iterations", 100, errors, "projection.");
  scenario.projection.manifold_tolerance = number_or(
      projection, "manifold_tolerance", 0.25 * resolution * resolution, errors, "projection.");
  scenario.projection.step_tolerance =
      number_or(projection, "step_tolerance", 1e-6, errors, "projection.");
  scenario.projection.backtracking_factor =
      number_or(projection, "backtracking_factor", 0.5, errors, "projection.");
  scenario.projection.max_backtracks =
      integer_or(projection, "max_backtracks", 20, errors, "projection.");
  scenario.projection.max_retries = integer_or(projection, "max_retries", 50, errors, "projection.");
  if (scenario.projection.learning_rate <= 0.0) errors.add("projection.learning_rate", "must be > 0");
  if (scenario.projection.max_iterations < 1) errors.add("projection.max_iterations", "must be >= 1");
  if (scenario.projection.manifold_tolerance <= 0.0) {
    errors.add("projection.manifold_tolerance", "must be > 0");
  }
  if (scenario.projection.max_retries < 1) errors.add("projection.max_retries", "must be >= 1");

  const json collision = root.value("collision", json::object());
  scenario.world.collision.penetration_tolerance =
      number_or(collision, "penetration_tolerance", 1e-4, errors, "collision.");
  scenario.world.collision.learning_rate =
      number_or(collision, "learning_rate", 0.25, errors, "collision.");
  scenario.world.collision.max_iterations =
      integer_or(collision, "max_iterations", 100, errors, "collision.");
  scenario.world.collision.backtracking_factor =
      number_or(collision, "backtracking_factor", 0.5, errors, "collision.");
  scenario.world.collision.max_backtracks =
      integer_or(collision, "max_backtracks", 20, errors, "collision.");
  if (scenario.world.collision.penetration_tolerance <= 0.0) {
    errors.add("collision.penetration_tolerance", "must be > 0");
  }

  const json kde = root.value("kde", json::object());
  scenario.kde.bandwidth_floor = number_or(kde, "bandwidth_floor", 1e-3, errors, "kde.");
  if (scenario.kde.bandwidth_floor <= 0.0) errors.add("kde.bandwidth_floor", "must be > 0");

  const std::string resample = root.value("resample", std::string("ess-half"));
  if (resample == "ess-half") {
    scenario.resample = ResamplePolicy::ess_half;
  } else if (resample == "always") {
    scenario.resample = ResamplePolicy::always;
  } else {
    errors.add("resample", "expected 'ess-half' or 'always'");
  }
  scenario.inactive_factor_on_contact =
      boolean_or(root, "inactive_factor_on_contact", true, errors, "");

  if (!root.contains("start_configuration")) {
    errors.add("start_configuration", "required");
  } else {
    scenario.start_configuration = vector_param(root, "start_configuration", n, 0.0, errors);
  }

  if (!root.contains("script") || !root["script"].is_string()) {
    errors.add("script", "expected a path");
  } else if (errors.ok()) {
    try {
      scenario.script = load_script(dir / root["script"].get<std::string>(), n);
    } catch (const ConfigError& e) {
      errors.add("script", e.what());
    }
  }

  if (errors.ok()) {
    std::vector<std::string> warnings;
    const OccupancyGrid occupancy = build_occupancy(primitives, bounds, resolution, &warnings);
    for (const std::string& w : warnings) errors.add("obstacles", w);
    if (errors.ok()) scenario.world.sdf = distance_transform(occupancy);
  }
  return scenario;
}

json read_json(const std::filesystem::path& path, Collector& errors) {
  std::ifstream in(path);
  if (!in) {
    errors.add(path.string(), "cannot open file");
    return json();
  }
  json root = json::parse(in, nullptr, false);
  if (root.is_discarded()) {
    errors.add(path.string(), "invalid JSON");
    return json();
  }
  if (!root.is_object()) {
    errors.add(path.string(), "expected a JSON object");
    return json();
  }
  return root;
}

}  // namespace

Scenario load_scenario(const std::filesystem::path& path) {
  Collector errors;
  const json root = read_json(path, errors);
  Scenario scenario;
  if (errors.ok()) scenario = parse_scenario(root, path.parent_path(), errors);
  if (!errors.ok()) {
    std::string what = "invalid scenario " + path.string();
    for (const std::string& e : errors.errors) what += "\n  " + e;
    throw ConfigError(what);
  }
  return scenario;
}

std::vector<std::string> validate_scenario_file(const std::filesystem::path& path) {
  Collector errors;
  const json root = read_json(path, errors);
  if (errors.ok()) parse_scenario(root, path.parent_path(), errors);
  return errors.errors;
}

std::string describe_scenario(const Scenario& scenario) {
  std::ostringstream out;
  const int n = scenario.joint_count();
  out << "scenario:            " << scenario.name << '\n';
  out << "joints:              " << n << '\n';
  out << "sensors:             " << scenario.world.sensors.size() << '\n';
  out << "collision bodies:    " << scenario.world.bodies.size() << '\n';
  out << "sdf dims:            " << scenario.world.sdf.dims[0] << " x "
      << scenario.world.sdf.dims[1] << " x " << scenario.world.sdf.dims[2] << " @ "
      << scenario.world.sdf.resolution << " m\n";
  out << "timesteps:           " << scenario.script.size() << " (dt " << scenario.transition.dt
      << " s)\n";
  out << "particle count:      " << scenario.particle_count << '\n';
  out << "offset prior var:    ";
  bool isotropic = true;
  for (int d = 1; d < n; ++d) {
    if (scenario.prior.variance[d] != scenario.prior.variance[0]) isotropic = false;
  }
  if (isotropic) {
    out << scenario.prior.variance[0] << " * I\n";
  } else {
    out << scenario.prior.variance.transpose() << '\n';
  }
  out << "velocity noise:      " << scenario.transition.velocity_noise_radius << " rad/s\n";
  out << "contact scale:       " << scenario.contact_scale << " m\n";
  out << "contact threshold:   " << scenario.contact_threshold << " m\n";
  out << "manifold tolerance:  " << scenario.projection.manifold_tolerance << " m^2\n";
  out << "kde bandwidth floor: " << scenario.kde.bandwidth_floor << " rad\n";
  out << "resample:            "
      << (scenario.resample == ResamplePolicy::always ? "always" : "ess-half") << '\n';
  return out.str();
}

std::vector<Config> load_script(const std::filesystem::path& path, int dim) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open script " + path.string());
  std::vector<Config> rows;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    std::istringstream fields(line);
    std::vector<double> values;
    double v;
    while (fields >> v) values.push_back(v);
    if (values.empty()) continue;
    if (static_cast<int>(values.size()) != dim) {
      throw ConfigError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                        std::to_string(dim) + " values, got " + std::to_string(values.size()));
    }
    rows.push_back(Eigen::Map<const Config>(values.data(), dim));
  }
  if (rows.empty()) throw ConfigError(path.string() + ": empty script");
  return rows;
}

std::uint64_t fnv1a_hash(const std::string& bytes) {
  std::uint64_t hash = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 1099511628211ull;
  }
  return hash;
}

std::string file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open " + path.string());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

std::string manifest_json(const std::filesystem::path& scenario_path,
                          const std::vector<std::string>& estimators, int trials,
                          std::uint64_t seed) {
  nlohmann::json manifest;
  manifest["scenario"] = scenario_path.filename().string();
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(fnv1a_hash(file_bytes(scenario_path))));
  manifest["config_hash"] = hash;
  manifest["estimators"] = estimators;
  manifest["trials"] = trials;
  manifest["seed"] = seed;
  return manifest.dump(2) + "\n";
}

}  // namespace mpf
