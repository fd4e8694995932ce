#include "meanforce/cli/config.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <initializer_list>
#include <numbers>
#include <sstream>
#include <string_view>

namespace meanforce::cli {

ParseError::ParseError(const std::string& message, int line, int column)
    : Error("parse error at line " + std::to_string(line) + ", column " + std::to_string(column) +
            ": " + message),
      line_(line), column_(column) {}

SemanticError::SemanticError(const std::string& key, const std::string& message)
    : Error(key + ": " + message), key_(key) {}

std::string to_string(Task task) {
    switch (task) {
    case Task::validate: return "validate";
    case Task::thermo_sweep: return "thermo-sweep";
    case Task::correlators: return "correlators";
    case Task::oracle_compare: return "oracle-compare";
    case Task::langevin: return "langevin";
    }
    return "unknown";
}

std::string to_string(OutputFormat format) {
    switch (format) {
    case OutputFormat::csv: return "csv";
    case OutputFormat::json: return "json";
    case OutputFormat::both: return "both";
    }
    return "unknown";
}

bool RunConfig::operator==(const RunConfig& other) const {
    return task == other.task && model == other.model && temperatures == other.temperatures &&
           quadrature == other.quadrature && oracle == other.oracle &&
           simulation == other.simulation && correlators == other.correlators &&
           output_path == other.output_path && format == other.format;
}

namespace {

std::string join(const std::string& path, const std::string& key) {
    return path.empty() ? key : path + "." + key;
}

std::string indexed(const std::string& path, std::size_t i) {
    return path + "[" + std::to_string(i) + "]";
}

void require_map(const YAML::Node& node, const std::string& path) {
    if (!node.IsMap()) throw SemanticError(path.empty() ? "<root>" : path, "expected a table");
}

void check_keys(const YAML::Node& node, const std::string& path,
                std::initializer_list<std::string_view> allowed) {
    require_map(node, path);
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        bool known = false;
        for (auto a : allowed) known = known || key == a;
        if (!known) throw SemanticError(join(path, key), "unknown key");
    }
}

template <typename T>
T scalar(const YAML::Node& node, const std::string& path, const char* what) {
    if (!node.IsScalar()) throw SemanticError(path, std::string("expected ") + what);
    try {
        return node.as<T>();
    } catch (const YAML::Exception&) {
        throw SemanticError(path, std::string("expected ") + what);
    }
}

double number(const YAML::Node& node, const std::string& path) {
    return scalar<double>(node, path, "a number");
}

int integer(const YAML::Node& node, const std::string& path) {
    return scalar<int>(node, path, "an integer");
}

std::vector<double> numbers(const YAML::Node& node, const std::string& path) {
    if (!node.IsSequence()) throw SemanticError(path, "expected a list of numbers");
    std::vector<double> out;
    for (std::size_t i = 0; i < node.size(); ++i) out.push_back(number(node[i], indexed(path, i)));
    return out;
}

Vec3 vec3(const YAML::Node& node, const std::string& path) {
    const auto v = numbers(node, path);
    if (v.size() != 3) throw SemanticError(path, "expected exactly 3 numbers");
    return Vec3(v[0], v[1], v[2]);
}

const YAML::Node required(const YAML::Node& map, const std::string& path, const char* key) {
    const YAML::Node node = map[key];
    if (!node) throw SemanticError(join(path, key), "required key is missing");
    return node;
}

Mat3 parse_rotation(const YAML::Node& node, const std::string& path) {
    check_keys(node, path, {"axis", "angle", "matrix"});
    const bool has_matrix = static_cast<bool>(node["matrix"]);
    const bool has_axis = node["axis"] || node["angle"];
    if (has_matrix == has_axis) {
        throw SemanticError(path, "give either matrix or axis and angle");
    }
    if (has_matrix) {
        const YAML::Node rows = node["matrix"];
        const std::string mpath = join(path, "matrix");
        if (!rows.IsSequence() || rows.size() != 3) throw SemanticError(mpath, "expected 3 rows");
        Mat3 m;
        for (int i = 0; i < 3; ++i) m.row(i) = vec3(rows[i], indexed(mpath, i)).transpose();
        return m;
    }
    const Vec3 axis = vec3(required(node, path, "axis"), join(path, "axis"));
    if (!(axis.norm() > 0.0)) throw SemanticError(join(path, "axis"), "axis must be nonzero");
    return axis_angle_rotation(axis, number(required(node, path, "angle"), join(path, "angle")));
}

ModelSpec parse_model(const YAML::Node& node, const std::string& path) {
    check_keys(node, path, {"omega0", "hbar", "kB", "bands"});
    ModelSpec spec;
    spec.omega0 = number(required(node, path, "omega0"), join(path, "omega0"));
    if (node["hbar"]) spec.units.hbar = number(node["hbar"], join(path, "hbar"));
    if (node["kB"]) spec.units.kB = number(node["kB"], join(path, "kB"));
    const YAML::Node bands = required(node, path, "bands");
    const std::string bpath = join(path, "bands");
    if (!bands.IsSequence()) throw SemanticError(bpath, "expected a list of bands");
    for (std::size_t i = 0; i < bands.size(); ++i) {
        const std::string p = indexed(bpath, i);
        const YAML::Node b = bands[i];
        check_keys(b, p, {"strengths", "resonances", "dampings", "rotation"});
        LorentzBand band;
        band.strengths = vec3(required(b, p, "strengths"), join(p, "strengths"));
        band.resonances = vec3(required(b, p, "resonances"), join(p, "resonances"));
        band.dampings = vec3(required(b, p, "dampings"), join(p, "dampings"));
        if (b["rotation"]) band.rotation = parse_rotation(b["rotation"], join(p, "rotation"));
        spec.bands.push_back(band);
    }
    return spec;
}

std::vector<double> parse_temperatures(const YAML::Node& node) {
    const std::string path = "temperatures";
    std::vector<double> out;
    if (node.IsSequence()) {
        out = numbers(node, path);
    } else {
        check_keys(node, path, {"start", "stop", "count", "spacing"});
        const double start = number(required(node, path, "start"), join(path, "start"));
        const double stop = number(required(node, path, "stop"), join(path, "stop"));
        const int count = integer(required(node, path, "count"), join(path, "count"));
        std::string spacing = "linear";
        if (node["spacing"]) spacing = scalar<std::string>(node["spacing"], join(path, "spacing"), "a string");
        if (count < 1) throw SemanticError(join(path, "count"), "must be at least 1");
        if (spacing != "linear" && spacing != "log") {
            throw SemanticError(join(path, "spacing"), "must be linear or log");
        }
        if (!(start > 0.0) || !(stop >= start)) {
            throw SemanticError(path, "range needs 0 < start <= stop");
        }
        for (int i = 0; i < count; ++i) {
            const double f = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
            out.push_back(spacing == "log" ? start * std::pow(stop / start, f)
                                           : start + f * (stop - start));
        }
    }
    if (out.empty()) throw SemanticError(path, "at least one temperature is required");
    for (std::size_t i = 0; i < out.size(); ++i) {
        if (!(out[i] > 0.0)) throw SemanticError(indexed(path, i), "temperature must be positive");
        if (i > 0 && !(out[i] > out[i - 1])) {
            throw SemanticError(indexed(path, i), "temperatures must be strictly ascending");
        }
    }
    return out;
}

QuadratureSpec parse_quadrature(const YAML::Node& node) {
    const std::string path = "quadrature";
    check_keys(node, path, {"rel_tol", "abs_tol", "max_subdivisions", "omega_max_factor"});
    QuadratureSpec q;
    if (node["rel_tol"]) q.rel_tol = number(node["rel_tol"], join(path, "rel_tol"));
    if (node["abs_tol"]) q.abs_tol = number(node["abs_tol"], join(path, "abs_tol"));
    if (node["max_subdivisions"]) {
        q.max_subdivisions = integer(node["max_subdivisions"], join(path, "max_subdivisions"));
    }
    if (node["omega_max_factor"]) {
        q.omega_max_factor = number(node["omega_max_factor"], join(path, "omega_max_factor"));
    }
    try {
        q.validate();
    } catch (const std::exception& e) {
        throw SemanticError(path, e.what());
    }
    return q;
}

OracleSettings parse_oracle(const YAML::Node& node) {
    const std::string path = "oracle";
    check_keys(node, path, {"n_modes", "omega_max"});
    OracleSettings o;
    if (node["n_modes"]) o.n_modes = integer(node["n_modes"], join(path, "n_modes"));
    if (node["omega_max"]) o.omega_max = number(node["omega_max"], join(path, "omega_max"));
    if (o.n_modes < 10) throw SemanticError(join(path, "n_modes"), "must be at least 10");
    if (!(o.omega_max >= 0.0) || !std::isfinite(o.omega_max)) {
        throw SemanticError(join(path, "omega_max"), "must be a finite number >= 0");
    }
    return o;
}

SimConfig parse_simulation(const YAML::Node& node) {
    const std::string path = "simulation";
    check_keys(node, path, {"dt", "n_steps", "n_traj", "T", "seed", "n_bath", "burn_in", "omega_max",
                            "acf_lags", "acf_stride"});
    SimConfig s;
    if (node["dt"]) s.dt = number(node["dt"], join(path, "dt"));
    if (node["n_steps"]) s.n_steps = integer(node["n_steps"], join(path, "n_steps"));
    if (node["n_traj"]) s.n_traj = integer(node["n_traj"], join(path, "n_traj"));
    if (node["T"]) s.T = number(node["T"], join(path, "T"));
    if (node["seed"]) s.seed = scalar<std::uint64_t>(node["seed"], join(path, "seed"), "a 64-bit unsigned integer");
    if (node["n_bath"]) s.n_bath = integer(node["n_bath"], join(path, "n_bath"));
    if (node["burn_in"]) s.burn_in = integer(node["burn_in"], join(path, "burn_in"));
    if (node["omega_max"]) s.omega_max = number(node["omega_max"], join(path, "omega_max"));
    if (node["acf_lags"]) s.acf_lags = integer(node["acf_lags"], join(path, "acf_lags"));
    if (node["acf_stride"]) s.acf_stride = integer(node["acf_stride"], join(path, "acf_stride"));
    try {
        // The dt bound needs the model; it is checked again when the task runs.
        s.validate(0.0);
    } catch (const std::exception& e) {
        throw SemanticError(path, e.what());
    }
    return s;
}

Task parse_task(const YAML::Node& node) {
    const auto name = scalar<std::string>(node, "task", "a task name");
    for (Task t : {Task::validate, Task::thermo_sweep, Task::correlators, Task::oracle_compare,
                   Task::langevin}) {
        if (name == to_string(t)) return t;
    }
    throw SemanticError("task", "unknown task '" + name +
                                    "' (expected validate, thermo-sweep, correlators, "
                                    "oracle-compare or langevin)");
}

RunConfig from_yaml(const YAML::Node& root) {
    check_keys(root, "", {"task", "model", "temperatures", "quadrature", "oracle", "simulation",
                          "correlators", "output"});
    RunConfig cfg;
    cfg.task = parse_task(required(root, "", "task"));
    cfg.model = parse_model(required(root, "", "model"), "model");
    if (root["temperatures"]) cfg.temperatures = parse_temperatures(root["temperatures"]);
    if (root["quadrature"]) cfg.quadrature = parse_quadrature(root["quadrature"]);
    if (root["oracle"]) cfg.oracle = parse_oracle(root["oracle"]);
    if (root["simulation"]) cfg.simulation = parse_simulation(root["simulation"]);
    if (root["correlators"]) {
        const YAML::Node c = root["correlators"];
        check_keys(c, "correlators", {"taus"});
        if (c["taus"]) cfg.correlators.taus = numbers(c["taus"], "correlators.taus");
        if (cfg.correlators.taus.empty()) throw SemanticError("correlators.taus", "must not be empty");
    }
    if (root["output"]) {
        const YAML::Node o = root["output"];
        check_keys(o, "output", {"path", "format"});
        if (o["path"]) cfg.output_path = scalar<std::string>(o["path"], "output.path", "a string");
        if (o["format"]) {
            const auto f = scalar<std::string>(o["format"], "output.format", "a string");
            if (f == "csv") cfg.format = OutputFormat::csv;
            else if (f == "json") cfg.format = OutputFormat::json;
            else if (f == "both") cfg.format = OutputFormat::both;
            else throw SemanticError("output.format", "must be csv, json or both");
        }
    }

    const bool needs_temperatures = cfg.task == Task::thermo_sweep ||
                                    cfg.task == Task::correlators ||
                                    cfg.task == Task::oracle_compare;
    if (needs_temperatures && !root["temperatures"]) {
        throw SemanticError("temperatures", "required for task " + to_string(cfg.task));
    }
    if (cfg.task == Task::langevin && !root["simulation"]) {
        throw SemanticError("simulation", "required for task langevin");
    }
    return cfg;
}

nlohmann::json vec_json(const Vec3& v) { return {v[0], v[1], v[2]}; }

} // namespace

RunConfig parse_config(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::ParserException& e) {
        throw ParseError(e.msg, e.mark.line + 1, e.mark.column + 1);
    }
    if (!root || root.IsNull()) throw SemanticError("<root>", "config is empty");
    return from_yaml(root);
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw SemanticError("--config", "cannot open " + path.string());
    std::ostringstream text;
    text << in.rdbuf();
    return parse_config(text.str());
}

nlohmann::json to_json(const RunConfig& cfg) {
    nlohmann::json bands = nlohmann::json::array();
    for (const auto& b : cfg.model.bands) {
        nlohmann::json rows = nlohmann::json::array();
        for (int i = 0; i < 3; ++i) rows.push_back(vec_json(b.rotation.row(i).transpose()));
        bands.push_back({{"strengths", vec_json(b.strengths)},
                         {"resonances", vec_json(b.resonances)},
                         {"dampings", vec_json(b.dampings)},
                         {"rotation", {{"matrix", rows}}}});
    }
    nlohmann::json j;
    j["task"] = to_string(cfg.task);
    j["model"] = {{"omega0", cfg.model.omega0},
                  {"hbar", cfg.model.units.hbar},
                  {"kB", cfg.model.units.kB},
                  {"bands", bands}};
    if (!cfg.temperatures.empty()) j["temperatures"] = cfg.temperatures;
    j["quadrature"] = {{"rel_tol", cfg.quadrature.rel_tol},
                       {"abs_tol", cfg.quadrature.abs_tol},
                       {"max_subdivisions", cfg.quadrature.max_subdivisions},
                       {"omega_max_factor", cfg.quadrature.omega_max_factor}};
    j["oracle"] = {{"n_modes", cfg.oracle.n_modes}, {"omega_max", cfg.oracle.omega_max}};
    const SimConfig& s = cfg.simulation;
    j["simulation"] = {{"dt", s.dt},           {"n_steps", s.n_steps},   {"n_traj", s.n_traj},
                       {"T", s.T},             {"seed", s.seed},         {"n_bath", s.n_bath},
                       {"burn_in", s.burn_in}, {"omega_max", s.omega_max}, {"acf_lags", s.acf_lags},
                       {"acf_stride", s.acf_stride}};
    j["correlators"] = {{"taus", cfg.correlators.taus}};
    j["output"] = {{"path", cfg.output_path}, {"format", to_string(cfg.format)}};
    return j;
}

} // namespace meanforce::cli
