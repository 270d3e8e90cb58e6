#include "msfem/driver/config.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include "json.hpp"

namespace msfem::driver {

using nlohmann::json;

std::string to_string(Preset p)
{
    switch (p) {
    case Preset::convergence2: return "convergence2";
    case Preset::experiment1: return "experiment1";
    case Preset::experiment2: return "experiment2";
    case Preset::custom: return "custom";
    }
    return "custom";
}

std::string to_string(scheme::InitialData d)
{
    switch (d) {
    case scheme::InitialData::convergence2: return "convergence2";
    case scheme::InitialData::experiment1: return "experiment1";
    case scheme::InitialData::experiment2: return "experiment2";
    case scheme::InitialData::uniform: return "uniform";
    }
    return "uniform";
}

namespace {

Preset preset_from(const std::string& s)
{
    if (s == "convergence2") return Preset::convergence2;
    if (s == "experiment1") return Preset::experiment1;
    if (s == "experiment2") return Preset::experiment2;
    if (s == "custom") return Preset::custom;
    throw ConfigError("preset", "unknown preset '" + s + "'");
}

scheme::InitialData initial_from(const std::string& s)
{
    if (s == "convergence2") return scheme::InitialData::convergence2;
    if (s == "experiment1") return scheme::InitialData::experiment1;
    if (s == "experiment2") return scheme::InitialData::experiment2;
    if (s == "uniform") return scheme::InitialData::uniform;
    throw ConfigError("initial_data", "unknown initial data '" + s + "'");
}

double get_number(const json& j, const std::string& key)
{
    if (!j.is_number()) {
        throw ConfigError(key, "expected a number");
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
        throw ConfigError(key, "must be finite");
    }
    return v;
}

int get_int(const json& j, const std::string& key)
{
    if (!j.is_number_integer()) {
        throw ConfigError(key, "expected an integer");
    }
    return j.get<int>();
}

std::vector<double> get_numbers(const json& j, const std::string& key)
{
    if (!j.is_array()) {
        throw ConfigError(key, "expected an array of numbers");
    }
    std::vector<double> v;
    for (const auto& e : j) {
        v.push_back(get_number(e, key));
    }
    return v;
}

std::string get_string(const json& j, const std::string& key)
{
    if (!j.is_string()) {
        throw ConfigError(key, "expected a string");
    }
    return j.get<std::string>();
}

bool is_named(Preset p) { return p != Preset::custom; }

scheme::InitialData preset_initial(Preset p)
{
    switch (p) {
    case Preset::convergence2: return scheme::InitialData::convergence2;
    case Preset::experiment1: return scheme::InitialData::experiment1;
    case Preset::experiment2: return scheme::InitialData::experiment2;
    case Preset::custom: break;
    }
    return scheme::InitialData::uniform;
}

}  // namespace

std::vector<double> convergence_volumes(char variant)
{
    if (variant == 'A' || variant == 'a') {
        return {0.3, 0.7};
    }
    if (variant == 'B' || variant == 'b') {
        return {0.5, 0.5};
    }
    throw ConfigError("variant", std::string("unknown convergence variant '") + variant + "'");
}

ExperimentConfig preset_defaults(Preset p)
{
    ExperimentConfig c;
    c.preset = p;
    c.initial.kind = preset_initial(p);
    switch (p) {
    case Preset::convergence2:
        c.level = 3;
        c.params = {2, convergence_volumes('A'), 1e-3, 0.0, 1.0};
        c.solver.tau = 1e-3;
        c.solver.t_final = 0.1;
        c.output_dir = "out/convergence2";
        break;
    case Preset::experiment1:
        c.level = 4;
        c.params = {3, {0.35, 0.35, 0.8}, 1e-2, 0.0, 1.0};
        c.solver.tau = 1e-3;
        c.solver.t_final = 0.05;
        c.snapshot_times = {0.001, 0.02, 0.04};
        c.output_dir = "out/experiment1";
        break;
    case Preset::experiment2:
        c.level = 4;
        c.params = {3, {0.35, 0.65, 0.5}, 1e-1, 0.0, 0.1};
        c.solver.tau = 1e-3;
        c.solver.t_final = 0.05;
        c.snapshot_times = {0.001, 0.02, 0.04};
        c.output_dir = "out/experiment2";
        break;
    case Preset::custom:
        c.level = 2;
        c.params = {2, {0.5, 0.5}, 1e-2, 0.0, 1.0};
        c.initial.uniform_rho = {1.0};
        c.solver.tau = 1e-3;
        c.solver.t_final = 1e-2;
        c.output_dir = "out/custom";
        break;
    }
    return c;
}

void validate(const ExperimentConfig& c)
{
    if (c.level < 1 || c.level > 12) {
        throw ConfigError("level", "must lie in [1, 12]");
    }
    try {
        c.params.validate();
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        std::string key = "V";
        for (const char* k : {"n_components", "nu", "lambda", "mobility_scale"}) {
            if (msg.rfind(k, 0) == 0) {
                key = k;
            }
        }
        throw ConfigError(key, msg);
    }
    try {
        c.solver.validate();
    } catch (const std::invalid_argument& e) {
        const std::string msg = e.what();
        std::string key = "tau";
        for (const char* k : {"t_final", "newton_tol", "newton_max_iter", "damping", "max_halvings"}) {
            if (msg.rfind(k, 0) == 0) {
                key = k;
            }
        }
        throw ConfigError(key, msg);
    }
    for (double t : c.snapshot_times) {
        if (t < 0.0 || t > c.solver.t_final * (1.0 + 1e-12)) {
            throw ConfigError("snapshot_times", "times must lie in [0, t_final]");
        }
    }
    if (c.initial.kind == scheme::InitialData::uniform) {
        if (c.initial.uniform_rho.size() != static_cast<std::size_t>(c.params.n_components - 1)) {
            throw ConfigError("uniform_rho", "needs n_components - 1 entries");
        }
    }
    const int need = c.initial.kind == scheme::InitialData::convergence2 ? 2
                     : c.initial.kind == scheme::InitialData::uniform ? c.params.n_components
                                                                       : 3;
    if (c.params.n_components != need) {
        throw ConfigError("initial_data", "initial data '" + to_string(c.initial.kind) + "' needs " +
                                              std::to_string(need) + " components");
    }
}

void clip_snapshot_times(ExperimentConfig& c)
{
    std::erase_if(c.snapshot_times, [&](double t) { return t > c.solver.t_final; });
}

ExperimentConfig parse_config(const std::string& json_text)
{
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw ConfigError("<document>", std::string("malformed JSON: ") + e.what());
    }
    if (!j.is_object()) {
        throw ConfigError("<document>", "top level must be an object");
    }
    const Preset preset = j.contains("preset") ? preset_from(get_string(j["preset"], "preset")) : Preset::custom;
    ExperimentConfig c = preset_defaults(preset);
    const ExperimentConfig defaults = c;

    if (j.contains("variant")) {
        if (preset != Preset::convergence2) {
            throw ConfigError("variant", "only valid for the convergence2 preset");
        }
        const std::string v = get_string(j["variant"], "variant");
        if (v.size() != 1) {
            throw ConfigError("variant", "expected 'A' or 'B'");
        }
        c.params.V = convergence_volumes(v[0]);
    }

    for (const auto& [key, value] : j.items()) {
        if (key == "preset" || key == "variant") {
            continue;
        }
        if (key == "level") {
            c.level = get_int(value, key);
        } else if (key == "tau") {
            c.solver.tau = get_number(value, key);
        } else if (key == "t_final") {
            c.solver.t_final = get_number(value, key);
        } else if (key == "n_components") {
            const int n = get_int(value, key);
            if (is_named(preset) && n != defaults.params.n_components) {
                throw ConfigError(key, "preset " + to_string(preset) + " requires " +
                                           std::to_string(defaults.params.n_components) + " components");
            }
            c.params.n_components = n;
        } else if (key == "V") {
            const auto v = get_numbers(value, key);
            const bool forced = preset == Preset::experiment1 || preset == Preset::experiment2 ||
                                (preset == Preset::convergence2 && j.contains("variant"));
            if (forced && v != c.params.V) {
                throw ConfigError(key, "conflicts with the volumes implied by preset " + to_string(preset));
            }
            c.params.V = v;
        } else if (key == "nu") {
            c.params.nu = get_number(value, key);
        } else if (key == "lambda") {
            c.params.lambda = get_number(value, key);
        } else if (key == "mobility_scale") {
            c.params.mobility_scale = get_number(value, key);
        } else if (key == "newton_tol") {
            c.solver.newton_tol = get_number(value, key);
        } else if (key == "newton_max_iter") {
            c.solver.newton_max_iter = get_int(value, key);
        } else if (key == "damping") {
            c.solver.damping = get_number(value, key);
        } else if (key == "max_halvings") {
            c.solver.max_halvings = get_int(value, key);
        } else if (key == "initial_data") {
            const auto kind = initial_from(get_string(value, key));
            if (is_named(preset) && kind != preset_initial(preset)) {
                throw ConfigError(key, "preset " + to_string(preset) + " fixes its initial data");
            }
            c.initial.kind = kind;
        } else if (key == "uniform_rho") {
            c.initial.uniform_rho = get_numbers(value, key);
        } else if (key == "uniform_u") {
            const auto v = get_numbers(value, key);
            if (v.size() != 2) {
                throw ConfigError(key, "expected two velocity components");
            }
            c.initial.uniform_u = {v[0], v[1]};
        } else if (key == "snapshot_times") {
            c.snapshot_times = get_numbers(value, key);
        } else if (key == "output_dir") {
            c.output_dir = get_string(value, key);
        } else if (key == "vtu") {
            if (!value.is_boolean()) {
                throw ConfigError(key, "expected true or false");
            }
            c.write_vtu = value.get<bool>();
        } else {
            throw ConfigError(key, "unknown key");
        }
    }
    if (c.initial.kind != scheme::InitialData::uniform && j.contains("uniform_rho")) {
        throw ConfigError("uniform_rho", "only used with uniform initial data");
    }
    if (!j.contains("snapshot_times")) {
        clip_snapshot_times(c);
    }
    validate(c);
    return c;
}

ExperimentConfig load_config(const std::filesystem::path& path)
{
    std::ifstream in(path);
    if (!in) {
        throw ConfigError("<file>", "cannot read " + path.string());
    }
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_config(ss.str());
}

std::string serialize_config(const ExperimentConfig& c)
{
    json j;
    j["preset"] = to_string(c.preset);
    j["level"] = c.level;
    j["tau"] = c.solver.tau;
    j["t_final"] = c.solver.t_final;
    j["n_components"] = c.params.n_components;
    j["V"] = c.params.V;
    j["nu"] = c.params.nu;
    j["lambda"] = c.params.lambda;
    j["mobility_scale"] = c.params.mobility_scale;
    j["newton_tol"] = c.solver.newton_tol;
    j["newton_max_iter"] = c.solver.newton_max_iter;
    j["damping"] = c.solver.damping;
    j["max_halvings"] = c.solver.max_halvings;
    j["initial_data"] = to_string(c.initial.kind);
    if (c.initial.kind == scheme::InitialData::uniform) {
        j["uniform_rho"] = c.initial.uniform_rho;
        j["uniform_u"] = c.initial.uniform_u;
    }
    j["snapshot_times"] = c.snapshot_times;
    j["output_dir"] = c.output_dir.string();
    j["vtu"] = c.write_vtu;
    return j.dump(2) + "\n";
}

}  // namespace msfem::driver
