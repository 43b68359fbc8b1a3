#include "aac/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <sstream>

#include "aac/csv.hpp"

namespace aac {

std::string_view to_string(Strategy s) {
    switch (s) {
    case Strategy::None: return "none";
    case Strategy::EvalAdviser: return "eval_adviser";
    case Strategy::TrainAdviser: return "train_adviser";
    case Strategy::TrainEvalAdviser: return "train_eval_adviser";
    }
    return "unknown";
}

std::string_view strategy_label(Strategy s) {
    switch (s) {
    case Strategy::None: return "No adviser";
    case Strategy::EvalAdviser: return "Evaluate adviser";
    case Strategy::TrainAdviser: return "Train adviser";
    case Strategy::TrainEvalAdviser: return "Train + evaluate adviser";
    }
    return "unknown";
}

Strategy strategy_from_string(std::string_view name) {
    for (auto s : kAllStrategies)
        if (to_string(s) == name) return s;
    throw InvalidInput("unknown strategy '" + std::string(name) + "'");
}

AdviserGains RunConfig::resolved_train_gains() const {
    const bool advised = strategy == Strategy::TrainAdviser || strategy == Strategy::TrainEvalAdviser;
    return advised ? train_gains : AdviserGains::identity();
}

AdviserGains RunConfig::resolved_eval_gains() const {
    const bool advised = strategy == Strategy::EvalAdviser || strategy == Strategy::TrainEvalAdviser;
    return advised ? eval_gains : AdviserGains::identity();
}

namespace {

rl::AdviserSetting setting_for(const AdviserGains& gains, bool force, double clamp) {
    rl::AdviserSetting s;
    s.integral_clamp = clamp;
    if (!gains.is_identity() || force) s.gains = gains;
    return s;
}

}  // namespace

rl::AdviserSetting RunConfig::train_adviser(double goal_half_width) const {
    return setting_for(resolved_train_gains(), force_adviser_path,
                       integral_clamp > 0.0 ? integral_clamp : 10.0 * goal_half_width);
}

rl::AdviserSetting RunConfig::eval_adviser(double goal_half_width) const {
    return setting_for(resolved_eval_gains(), force_adviser_path,
                       integral_clamp > 0.0 ? integral_clamp : 10.0 * goal_half_width);
}

RunConfig RunConfig::defaults(EnvKind env, bool paper_scale) {
    RunConfig c;
    c.env = EnvConfig::defaults(env);
    c.paper_scale = paper_scale;
    if (paper_scale) {
        c.epochs = 51;
        c.env.max_steps = 1000;
        c.episodes_per_epoch = 50;
        c.sac.hidden_width = 128;
    } else {
        c.epochs = 20;
        c.env.max_steps = 200;
        c.episodes_per_epoch = 10;
        c.sac.hidden_width = 64;
    }
    return c;
}

// ---------------------------------------------------------------- field table

namespace {

std::string fmt(double v) { return csv::format_double(v); }
std::string fmt(long long v) { return std::to_string(v); }
std::string fmt(bool v) { return v ? "true" : "false"; }

double parse_double(const std::string& key, const std::string& value) {
    double v = 0.0;
    const auto* end = value.data() + value.size();
    const auto res = std::from_chars(value.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end) throw InvalidInput("config key '" + key + "': not a number: " + value);
    return v;
}

long long parse_int(const std::string& key, const std::string& value) {
    long long v = 0;
    const auto* end = value.data() + value.size();
    const auto res = std::from_chars(value.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end)
        throw InvalidInput("config key '" + key + "': not an integer: " + value);
    return v;
}

std::uint64_t parse_uint(const std::string& key, const std::string& value) {
    std::uint64_t v = 0;
    const auto* end = value.data() + value.size();
    const auto res = std::from_chars(value.data(), end, v);
    if (res.ec != std::errc() || res.ptr != end)
        throw InvalidInput("config key '" + key + "': not an unsigned integer: " + value);
    return v;
}

bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1" || value == "yes") return true;
    if (value == "false" || value == "0" || value == "no") return false;
    throw InvalidInput("config key '" + key + "': not a boolean: " + value);
}

struct Field {
    std::string key;
    std::optional<EnvKind> only_for;  // physics keys belong to one environment
    std::function<std::string(const RunConfig&)> get;
    std::function<void(RunConfig&, const std::string& key, const std::string&)> set;
};

#define AAC_DOUBLE(KEY, MEMBER, ENV)                                                              \
    Field {                                                                                       \
        KEY, ENV, [](const RunConfig& c) { return fmt(static_cast<double>(c.MEMBER)); },          \
            [](RunConfig& c, const std::string& k, const std::string& v) { c.MEMBER = parse_double(k, v); } \
    }
#define AAC_INT(KEY, MEMBER)                                                                      \
    Field {                                                                                       \
        KEY, std::nullopt, [](const RunConfig& c) { return fmt(static_cast<long long>(c.MEMBER)); }, \
            [](RunConfig& c, const std::string& k, const std::string& v) {                       \
                c.MEMBER = static_cast<decltype(c.MEMBER)>(parse_int(k, v));                      \
            }                                                                                     \
    }
#define AAC_BOOL(KEY, MEMBER)                                                                     \
    Field {                                                                                       \
        KEY, std::nullopt, [](const RunConfig& c) { return fmt(c.MEMBER); },                      \
            [](RunConfig& c, const std::string& k, const std::string& v) { c.MEMBER = parse_bool(k, v); } \
    }

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        constexpr auto any = std::nullopt;
        constexpr auto pm = EnvKind::PointMass;
        constexpr auto arm = EnvKind::PlanarArm;
        constexpr auto quad = EnvKind::QuadVel;
        constexpr auto line = EnvKind::Line1d;
        return std::vector<Field>{
            Field{"run.strategy", any, [](const RunConfig& c) { return std::string(to_string(c.strategy)); },
                  [](RunConfig& c, const std::string&, const std::string& v) { c.strategy = strategy_from_string(v); }},
            Field{"run.seed", any, [](const RunConfig& c) { return std::to_string(c.seed); },
                  [](RunConfig& c, const std::string& k, const std::string& v) { c.seed = parse_uint(k, v); }},
            AAC_INT("run.epochs", epochs),
            AAC_INT("run.episodes_per_epoch", episodes_per_epoch),
            AAC_INT("run.eval_episodes", eval_episodes),
            AAC_INT("run.seeds", seeds),
            AAC_BOOL("run.her", her),
            AAC_INT("run.her_k", her_k),
            AAC_BOOL("run.paper_scale", paper_scale),
            AAC_BOOL("run.force_adviser_path", force_adviser_path),

            Field{"env.name", any, [](const RunConfig& c) { return std::string(to_string(c.env.name)); },
                  [](RunConfig& c, const std::string&, const std::string& v) { c.env.name = env_kind_from_string(v); }},
            AAC_DOUBLE("env.dt", env.dt, any),
            AAC_INT("env.max_steps", env.max_steps),
            AAC_DOUBLE("env.point_mass.mass", env.point_mass.mass, pm),
            AAC_DOUBLE("env.point_mass.spring", env.point_mass.spring, pm),
            AAC_DOUBLE("env.point_mass.damping", env.point_mass.damping, pm),
            AAC_DOUBLE("env.point_mass.force_scale", env.point_mass.force_scale, pm),
            AAC_DOUBLE("env.planar_arm.pedestal", env.planar_arm.pedestal, arm),
            AAC_DOUBLE("env.planar_arm.upper_arm", env.planar_arm.upper_arm, arm),
            AAC_DOUBLE("env.planar_arm.forearm", env.planar_arm.forearm, arm),
            AAC_DOUBLE("env.planar_arm.base_x", env.planar_arm.base_x, arm),
            AAC_DOUBLE("env.planar_arm.base_y", env.planar_arm.base_y, arm),
            AAC_DOUBLE("env.planar_arm.joint_inertia", env.planar_arm.joint_inertia, arm),
            AAC_DOUBLE("env.planar_arm.joint_damping", env.planar_arm.joint_damping, arm),
            AAC_DOUBLE("env.planar_arm.torque_scale", env.planar_arm.torque_scale, arm),
            AAC_DOUBLE("env.planar_arm.max_joint_velocity", env.planar_arm.max_joint_velocity, arm),
            AAC_DOUBLE("env.quad_vel.gravity", env.quad_vel.gravity, quad),
            AAC_DOUBLE("env.quad_vel.attitude_tau", env.quad_vel.attitude_tau, quad),
            AAC_DOUBLE("env.quad_vel.vertical_tau", env.quad_vel.vertical_tau, quad),
            AAC_DOUBLE("env.quad_vel.max_velocity", env.quad_vel.max_velocity, quad),
            AAC_DOUBLE("env.quad_vel.max_tilt", env.quad_vel.max_tilt, quad),
            AAC_DOUBLE("env.line1d.force_scale", env.line1d.force_scale, line),
            AAC_DOUBLE("env.line1d.damping", env.line1d.damping, line),
            AAC_DOUBLE("env.line1d.action_bias", env.line1d.action_bias, line),
            AAC_DOUBLE("env.line1d.position_bound", env.line1d.position_bound, line),

            // The echo records the gains a run actually uses, so strategy none shows identity gains.
            Field{"adviser.train_kp", any, [](const RunConfig& c) { return fmt(c.resolved_train_gains().kp); },
                  [](RunConfig& c, const std::string& k, const std::string& v) { c.train_gains.kp = parse_double(k, v); }},
            Field{"adviser.train_ki", any, [](const RunConfig& c) { return fmt(c.resolved_train_gains().ki); },
                  [](RunConfig& c, const std::string& k, const std::string& v) { c.train_gains.ki = parse_double(k, v); }},
            Field{"adviser.train_kd", any, [](const RunConfig& c) { return fmt(c.resolved_train_gains().kd); },
                  [](RunConfig& c, const std::string& k, const std::string& v) { c.train_gains.kd = parse_double(k, v); }},
            Field{"adviser.eval_kp", any, [](const RunConfig& c) { return fmt(c.resolved_eval_gains().kp); },
                  [](RunConfig& c, const std::string& k, const std::string& v) { c.eval_gains.kp = parse_double(k, v); }},
            Field{"adviser.eval_ki", any, [](const RunConfig& c) { return fmt(c.resolved_eval_gains().ki); },
                  [](RunConfig& c, const std::string& k, const std::string& v) { c.eval_gains.ki = parse_double(k, v); }},
            Field{"adviser.eval_kd", any, [](const RunConfig& c) { return fmt(c.resolved_eval_gains().kd); },
                  [](RunConfig& c, const std::string& k, const std::string& v) { c.eval_gains.kd = parse_double(k, v); }},
            AAC_DOUBLE("adviser.integral_clamp", integral_clamp, any),

            AAC_INT("sac.hidden_width", sac.hidden_width),
            AAC_INT("sac.hidden_layers", sac.hidden_layers),
            Field{"sac.activation", any, [](const RunConfig& c) { return std::string(nn::to_string(c.sac.activation)); },
                  [](RunConfig& c, const std::string&, const std::string& v) {
                      c.sac.activation = nn::activation_from_string(v);
                  }},
            AAC_DOUBLE("sac.gamma", sac.gamma, any),
            AAC_DOUBLE("sac.tau", sac.tau, any),
            AAC_DOUBLE("sac.lr_critic", sac.lr_critic, any),
            AAC_DOUBLE("sac.lr_actor", sac.lr_actor, any),
            AAC_DOUBLE("sac.lr_alpha", sac.lr_alpha, any),
            AAC_DOUBLE("sac.init_alpha", sac.init_alpha, any),
            AAC_INT("sac.batch_size", sac.batch_size),
            AAC_INT("sac.buffer_capacity", sac.buffer_capacity),
            AAC_INT("sac.min_buffer", sac.min_buffer),
            AAC_BOOL("sac.learn_alpha", sac.learn_alpha),
        };
    }();
    return table;
}

#undef AAC_DOUBLE
#undef AAC_INT
#undef AAC_BOOL

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

}  // namespace

ConfigEntries to_entries(const RunConfig& config) {
    ConfigEntries out;
    for (const auto& f : fields()) {
        if (f.only_for && *f.only_for != config.env.name) continue;
        out.emplace_back(f.key, f.get(config));
    }
    return out;
}

std::string to_text(const RunConfig& config) {
    std::ostringstream os;
    os << "# aac resolved configuration v1\n";
    std::string section;
    for (const auto& [key, value] : to_entries(config)) {
        const auto dot = key.find('.');
        const auto sec = key.substr(0, dot);
        if (sec != section) {
            os << (section.empty() ? "" : "\n") << '[' << sec << "]\n";
            section = sec;
        }
        os << key.substr(dot + 1) << " = " << value << '\n';
    }
    return os.str();
}

void write_config(const std::filesystem::path& path, const RunConfig& config) {
    std::ofstream os(path);
    if (!os) throw InvalidInput("cannot write configuration to " + path.string());
    os << to_text(config);
}

std::map<std::string, std::string> parse_entries(std::string_view text) {
    std::map<std::string, std::string> out;
    std::string section;
    std::istringstream in{std::string(text)};
    std::string raw;
    int line_no = 0;
    while (std::getline(in, raw)) {
        ++line_no;
        const auto hash = raw.find('#');
        const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') throw InvalidInput("config line " + std::to_string(line_no) + ": bad section header");
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw InvalidInput("config line " + std::to_string(line_no) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        out[section.empty() ? key : section + "." + key] = value;
    }
    return out;
}

void apply_entry(RunConfig& config, const std::string& key, const std::string& value) {
    for (const auto& f : fields()) {
        if (f.key != key) continue;
        try {
            f.set(config, key, value);
        } catch (const InvalidInput& e) {
            const std::string what = e.what();
            if (what.find(key) != std::string::npos) throw;
            throw InvalidInput("config key '" + key + "': " + what);
        }
        return;
    }
    throw InvalidInput("unknown config key '" + key + "'");
}

std::string environment_variable_name(std::string_view key) {
    std::string name = "AAC_";
    for (char ch : key) name += ch == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    return name;
}

void validate(const RunConfig& c) {
    auto check = [](bool ok, const char* key, const char* what) {
        if (!ok) throw InvalidInput(std::string("config key '") + key + "': " + what);
    };
    check(c.env.dt > 0.0, "env.dt", "must be positive");
    check(c.env.max_steps >= 1, "env.max_steps", "must be at least 1");
    check(c.epochs >= 0, "run.epochs", "must be non-negative");
    check(c.episodes_per_epoch >= 1, "run.episodes_per_epoch", "must be at least 1");
    check(c.eval_episodes >= 0, "run.eval_episodes", "must be non-negative");
    check(c.seeds >= 1, "run.seeds", "must be at least 1");
    check(c.her_k >= 0, "run.her_k", "must be non-negative");
    for (const auto& [prefix, g] : {std::pair{"adviser.train", c.train_gains}, std::pair{"adviser.eval", c.eval_gains}}) {
        const bool ok = std::isfinite(g.kp) && std::isfinite(g.ki) && std::isfinite(g.kd) && g.kp >= 0.0 &&
                        g.ki >= 0.0 && g.kd >= 0.0;
        if (!ok) throw InvalidInput(std::string("config key '") + prefix + "_kp/ki/kd': gains must be finite and >= 0");
    }
    check(c.integral_clamp >= 0.0, "adviser.integral_clamp", "must be non-negative (0 = automatic)");
    check(c.sac.hidden_width >= 1, "sac.hidden_width", "must be positive");
    check(c.sac.hidden_layers >= 0, "sac.hidden_layers", "must be non-negative");
    check(c.sac.gamma >= 0.0 && c.sac.gamma <= 1.0, "sac.gamma", "must lie in [0, 1]");
    check(c.sac.tau > 0.0 && c.sac.tau <= 1.0, "sac.tau", "must lie in (0, 1]");
    check(c.sac.init_alpha > 0.0, "sac.init_alpha", "must be positive");
    check(c.sac.batch_size >= 1, "sac.batch_size", "must be positive");
    check(c.sac.buffer_capacity >= 1, "sac.buffer_capacity", "must be positive");
}

RunConfig resolve_config(const ConfigSources& sources) {
    std::map<std::string, std::string> file_entries;
    if (sources.file) file_entries = parse_entries(csv::read_file(*sources.file));

    std::map<std::string, std::string> env_entries;
    if (sources.use_environment) {
        for (const auto& f : fields()) {
            if (const char* v = std::getenv(environment_variable_name(f.key).c_str())) env_entries[f.key] = v;
        }
    }

    // Later sources win.
    auto lookup = [&](const std::string& key) -> std::optional<std::string> {
        if (auto it = sources.overrides.find(key); it != sources.overrides.end()) return it->second;
        if (auto it = env_entries.find(key); it != env_entries.end()) return it->second;
        if (auto it = file_entries.find(key); it != file_entries.end()) return it->second;
        return std::nullopt;
    };

    RunConfig probe;
    if (auto v = lookup("env.name")) apply_entry(probe, "env.name", *v);
    if (auto v = lookup("run.paper_scale")) apply_entry(probe, "run.paper_scale", *v);

    RunConfig config = RunConfig::defaults(probe.env.name, probe.paper_scale);
    using Layer = const std::map<std::string, std::string>*;
    for (Layer layer : {Layer{&file_entries}, Layer{&env_entries}, Layer{&sources.overrides}})
        for (const auto& [key, value] : *layer) apply_entry(config, key, value);
    validate(config);
    if (config.integral_clamp == 0.0) config.integral_clamp = 10.0 * make_env(config.env)->goal_half_width();
    return config;
}

}  // namespace aac
