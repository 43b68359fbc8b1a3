#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aac/adviser.hpp"
#include "aac/envs.hpp"
#include "aac/rl.hpp"

namespace aac {

/// The four adviser strategies of the ablation matrix.
enum class Strategy { None, EvalAdviser, TrainAdviser, TrainEvalAdviser };

std::string_view to_string(Strategy s);
/// Human-readable strategy label ("No adviser", "Train + evaluate adviser", ...).
std::string_view strategy_label(Strategy s);
Strategy strategy_from_string(std::string_view name);
inline constexpr Strategy kAllStrategies[] = {Strategy::None, Strategy::EvalAdviser, Strategy::TrainAdviser,
                                              Strategy::TrainEvalAdviser};

struct RunConfig {
    EnvConfig env;
    Strategy strategy = Strategy::None;
    AdviserGains train_gains{1.3, 0.01, 0.01};
    AdviserGains eval_gains{1.3, 0.1, 0.1};
    double integral_clamp = 0.0;  // 0 selects 10 x goal half-width
    /// Route identity gains through the PID adviser instead of the plain observation path.
    bool force_adviser_path = false;
    rl::SacConfig sac;
    bool her = false;
    int her_k = 4;
    std::uint64_t seed = 0;
    int epochs = 20;
    int episodes_per_epoch = 10;
    int eval_episodes = 20;
    int seeds = 5;
    bool paper_scale = false;

    /// Gains actually used, after the strategy has been applied.
    AdviserGains resolved_train_gains() const;
    AdviserGains resolved_eval_gains() const;
    rl::AdviserSetting train_adviser(double goal_half_width) const;
    rl::AdviserSetting eval_adviser(double goal_half_width) const;

    /// Desk-scale or full-scale defaults for an environment.
    static RunConfig defaults(EnvKind env, bool paper_scale);
};

using ConfigEntries = std::vector<std::pair<std::string, std::string>>;

/// Flattened "section.key" = value pairs, in file order; physics keys only for the active env.
ConfigEntries to_entries(const RunConfig& config);
std::string to_text(const RunConfig& config);
void write_config(const std::filesystem::path& path, const RunConfig& config);

/// Parses "[section]" / "key = value" text into flattened entries.
std::map<std::string, std::string> parse_entries(std::string_view text);

/// Applies one entry; throws InvalidInput naming the key on an unknown key or bad value.
void apply_entry(RunConfig& config, const std::string& key, const std::string& value);

/// "env.point_mass.spring" -> "AAC_ENV_POINT_MASS_SPRING".
std::string environment_variable_name(std::string_view key);

struct ConfigSources {
    std::optional<std::filesystem::path> file;
    std::map<std::string, std::string> overrides;  // from command-line flags
    bool use_environment = true;
};

/// Defaults, then file, then AAC_* environment variables, then flags; validated.
RunConfig resolve_config(const ConfigSources& sources);

void validate(const RunConfig& config);

}  // namespace aac
