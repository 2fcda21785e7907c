#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <nlohmann/json.hpp>

#include "microdata/adaptation.hpp"
#include "microdata/map_elites.hpp"
#include "microdata/testbeds.hpp"

namespace microdata::harness {

inline constexpr int exit_ok = 0;
inline constexpr int exit_runtime = 1;
inline constexpr int exit_config = 2;

/// Configuration or I/O problem: maps to exit code 2.
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Builds the intact gait-proxy archive offline.
struct MapBuildConfig {
    int bins_per_dim = 5;                  // descriptor grid resolution
    std::uint64_t budget = 200000;         // total evaluations
    int init_random = 1000;                // uniform random candidates first
    double sigma = 0.05;                   // mutation scale
    int batch_size = 64;                   // candidates per merge batch
    int threads = 1;                       // evaluation threads
    std::uint64_t checkpoint_every = 10000; // stats row cadence; 0 = final only
    std::uint64_t seed = 1;
    std::string out_dir = "out";

    static MapBuildConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// Online damage recovery guided by an archive file.
struct AdaptCmdConfig {
    std::string archive;          // path to the prior archive CSV (required)
    std::string damage = "D1";    // intact or D1..D5
    int budget = 12;              // the "dozen trials"
    double alpha = 0.9;           // stop-rule fraction
    double kappa = 2.0;           // UCB exploration weight
    double length_scale = 0.4;
    double signal_variance = 0.04;
    double noise_variance = 1e-6;
    std::uint64_t seed = 1;
    std::string out_dir = "out";

    static AdaptCmdConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// Plain Bayesian optimization on a synthetic objective.
struct BoCmdConfig {
    std::string objective = "sphere15"; // sphere15 | sphere2 | rastrigin2
    int budget = 60;
    std::string acquisition = "ei";     // ei | ucb | pi
    double xi = 0.01;
    double kappa = 2.0;
    std::uint64_t seed = 1;
    std::string out_dir = "out";

    static BoCmdConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// Cart-pole learning loop with per-tick transition harvesting.
struct EpisodeCmdConfig {
    int max_episodes = 10;
    int horizon = 500;         // ticks per episode and balancing span
    double tick = 0.01;        // 10 ms
    int plan_horizon = 25;
    int plan_samples = 200;
    int threads = 1;           // rollout threads inside the planner
    std::uint64_t seed = 1;
    std::string out_dir = "out";

    static EpisodeCmdConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

/// Exhaustive oracle evaluation of an archive under a damage condition.
struct EvalCmdConfig {
    std::string archive;       // path to the archive CSV (required)
    std::string damage = "D1";
    std::string out_dir = "out";

    static EvalCmdConfig from_json(const nlohmann::json& j);
    nlohmann::json to_json() const;
};

nlohmann::json load_config_file(const std::string& path);

/// Exhaustive evaluation of every archive elite under a damage condition.
struct ArchiveEval {
    std::vector<std::pair<elites::CellIndex, double>> damaged_fitness; // cell order
    double max_fitness = 0.0;
    elites::CellIndex best_cell = 0;
};

ArchiveEval evaluate_archive(const elites::EliteArchive& archive,
                             const testbeds::DamageCondition& damage);

int cmd_map_build(const MapBuildConfig& config);
int cmd_adapt(const AdaptCmdConfig& config);
int cmd_bo(const BoCmdConfig& config);
int cmd_episode(const EpisodeCmdConfig& config);
int cmd_eval(const EvalCmdConfig& config);

} // namespace microdata::harness
