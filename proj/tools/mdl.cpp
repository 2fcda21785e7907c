#include <cstdlib>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "harness.hpp"

namespace {

using namespace microdata;
using nlohmann::json;

struct CommonFlags {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;

    void attach(CLI::App* cmd)
    {
        cmd->add_option("--config", config_path, "JSON config file");
        cmd->add_option("--seed", seed, "override the config seed");
        cmd->add_option("--out", out_dir, "override the output directory");
    }

    json load() const
    {
        if (config_path.empty())
            return json::object();
        return harness::load_config_file(config_path);
    }

    /// Precedence: --out flag, then MDL_OUT_DIR, then the config value.
    void apply(std::uint64_t& config_seed, std::string& config_out) const
    {
        if (seed)
            config_seed = *seed;
        if (const char* env = std::getenv("MDL_OUT_DIR"))
            config_out = env;
        if (out_dir)
            config_out = *out_dir;
    }
};

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"micro-data learning experiments: map-guided damage recovery,"
                 " Bayesian optimization, and model-based cart-pole control"};
    app.require_subcommand(1);

    CommonFlags map_flags, adapt_flags, bo_flags, episode_flags, eval_flags;

    auto* map_cmd = app.add_subcommand("map-build", "illuminate the intact gait space");
    map_flags.attach(map_cmd);
    std::optional<std::uint64_t> map_budget;
    map_cmd->add_option("--budget", map_budget, "evaluation budget");

    auto* adapt_cmd = app.add_subcommand("adapt", "map-guided recovery on a damaged gait");
    adapt_flags.attach(adapt_cmd);
    std::optional<std::string> adapt_archive, adapt_damage;
    std::optional<int> adapt_budget;
    adapt_cmd->add_option("--archive", adapt_archive, "prior archive CSV");
    adapt_cmd->add_option("--damage", adapt_damage, "damage condition id (intact, D1..D5)");
    adapt_cmd->add_option("--budget", adapt_budget, "trial budget");

    auto* bo_cmd = app.add_subcommand("bo", "Bayesian optimization on a synthetic objective");
    bo_flags.attach(bo_cmd);
    std::optional<std::string> bo_objective;
    std::optional<int> bo_budget;
    bo_cmd->add_option("--objective", bo_objective, "sphere15 | sphere2 | rastrigin2");
    bo_cmd->add_option("--budget", bo_budget, "evaluation budget");

    auto* episode_cmd = app.add_subcommand("episode", "learn cart-pole balancing from episodes");
    episode_flags.attach(episode_cmd);
    std::optional<int> episode_max;
    episode_cmd->add_option("--episodes", episode_max, "episode budget");

    auto* eval_cmd = app.add_subcommand("eval", "exhaustively evaluate an archive under damage");
    eval_flags.attach(eval_cmd);
    std::optional<std::string> eval_archive, eval_damage;
    eval_cmd->add_option("--archive", eval_archive, "archive CSV");
    eval_cmd->add_option("--damage", eval_damage, "damage condition id");

    CLI11_PARSE(app, argc, argv);

    try {
        if (map_cmd->parsed()) {
            auto config = harness::MapBuildConfig::from_json(map_flags.load());
            map_flags.apply(config.seed, config.out_dir);
            if (map_budget)
                config.budget = *map_budget;
            return harness::cmd_map_build(config);
        }
        if (adapt_cmd->parsed()) {
            auto config = harness::AdaptCmdConfig::from_json(adapt_flags.load());
            adapt_flags.apply(config.seed, config.out_dir);
            if (adapt_archive)
                config.archive = *adapt_archive;
            if (adapt_damage)
                config.damage = *adapt_damage;
            if (adapt_budget)
                config.budget = *adapt_budget;
            return harness::cmd_adapt(config);
        }
        if (bo_cmd->parsed()) {
            auto config = harness::BoCmdConfig::from_json(bo_flags.load());
            bo_flags.apply(config.seed, config.out_dir);
            if (bo_objective)
                config.objective = *bo_objective;
            if (bo_budget)
                config.budget = *bo_budget;
            return harness::cmd_bo(config);
        }
        if (episode_cmd->parsed()) {
            auto config = harness::EpisodeCmdConfig::from_json(episode_flags.load());
            episode_flags.apply(config.seed, config.out_dir);
            if (episode_max)
                config.max_episodes = *episode_max;
            return harness::cmd_episode(config);
        }
        if (eval_cmd->parsed()) {
            auto config = harness::EvalCmdConfig::from_json(eval_flags.load());
            std::uint64_t unused_seed = 0;
            eval_flags.apply(unused_seed, config.out_dir);
            if (eval_archive)
                config.archive = *eval_archive;
            if (eval_damage)
                config.damage = *eval_damage;
            return harness::cmd_eval(config);
        }
    } catch (const harness::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return harness::exit_config;
    } catch (const std::invalid_argument& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return harness::exit_config;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return harness::exit_runtime;
    }
    return harness::exit_config;
}
