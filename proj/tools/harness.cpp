#include "harness.hpp"

#include <chrono>
#include <filesystem>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "microdata/bayes_opt.hpp"
#include "microdata/csv.hpp"
#include "microdata/episode.hpp"
#include "microdata/rng.hpp"

namespace microdata::harness {

namespace {

namespace fs = std::filesystem;
using nlohmann::json;

/// Reads fields with defaults and rejects keys that match nothing.
class JsonReader {
public:
    explicit JsonReader(const json& j) : _j(j)
    {
        if (!j.is_object())
            throw ConfigError("config must be a JSON object");
    }

    template <typename T>
    void read(const char* key, T& out)
    {
        _known.insert(key);
        auto it = _j.find(key);
        if (it == _j.end())
            return;
        try {
            out = it->get<T>();
        } catch (const json::exception&) {
            throw ConfigError(std::string("config key '") + key + "' has the wrong type");
        }
    }

    void finish() const
    {
        for (auto it = _j.begin(); it != _j.end(); ++it)
            if (!_known.count(it.key()))
                throw ConfigError("unknown config key: '" + it.key() + "'");
    }

private:
    const json& _j;
    std::set<std::string> _known;
};

void write_text_file(const fs::path& path, const std::string& text)
{
    std::ofstream file(path, std::ios::binary);
    if (!file)
        throw std::runtime_error("cannot open for writing: " + path.string());
    file << text;
    if (!file)
        throw std::runtime_error("write failed: " + path.string());
}

fs::path prepare_out_dir(const std::string& out_dir)
{
    fs::path dir(out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec)
        throw ConfigError("cannot create output directory: " + dir.string());
    return dir;
}

void require_file(const std::string& path, const char* what)
{
    if (path.empty())
        throw ConfigError(std::string(what) + " path is required");
    if (!fs::exists(path))
        throw ConfigError(std::string(what) + " not found: " + path);
}

/// Run sidecar: config snapshot, seed, and wall clock. Everything that must
/// be byte-reproducible lives in the CSVs instead.
void write_run_record(const fs::path& dir, const char* command, const json& config,
                      std::uint64_t seed, double wall_ms)
{
    json record;
    record["command"] = command;
    record["config"] = config;
    record["seed"] = seed;
    record["wall_ms"] = wall_ms;
    write_text_file(dir / "run.json", record.dump(2) + "\n");
}

class WallClock {
public:
    double ms() const
    {
        return std::chrono::duration<double, std::milli>(
                   std::chrono::steady_clock::now() - _start)
            .count();
    }

private:
    std::chrono::steady_clock::time_point _start = std::chrono::steady_clock::now();
};

} // namespace

json load_config_file(const std::string& path)
{
    std::ifstream file(path);
    if (!file)
        throw ConfigError("cannot open config file: " + path);
    json j = json::parse(file, nullptr, false);
    if (j.is_discarded())
        throw ConfigError("config file is not valid JSON: " + path);
    return j;
}

// ---------------------------------------------------------------------------
// Config round trips
// ---------------------------------------------------------------------------

MapBuildConfig MapBuildConfig::from_json(const json& j)
{
    MapBuildConfig c;
    JsonReader r(j);
    r.read("bins_per_dim", c.bins_per_dim);
    r.read("budget", c.budget);
    r.read("init_random", c.init_random);
    r.read("sigma", c.sigma);
    r.read("batch_size", c.batch_size);
    r.read("threads", c.threads);
    r.read("checkpoint_every", c.checkpoint_every);
    r.read("seed", c.seed);
    r.read("out_dir", c.out_dir);
    r.finish();
    return c;
}

json MapBuildConfig::to_json() const
{
    return json{{"bins_per_dim", bins_per_dim}, {"budget", budget},
                {"init_random", init_random},   {"sigma", sigma},
                {"batch_size", batch_size},     {"threads", threads},
                {"checkpoint_every", checkpoint_every}, {"seed", seed},
                {"out_dir", out_dir}};
}

AdaptCmdConfig AdaptCmdConfig::from_json(const json& j)
{
    AdaptCmdConfig c;
    JsonReader r(j);
    r.read("archive", c.archive);
    r.read("damage", c.damage);
    r.read("budget", c.budget);
    r.read("alpha", c.alpha);
    r.read("kappa", c.kappa);
    r.read("length_scale", c.length_scale);
    r.read("signal_variance", c.signal_variance);
    r.read("noise_variance", c.noise_variance);
    r.read("seed", c.seed);
    r.read("out_dir", c.out_dir);
    r.finish();
    return c;
}

json AdaptCmdConfig::to_json() const
{
    return json{{"archive", archive},
                {"damage", damage},
                {"budget", budget},
                {"alpha", alpha},
                {"kappa", kappa},
                {"length_scale", length_scale},
                {"signal_variance", signal_variance},
                {"noise_variance", noise_variance},
                {"seed", seed},
                {"out_dir", out_dir}};
}

BoCmdConfig BoCmdConfig::from_json(const json& j)
{
    BoCmdConfig c;
    JsonReader r(j);
    r.read("objective", c.objective);
    r.read("budget", c.budget);
    r.read("acquisition", c.acquisition);
    r.read("xi", c.xi);
    r.read("kappa", c.kappa);
    r.read("seed", c.seed);
    r.read("out_dir", c.out_dir);
    r.finish();
    return c;
}

json BoCmdConfig::to_json() const
{
    return json{{"objective", objective}, {"budget", budget}, {"acquisition", acquisition},
                {"xi", xi},               {"kappa", kappa},   {"seed", seed},
                {"out_dir", out_dir}};
}

EpisodeCmdConfig EpisodeCmdConfig::from_json(const json& j)
{
    EpisodeCmdConfig c;
    JsonReader r(j);
    r.read("max_episodes", c.max_episodes);
    r.read("horizon", c.horizon);
    r.read("tick", c.tick);
    r.read("plan_horizon", c.plan_horizon);
    r.read("plan_samples", c.plan_samples);
    r.read("threads", c.threads);
    r.read("seed", c.seed);
    r.read("out_dir", c.out_dir);
    r.finish();
    return c;
}

json EpisodeCmdConfig::to_json() const
{
    return json{{"max_episodes", max_episodes}, {"horizon", horizon},
                {"tick", tick},                 {"plan_horizon", plan_horizon},
                {"plan_samples", plan_samples}, {"threads", threads},
                {"seed", seed},                 {"out_dir", out_dir}};
}

EvalCmdConfig EvalCmdConfig::from_json(const json& j)
{
    EvalCmdConfig c;
    JsonReader r(j);
    r.read("archive", c.archive);
    r.read("damage", c.damage);
    r.read("out_dir", c.out_dir);
    r.finish();
    return c;
}

json EvalCmdConfig::to_json() const
{
    return json{{"archive", archive}, {"damage", damage}, {"out_dir", out_dir}};
}

// ---------------------------------------------------------------------------
// Commands
// ---------------------------------------------------------------------------

ArchiveEval evaluate_archive(const elites::EliteArchive& archive,
                             const testbeds::DamageCondition& damage)
{
    if (archive.cells.empty())
        throw EmptyArchive("evaluate_archive: archive is empty");
    ArchiveEval result;
    result.max_fitness = -std::numeric_limits<double>::infinity();
    for (const auto& [cell, elite] : archive.cells) {
        const double f = testbeds::gait_proxy_eval(elite.params, damage).fitness;
        result.damaged_fitness.emplace_back(cell, f);
        if (f > result.max_fitness) {
            result.max_fitness = f;
            result.best_cell = cell;
        }
    }
    return result;
}

int cmd_map_build(const MapBuildConfig& config)
{
    WallClock clock;
    const fs::path dir = prepare_out_dir(config.out_dir);

    elites::GridSpec grid{testbeds::gait_descriptor_dim, config.bins_per_dim};
    elites::MapElitesConfig me;
    me.init_random = config.init_random;
    me.sigma = config.sigma;
    me.batch_size = config.batch_size;
    me.threads = config.threads;
    me.checkpoint_every = config.checkpoint_every;

    const auto intact = testbeds::intact_condition();
    elites::TaskEvaluator task = [&intact](const Vec& params) {
        const auto eval = testbeds::gait_proxy_eval(params, intact);
        return std::make_pair(eval.fitness, eval.descriptor);
    };

    std::vector<elites::MapElitesStats> checkpoints;
    const auto archive = elites::map_elites_run(task, testbeds::gait_param_dim, grid,
                                                config.budget, me, config.seed, &checkpoints);

    elites::save_archive_csv(archive, (dir / "archive.csv").string());

    std::ostringstream stats;
    stats << "evals,occupied,coverage,qd_score,max_fitness\n";
    for (const auto& s : checkpoints)
        stats << s.evals << ',' << s.occupied << ',' << format_double(s.coverage) << ','
              << format_double(s.qd_score) << ',' << format_double(s.max_fitness) << '\n';
    write_text_file(dir / "stats.csv", stats.str());

    write_run_record(dir, "map-build", config.to_json(), config.seed, clock.ms());
    return exit_ok;
}

int cmd_adapt(const AdaptCmdConfig& config)
{
    WallClock clock;
    require_file(config.archive, "archive");
    const fs::path dir = prepare_out_dir(config.out_dir);

    const auto archive = elites::load_archive_csv(config.archive);
    auto prior = adapt::build_prior(archive);

    adapt::AdaptConfig ac;
    ac.alpha = config.alpha;
    ac.kappa = config.kappa;
    ac.length_scale = config.length_scale;
    ac.signal_variance = config.signal_variance;
    ac.noise_variance = config.noise_variance;

    const auto damage = testbeds::damage_by_id(config.damage);
    const auto trace = adapt::adapt_run(std::move(prior), testbeds::gait_fitness_under(damage),
                                        config.budget, ac, config.seed);

    std::ostringstream out;
    out << "trial,cell,observed,best,stop_metric\n";
    for (const auto& r : trace.records)
        out << r.trial << ',' << r.cell << ',' << format_double(r.observed) << ','
            << format_double(r.best) << ',' << format_double(r.stop_metric) << '\n';
    write_text_file(dir / "trace.csv", out.str());

    write_run_record(dir, "adapt", config.to_json(), config.seed, clock.ms());
    return exit_ok;
}

int cmd_bo(const BoCmdConfig& config)
{
    WallClock clock;
    const fs::path dir = prepare_out_dir(config.out_dir);

    bo::BoConfig bc;
    if (config.acquisition == "ei")
        bc.acquisition = bo::AcquisitionSpec::ei(config.xi);
    else if (config.acquisition == "ucb")
        bc.acquisition = bo::AcquisitionSpec::ucb(config.kappa);
    else if (config.acquisition == "pi")
        bc.acquisition = bo::AcquisitionSpec::pi(config.xi);
    else
        throw ConfigError("unknown acquisition: '" + config.acquisition + "'");

    const int dim = testbeds::synthetic_dim(config.objective);
    const auto objective = testbeds::synthetic_suite(config.objective);
    const auto trace = bo::bo_run(objective, dim, config.budget, bc, config.seed);

    std::ostringstream out;
    out << "iter,observed,best,acq";
    for (int i = 0; i < dim; ++i)
        out << ",p_" << i;
    out << '\n';
    for (const auto& r : trace.records) {
        out << r.iter << ',' << format_double(r.observed) << ',' << format_double(r.best_so_far)
            << ',' << format_double(r.acq_value);
        for (int i = 0; i < dim; ++i)
            out << ',' << format_double(r.params[i]);
        out << '\n';
    }
    write_text_file(dir / "trace.csv", out.str());

    write_run_record(dir, "bo", config.to_json(), config.seed, clock.ms());
    return exit_ok;
}

int cmd_episode(const EpisodeCmdConfig& config)
{
    WallClock clock;
    const fs::path dir = prepare_out_dir(config.out_dir);

    testbeds::CartPoleParams system;
    episode::LoopConfig lc;
    lc.max_episodes = config.max_episodes;
    lc.horizon = config.horizon;
    lc.tick = config.tick;
    lc.plan.horizon = config.plan_horizon;
    lc.plan.samples = config.plan_samples;
    lc.plan.threads = config.threads;
    lc.plan.action_min = system.force_min;
    lc.plan.action_max = system.force_max;

    const auto result = episode::episode_loop(system, lc,
                                              episode::balance_criterion(system, config.horizon),
                                              config.seed);

    std::ostringstream summary;
    summary << "episode,steps,total_reward,success\n";
    for (std::size_t ep = 0; ep < result.logs.size(); ++ep) {
        const auto& log = result.logs[ep];
        const bool ok = episode::balance_criterion(system, config.horizon)(log);
        summary << ep << ',' << log.steps.size() << ',' << format_double(log.total_reward())
                << ',' << (ok ? 1 : 0) << '\n';

        std::ostringstream ticks;
        ticks << "t,x,xdot,theta,thetadot,action,reward\n";
        for (std::size_t t = 0; t < log.steps.size(); ++t) {
            const auto& s = log.steps[t];
            ticks << t << ',' << format_double(s.state[0]) << ',' << format_double(s.state[1])
                  << ',' << format_double(s.state[2]) << ',' << format_double(s.state[3]) << ','
                  << format_double(s.action) << ',' << format_double(s.reward) << '\n';
        }
        std::ostringstream name;
        name << "episode_" << ep << ".csv";
        write_text_file(dir / name.str(), ticks.str());
    }
    write_text_file(dir / "episodes.csv", summary.str());

    write_run_record(dir, "episode", config.to_json(), config.seed, clock.ms());
    return exit_ok;
}

int cmd_eval(const EvalCmdConfig& config)
{
    WallClock clock;
    require_file(config.archive, "archive");
    const fs::path dir = prepare_out_dir(config.out_dir);

    const auto archive = elites::load_archive_csv(config.archive);
    const auto damage = testbeds::damage_by_id(config.damage);
    const auto eval = evaluate_archive(archive, damage);

    std::ostringstream out;
    out << "cell,prior_fitness,damaged_fitness\n";
    auto it = archive.cells.begin();
    for (const auto& [cell, fitness] : eval.damaged_fitness) {
        out << cell << ',' << format_double(it->second.fitness) << ',' << format_double(fitness)
            << '\n';
        ++it;
    }
    write_text_file(dir / "eval.csv", out.str());

    std::ostringstream summary;
    summary << "damage,cells,max_fitness,best_cell\n";
    summary << config.damage << ',' << eval.damaged_fitness.size() << ','
            << format_double(eval.max_fitness) << ',' << eval.best_cell << '\n';
    write_text_file(dir / "eval_summary.csv", summary.str());

    write_run_record(dir, "eval", config.to_json(), 0, clock.ms());
    return exit_ok;
}

} // namespace microdata::harness
