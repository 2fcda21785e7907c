// End-to-end checks of the mdl binary: exit codes, file artifacts, and
// byte-level reproducibility.

#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir()
    {
        path = fs::temp_directory_path()
            / ("mdl_cli_test_" + std::to_string(::getpid()) + "_"
               + std::to_string(counter()++));
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    static int& counter()
    {
        static int n = 0;
        return n;
    }
};

int run(const std::string& args)
{
    const std::string cmd = std::string(MDL_BIN) + " " + args + " >/dev/null 2>&1";
    const int status = std::system(cmd.c_str());
    return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p)
{
    std::ifstream file(p, std::ios::binary);
    REQUIRE(file.good());
    std::ostringstream buf;
    buf << file.rdbuf();
    return buf.str();
}

std::size_t line_count(const std::string& text)
{
    std::size_t n = 0;
    for (char c : text)
        if (c == '\n')
            ++n;
    return n;
}

} // namespace

TEST_CASE("map-build then adapt then eval round-trips through files")
{
    TempDir tmp;
    const auto map_dir = (tmp.path / "map").string();
    CHECK(run("map-build --budget 4000 --seed 5 --out " + map_dir) == 0);
    CHECK(fs::exists(tmp.path / "map" / "archive.csv"));
    CHECK(fs::exists(tmp.path / "map" / "stats.csv"));
    CHECK(fs::exists(tmp.path / "map" / "run.json"));

    const std::string stats = slurp(tmp.path / "map" / "stats.csv");
    CHECK(stats.rfind("evals,occupied,coverage,qd_score,max_fitness\n", 0) == 0);

    const auto adapt_dir = (tmp.path / "adapt").string();
    CHECK(run("adapt --archive " + map_dir + "/archive.csv --damage D2 --seed 3 --out "
              + adapt_dir)
          == 0);
    const std::string trace = slurp(tmp.path / "adapt" / "trace.csv");
    CHECK(trace.rfind("trial,cell,observed,best,stop_metric\n", 0) == 0);
    CHECK(line_count(trace) >= 2);  // header plus at least one trial
    CHECK(line_count(trace) <= 13); // never more than the dozen-trials budget

    const auto eval_dir = (tmp.path / "eval").string();
    CHECK(run("eval --archive " + map_dir + "/archive.csv --damage D1 --out " + eval_dir) == 0);
    const std::string summary = slurp(tmp.path / "eval" / "eval_summary.csv");
    CHECK(summary.rfind("damage,cells,max_fitness,best_cell\n", 0) == 0);

    // Analytic bound for a disabled leg: max damaged fitness <= 5/6.
    std::istringstream lines(summary);
    std::string header, row;
    std::getline(lines, header);
    std::getline(lines, row);
    const auto comma1 = row.find(',');
    const auto comma2 = row.find(',', comma1 + 1);
    const auto comma3 = row.find(',', comma2 + 1);
    const double max_fitness = std::stod(row.substr(comma2 + 1, comma3 - comma2 - 1));
    CHECK(max_fitness <= 5.0 / 6.0 + 1e-9);
}

TEST_CASE("missing archive exits with the config error code")
{
    TempDir tmp;
    CHECK(run("adapt --archive " + (tmp.path / "nope.csv").string() + " --out "
              + (tmp.path / "x").string())
          == 2);
    CHECK(run("eval --archive " + (tmp.path / "nope.csv").string() + " --out "
              + (tmp.path / "y").string())
          == 2);
}

TEST_CASE("config file problems exit with code 2")
{
    TempDir tmp;
    CHECK(run("bo --config " + (tmp.path / "missing.json").string()) == 2);

    const auto bad_json = tmp.path / "bad.json";
    std::ofstream(bad_json) << "{ not json";
    CHECK(run("bo --config " + bad_json.string()) == 2);

    const auto unknown_key = tmp.path / "unknown.json";
    std::ofstream(unknown_key) << R"({"bugdet": 10})";
    CHECK(run("bo --config " + unknown_key.string()) == 2);

    const auto bad_acq = tmp.path / "acq.json";
    std::ofstream(bad_acq) << R"({"acquisition": "wishful-thinking"})";
    CHECK(run("bo --config " + bad_acq.string() + " --out " + (tmp.path / "o").string()) == 2);
}

TEST_CASE("flags override config file values")
{
    TempDir tmp;
    const auto config = tmp.path / "bo.json";
    std::ofstream(config) << R"({"objective": "sphere2", "budget": 9, "seed": 4})";
    const auto out = (tmp.path / "bo_out").string();
    CHECK(run("bo --config " + config.string() + " --budget 1 --out " + out) == 0);
    const std::string trace = slurp(tmp.path / "bo_out" / "trace.csv");
    CHECK(line_count(trace) == 2); // header + exactly one row: the flag won
    CHECK(trace.rfind("iter,observed,best,acq", 0) == 0);
}

TEST_CASE("environment variable picks the output directory")
{
    TempDir tmp;
    const auto env_dir = tmp.path / "from_env";
    ::setenv("MDL_OUT_DIR", env_dir.string().c_str(), 1);
    const int code = run("bo --objective sphere2 --budget 1 --seed 1");
    ::unsetenv("MDL_OUT_DIR");
    CHECK(code == 0);
    CHECK(fs::exists(env_dir / "trace.csv"));
}

TEST_CASE("repeated runs with one seed produce byte-identical artifacts")
{
    TempDir tmp;
    const auto a = (tmp.path / "a").string();
    const auto b = (tmp.path / "b").string();
    CHECK(run("map-build --budget 3000 --seed 11 --out " + a) == 0);
    CHECK(run("map-build --budget 3000 --seed 11 --out " + b) == 0);
    CHECK(slurp(tmp.path / "a" / "archive.csv") == slurp(tmp.path / "b" / "archive.csv"));
    CHECK(slurp(tmp.path / "a" / "stats.csv") == slurp(tmp.path / "b" / "stats.csv"));

    const auto ta = (tmp.path / "ta").string();
    const auto tb = (tmp.path / "tb").string();
    CHECK(run("adapt --archive " + a + "/archive.csv --damage D4 --seed 7 --out " + ta) == 0);
    CHECK(run("adapt --archive " + a + "/archive.csv --damage D4 --seed 7 --out " + tb) == 0);
    CHECK(slurp(tmp.path / "ta" / "trace.csv") == slurp(tmp.path / "tb" / "trace.csv"));

    // A different seed changes the archive.
    const auto c = (tmp.path / "c").string();
    CHECK(run("map-build --budget 3000 --seed 12 --out " + c) == 0);
    CHECK(slurp(tmp.path / "a" / "archive.csv") != slurp(tmp.path / "c" / "archive.csv"));
}

TEST_CASE("bo with budget 1 emits one row")
{
    TempDir tmp;
    const auto out = (tmp.path / "bo1").string();
    CHECK(run("bo --objective sphere15 --budget 1 --seed 2 --out " + out) == 0);
    CHECK(line_count(slurp(tmp.path / "bo1" / "trace.csv")) == 2);
}

TEST_CASE("episode command emits per-episode summaries and per-tick logs")
{
    TempDir tmp;
    const auto config = tmp.path / "episode.json";
    std::ofstream(config)
        << R"({"max_episodes": 2, "horizon": 40, "plan_samples": 8, "plan_horizon": 5})";
    const auto out = (tmp.path / "ep").string();
    CHECK(run("episode --config " + config.string() + " --seed 3 --out " + out) == 0);

    const std::string summary = slurp(tmp.path / "ep" / "episodes.csv");
    CHECK(summary.rfind("episode,steps,total_reward,success\n", 0) == 0);
    CHECK(line_count(summary) >= 2);
    CHECK(fs::exists(tmp.path / "ep" / "episode_0.csv"));
    const std::string ticks = slurp(tmp.path / "ep" / "episode_0.csv");
    CHECK(ticks.rfind("t,x,xdot,theta,thetadot,action,reward\n", 0) == 0);
    CHECK(line_count(ticks) >= 2);
}

TEST_CASE("running without a subcommand fails")
{
    CHECK(run("") != 0);
}
