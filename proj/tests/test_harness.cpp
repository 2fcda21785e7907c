#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "harness.hpp"
#include "microdata/csv.hpp"
#include "microdata/rng.hpp"
#include "microdata/testbeds.hpp"
#include "support/oracles.hpp"

using namespace microdata;
using nlohmann::json;

TEST_CASE("seed_split is a pure function with distinct streams")
{
    CHECK(seed_split(42, 0) == seed_split(42, 0));
    CHECK(seed_split(42, 0) != seed_split(42, 1));
    CHECK(seed_split(42, 0) != seed_split(43, 0));

    Rng rng(1);
    for (int i = 0; i < 10000; ++i) {
        const std::uint64_t s = rng.next_u64();
        CHECK(seed_split(s, 0) != seed_split(s, 1));
    }
}

TEST_CASE("rng draws are deterministic and in range")
{
    Rng a(7), b(7);
    for (int i = 0; i < 1000; ++i) {
        const double u = a.uniform01();
        CHECK(u == b.uniform01());
        CHECK(u >= 0.0);
        CHECK(u < 1.0);
    }
    Rng c(8);
    double acc = 0.0, acc2 = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double z = c.normal();
        acc += z;
        acc2 += z * z;
    }
    CHECK(std::abs(acc / n) < 0.01);
    CHECK(acc2 / n == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("doubles round-trip through the shortest representation")
{
    Rng rng(3);
    for (int i = 0; i < 20000; ++i) {
        double v;
        switch (i % 4) {
        case 0: v = rng.uniform(-1.0, 1.0); break;
        case 1: v = rng.normal() * std::pow(10.0, rng.uniform(-300.0, 300.0)); break;
        case 2: v = static_cast<double>(rng.next_u64()); break;
        default: v = rng.normal(); break;
        }
        const double back = parse_double(format_double(v));
        CHECK(back == v);
    }
    CHECK(parse_double(format_double(0.1)) == 0.1);
    CHECK(format_double(0.1) == "0.1");
    CHECK(std::isnan(parse_double(format_double(std::numeric_limits<double>::quiet_NaN()))));
    CHECK(parse_double(format_double(std::numeric_limits<double>::infinity()))
          == std::numeric_limits<double>::infinity());
    CHECK(parse_double("-inf") == -std::numeric_limits<double>::infinity());
    CHECK_THROWS(parse_double("1.2.3"));
    CHECK_THROWS(parse_double(""));
    CHECK_THROWS(parse_double("12 "));
}

TEST_CASE("csv line splitting keeps empty fields")
{
    const auto fields = split_line("a,,c", ',');
    REQUIRE(fields.size() == 3);
    CHECK(fields[0] == "a");
    CHECK(fields[1] == "");
    CHECK(fields[2] == "c");
}

namespace {

template <typename Config>
void check_round_trip(const Config& config)
{
    const json j = config.to_json();
    const Config back = Config::from_json(j);
    CHECK(back.to_json() == j);
    // parse -> serialize -> parse is the identity
    CHECK(Config::from_json(back.to_json()).to_json() == j);
}

} // namespace

TEST_CASE("configs round-trip through JSON")
{
    harness::MapBuildConfig map;
    map.budget = 12345;
    map.sigma = 0.07;
    map.seed = 99;
    check_round_trip(map);

    harness::AdaptCmdConfig adapt;
    adapt.archive = "somewhere/archive.csv";
    adapt.damage = "D3";
    adapt.kappa = 1.5;
    check_round_trip(adapt);

    harness::BoCmdConfig bo;
    bo.objective = "rastrigin2";
    bo.acquisition = "ucb";
    check_round_trip(bo);

    harness::EpisodeCmdConfig episode;
    episode.plan_samples = 128;
    check_round_trip(episode);

    harness::EvalCmdConfig eval;
    eval.archive = "a.csv";
    eval.damage = "D5";
    check_round_trip(eval);
}

TEST_CASE("defaults survive an empty config object")
{
    const auto config = harness::AdaptCmdConfig::from_json(json::object());
    CHECK(config.budget == 12); // the dozen-trials default
    CHECK(config.alpha == 0.9);
    CHECK(config.damage == "D1");
}

TEST_CASE("unknown config keys are rejected")
{
    json j{{"budget", 5}, {"bugdet", 6}};
    CHECK_THROWS_AS(harness::MapBuildConfig::from_json(j), harness::ConfigError);
    CHECK_THROWS_AS(harness::AdaptCmdConfig::from_json(json{{"kapa", 1.0}}),
                    harness::ConfigError);
}

TEST_CASE("wrongly typed config values are rejected")
{
    CHECK_THROWS_AS(harness::MapBuildConfig::from_json(json{{"budget", "many"}}),
                    harness::ConfigError);
    CHECK_THROWS_AS(harness::BoCmdConfig::from_json(json::array()), harness::ConfigError);
}

TEST_CASE("archive evaluation is an exhaustive per-cell oracle")
{
    const auto intact = testbeds::intact_condition();
    elites::TaskEvaluator task = [&intact](const Vec& params) {
        const auto eval = testbeds::gait_proxy_eval(params, intact);
        return std::make_pair(eval.fitness, eval.descriptor);
    };
    elites::MapElitesConfig me;
    me.init_random = 500;
    const auto archive = elites::map_elites_run(task, testbeds::gait_param_dim,
                                                elites::GridSpec{6, 5}, 4000, me, 3);

    for (const auto& damage : testbeds::damage_table()) {
        const auto eval = harness::evaluate_archive(archive, damage);
        REQUIRE(eval.damaged_fitness.size() == archive.occupied());

        double expected = -std::numeric_limits<double>::infinity();
        for (const auto& [cell, elite] : archive.cells)
            expected = std::max(expected, testbeds::gait_proxy_eval(elite.params, damage).fitness);
        CHECK(eval.max_fitness == expected);

        // Analytic argmax bound: a one-leg-out condition can never beat 5/6.
        if (damage.id == "D1" || damage.id == "D2")
            CHECK(eval.max_fitness <= 5.0 / 6.0 + 1e-9);
        if (damage.id == "D3")
            CHECK(eval.max_fitness <= 4.0 / 6.0 + 1e-9);
    }
}
