#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Cholesky>
#include <cmath>

#include "microdata/gp.hpp"
#include "microdata/rng.hpp"
#include "support/oracles.hpp"

using namespace microdata;
using namespace microdata::gp;

namespace {

Vec vec1(double x)
{
    Vec v(1);
    v[0] = x;
    return v;
}

Vec random_unit_vec(int d, Rng& rng)
{
    Vec v(d);
    for (int i = 0; i < d; ++i)
        v[i] = rng.uniform01();
    return v;
}

GpModel random_model(int n, int d, KernelType type, Rng& rng, double noise = 1e-4)
{
    KernelSpec spec;
    spec.type = type;
    spec.signal_variance = rng.uniform(0.2, 2.0);
    spec.length_scales = Vec(d);
    for (int i = 0; i < d; ++i)
        spec.length_scales[i] = rng.uniform(0.1, 0.8);
    Mat inputs(n, d);
    Vec targets(n);
    for (int i = 0; i < n; ++i) {
        inputs.row(i) = random_unit_vec(d, rng);
        targets[i] = rng.normal();
    }
    return gp_fit(spec, noise, nullptr, inputs, targets);
}

} // namespace

TEST_CASE("kernel_eval at identical points returns the signal variance")
{
    auto spec = KernelSpec::ard(KernelType::SquaredExponential, 1.0, 3, 1.0);
    Vec x = Vec::Constant(3, 0.37);
    CHECK(kernel_eval(spec, x, x) == doctest::Approx(1.0).epsilon(1e-14));

    spec.signal_variance = 2.5;
    CHECK(kernel_eval(spec, x, x) == doctest::Approx(2.5).epsilon(1e-14));
}

TEST_CASE("squared exponential at unit distance")
{
    auto spec = KernelSpec::ard(KernelType::SquaredExponential, 1.0, 1, 1.0);
    CHECK(kernel_eval(spec, vec1(0.0), vec1(1.0)) == doctest::Approx(std::exp(-0.5)).epsilon(1e-12));
    CHECK(kernel_eval(spec, vec1(0.0), vec1(1.0)) == doctest::Approx(0.60653).epsilon(1e-5));
}

TEST_CASE("kernels match the scalar formulas on random pairs")
{
    Rng rng(11);
    for (int trial = 0; trial < 100; ++trial) {
        const int d = 1 + static_cast<int>(rng.uniform_index(5));
        KernelSpec spec;
        spec.signal_variance = rng.uniform(0.1, 3.0);
        spec.length_scales = Vec(d);
        for (int i = 0; i < d; ++i)
            spec.length_scales[i] = rng.uniform(0.05, 2.0);
        const Vec x = random_unit_vec(d, rng);
        const Vec y = random_unit_vec(d, rng);

        spec.type = KernelType::Matern52;
        CHECK(kernel_eval(spec, x, y)
              == doctest::Approx(oracles::matern52_formula(spec.signal_variance,
                                                           spec.length_scales, x, y))
                     .epsilon(1e-12));
        spec.type = KernelType::SquaredExponential;
        CHECK(kernel_eval(spec, x, y)
              == doctest::Approx(oracles::se_formula(spec.signal_variance, spec.length_scales,
                                                     x, y))
                     .epsilon(1e-12));
    }
}

TEST_CASE("kernel_eval rejects mismatched dimensions and non-finite input")
{
    auto spec = KernelSpec::ard(KernelType::SquaredExponential, 1.0, 2, 0.5);
    CHECK_THROWS_AS(kernel_eval(spec, vec1(0.0), vec1(0.0)), DimensionMismatch);
    Vec bad = Vec::Zero(2);
    bad[1] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(kernel_eval(spec, bad, Vec::Zero(2)), NonFiniteInput);
}

TEST_CASE("empty model predicts the prior")
{
    auto spec = KernelSpec::ard(KernelType::SquaredExponential, 0.7, 2, 0.2);
    auto model = gp_fit(spec, 1e-6, [](const Vec& x) { return 3.0 * x[0]; }, Mat(0, 2), Vec(0));
    const auto pred = gp_predict(model, Vec::Constant(2, 0.5));
    CHECK(pred.mean == doctest::Approx(1.5).epsilon(1e-14));
    CHECK(pred.variance == doctest::Approx(0.7).epsilon(1e-14));
}

TEST_CASE("one noise-free point is interpolated")
{
    auto spec = KernelSpec::ard(KernelType::SquaredExponential, 1.0, 2, 0.3);
    Mat inputs(1, 2);
    inputs << 0.2, 0.8;
    Vec targets = vec1(0.7);
    auto model = gp_fit(spec, 0.0, nullptr, inputs, targets);
    const auto pred = gp_predict(model, inputs.row(0));
    CHECK(pred.mean == doctest::Approx(0.7).epsilon(1e-10));
    CHECK(pred.variance == doctest::Approx(0.0).epsilon(1e-8));
}

TEST_CASE("predictions match the dense-solver oracle")
{
    Rng rng(42);

    SUBCASE("three points, tight tolerance")
    {
        auto model = random_model(3, 2, KernelType::SquaredExponential, rng);
        for (int q = 0; q < 10; ++q) {
            const Vec x = random_unit_vec(2, rng);
            const auto fast = gp_predict(model, x);
            const auto dense = oracles::dense_predict(model, x);
            CHECK(oracles::rel_close(fast.mean, dense.mean, 1e-10));
            CHECK(oracles::rel_close(fast.variance, std::max(dense.variance, 0.0), 1e-10));
        }
    }

    SUBCASE("twenty points, both kernels")
    {
        for (auto type : {KernelType::SquaredExponential, KernelType::Matern52}) {
            auto model = random_model(20, 4, type, rng);
            for (int q = 0; q < 10; ++q) {
                const Vec x = random_unit_vec(4, rng);
                const auto fast = gp_predict(model, x);
                const auto dense = oracles::dense_predict(model, x);
                CHECK(oracles::rel_close(fast.mean, dense.mean, 1e-8));
                CHECK(oracles::rel_close(fast.variance, std::max(dense.variance, 0.0), 1e-8));
            }
        }
    }
}

TEST_CASE("query far from all data reverts to the prior")
{
    Rng rng(5);
    auto spec = KernelSpec::ard(KernelType::SquaredExponential, 1.3, 2, 0.1);
    Mat inputs(5, 2);
    Vec targets(5);
    for (int i = 0; i < 5; ++i) {
        inputs.row(i) = random_unit_vec(2, rng);
        targets[i] = rng.normal();
    }
    auto model = gp_fit(spec, 1e-6, [](const Vec&) { return 0.25; }, inputs, targets);

    Vec far = Vec::Constant(2, 50.0); // hundreds of length scales away
    const auto pred = gp_predict(model, far);
    CHECK(pred.mean == doctest::Approx(0.25).epsilon(1e-10));
    CHECK(pred.variance == doctest::Approx(1.3).epsilon(1e-10));
}

TEST_CASE("near-interpolation at a training point with tiny noise")
{
    Rng rng(6);
    auto model = random_model(12, 3, KernelType::SquaredExponential, rng, 1e-6);
    for (int i = 0; i < model.size(); ++i) {
        const auto pred = gp_predict(model, model.inputs.row(i));
        CHECK(std::abs(pred.mean - model.targets[i]) < 1e-3);
    }
}

TEST_CASE("posterior variance stays within [0, prior + noise] on many queries")
{
    Rng rng(7);
    auto model = random_model(30, 3, KernelType::Matern52, rng, 1e-5);
    const double cap = model.kernel.signal_variance + model.noise_variance;
    for (int q = 0; q < 10000; ++q) {
        Vec x(3);
        for (int i = 0; i < 3; ++i)
            x[i] = rng.uniform(-1.0, 2.0);
        const auto pred = gp_predict(model, x);
        CHECK(pred.variance >= 0.0);
        CHECK(pred.variance <= cap + 1e-12);
    }
}

TEST_CASE("adding a data point never increases posterior variance (noise-free)")
{
    Rng rng(8);
    for (int instance = 0; instance < 20; ++instance) {
        const int n = 3 + static_cast<int>(rng.uniform_index(8));
        const int d = 1 + static_cast<int>(rng.uniform_index(3));
        KernelSpec spec = KernelSpec::ard(KernelType::SquaredExponential,
                                          rng.uniform(0.5, 1.5), d, rng.uniform(0.2, 0.6));
        Mat inputs(n + 1, d);
        Vec targets(n + 1);
        for (int i = 0; i < n + 1; ++i) {
            inputs.row(i) = random_unit_vec(d, rng);
            targets[i] = rng.normal();
        }
        const auto smaller = gp_fit(spec, 0.0, nullptr, inputs.topRows(n), targets.head(n));
        const auto larger = gp_fit(spec, 0.0, nullptr, inputs, targets);
        // Noise-free Grams are ill-conditioned; 1e-6 absorbs the cancellation
        // error in the variance subtraction.
        for (int q = 0; q < 20; ++q) {
            const Vec x = random_unit_vec(d, rng);
            CHECK(gp_predict(larger, x).variance
                  <= gp_predict(smaller, x).variance + 1e-6);
        }
    }
}

TEST_CASE("log marginal likelihood of a single zero observation")
{
    auto spec = KernelSpec::ard(KernelType::SquaredExponential, 0.8, 1, 0.2);
    const double noise = 1e-3;
    Mat inputs(1, 1);
    inputs << 0.4;
    auto model = gp_fit(spec, noise, nullptr, inputs, Vec::Zero(1));
    const double expected = -0.5 * std::log(2.0 * 3.14159265358979323846 * (0.8 + noise));
    CHECK(log_marginal_likelihood(model) == doctest::Approx(expected).epsilon(1e-10));
}

TEST_CASE("lml and gradient require data")
{
    auto spec = KernelSpec::ard(KernelType::SquaredExponential, 1.0, 1, 0.2);
    auto model = gp_fit(spec, 1e-6, nullptr, Mat(0, 1), Vec(0));
    CHECK_THROWS_AS(log_marginal_likelihood(model), EmptyModel);
    CHECK_THROWS_AS(lml_gradient(model), EmptyModel);
}

TEST_CASE("duplicated point with zero noise survives through the jitter path")
{
    auto spec = KernelSpec::ard(KernelType::SquaredExponential, 1.0, 1, 0.2);
    Mat inputs(2, 1);
    inputs << 0.5, 0.5;
    Vec targets = Vec::Constant(2, 0.3);
    const auto model = gp_fit(spec, 0.0, nullptr, inputs, targets);
    CHECK(model.jitter > 0.0);
    CHECK(std::isfinite(log_marginal_likelihood(model)));
}

TEST_CASE("lml gradient matches central finite differences")
{
    Rng rng(99);
    int checked = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const int n = 2 + static_cast<int>(rng.uniform_index(10));
        const int d = 1 + static_cast<int>(rng.uniform_index(4));
        const auto type = trial % 2 == 0 ? KernelType::SquaredExponential : KernelType::Matern52;
        auto model = random_model(n, d, type, rng, 1e-3);
        const Vec analytic = lml_gradient(model);
        const Vec fd = oracles::fd_lml_gradient(model);
        REQUIRE(analytic.size() == d + 2);
        const double rel = (analytic - fd).norm() / std::max(fd.norm(), 1e-8);
        CHECK(rel < 1e-4);
        ++checked;
    }
    CHECK(checked == 20);
}

TEST_CASE("gradient length is 2 + d")
{
    Rng rng(3);
    auto model = random_model(5, 6, KernelType::SquaredExponential, rng);
    CHECK(lml_gradient(model).size() == 8);
}

TEST_CASE("cholesky factor reproduces the regularized gram matrix")
{
    Rng rng(12);
    for (auto type : {KernelType::SquaredExponential, KernelType::Matern52}) {
        auto model = random_model(25, 3, type, rng, 1e-5);
        Mat reconstructed = model.chol * model.chol.transpose();
        Mat expected(25, 25);
        for (int i = 0; i < 25; ++i)
            for (int j = 0; j < 25; ++j)
                expected(i, j) = oracles::kernel_formula(model.kernel, model.inputs.row(i),
                                                         model.inputs.row(j));
        expected.diagonal().array() += model.noise_variance + model.jitter;
        const double rel = (reconstructed - expected).norm() / expected.norm();
        CHECK(rel < 1e-10);
    }
}

TEST_CASE("gp_fit rejects non-finite targets")
{
    auto spec = KernelSpec::ard(KernelType::SquaredExponential, 1.0, 1, 0.2);
    Mat inputs(1, 1);
    inputs << 0.5;
    Vec bad = vec1(std::numeric_limits<double>::infinity());
    CHECK_THROWS_AS(gp_fit(spec, 1e-6, nullptr, inputs, bad), NonFiniteInput);
}

TEST_CASE("hyperparameter optimization recovers a known length scale")
{
    std::vector<double> recovered;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        Rng rng(seed_split(2024, seed));
        const int n = 40;
        auto true_spec = KernelSpec::ard(KernelType::SquaredExponential, 1.0, 1, 0.2);
        Mat inputs(n, 1);
        for (int i = 0; i < n; ++i)
            inputs(i, 0) = rng.uniform01();

        // Sample targets from the prior via a Cholesky of the true kernel.
        Mat k(n, n);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                k(i, j) = oracles::se_formula(1.0, true_spec.length_scales, inputs.row(i),
                                              inputs.row(j));
        k.diagonal().array() += 1e-8;
        Eigen::LLT<Mat> llt(k);
        Vec z(n);
        for (int i = 0; i < n; ++i)
            z[i] = rng.normal();
        const Vec targets = llt.matrixL() * z;

        HyperOptConfig config;
        config.restarts = 8;
        config.max_ascent_iters = 40;
        const auto result = optimize_hyperparams(KernelType::SquaredExponential, inputs, targets,
                                                 nullptr, config, rng);
        recovered.push_back(result.kernel.length_scales[0]);
    }
    const double med = oracles::median(recovered);
    CHECK(med > 0.1);
    CHECK(med < 0.4);
}

TEST_CASE("single warm-started restart never finishes below its start")
{
    Rng rng(77);
    auto model = random_model(15, 2, KernelType::SquaredExponential, rng, 1e-4);

    HyperOptConfig config;
    config.restarts = 1;
    config.warm_start = {{model.kernel, model.noise_variance}};
    const double start_lml = log_marginal_likelihood(model);

    Rng opt_rng(1);
    const auto result = optimize_hyperparams(KernelType::SquaredExponential, model.inputs,
                                             model.targets, nullptr, config, opt_rng);
    CHECK(result.lml >= start_lml - 1e-12);
}

TEST_CASE("hyperparameter optimization is deterministic given the seed")
{
    Rng data_rng(31);
    auto model = random_model(12, 2, KernelType::SquaredExponential, data_rng, 1e-4);

    HyperOptConfig config;
    config.restarts = 4;
    config.max_ascent_iters = 25;

    Rng rng_a(9);
    Rng rng_b(9);
    const auto a = optimize_hyperparams(KernelType::SquaredExponential, model.inputs,
                                        model.targets, nullptr, config, rng_a);
    const auto b = optimize_hyperparams(KernelType::SquaredExponential, model.inputs,
                                        model.targets, nullptr, config, rng_b);
    CHECK(a.lml == b.lml);
    CHECK(a.noise_variance == b.noise_variance);
    CHECK(a.kernel.signal_variance == b.kernel.signal_variance);
    CHECK(a.kernel.length_scales == b.kernel.length_scales);
}

TEST_CASE("optimize_hyperparams rejects empty data")
{
    HyperOptConfig config;
    Rng rng(1);
    CHECK_THROWS_AS(optimize_hyperparams(KernelType::SquaredExponential, Mat(0, 1), Vec(0),
                                         nullptr, config, rng),
                    EmptyData);
}
