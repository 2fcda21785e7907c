#include "microdata/bayes_opt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "microdata/errors.hpp"

namespace microdata::bo {

namespace {

constexpr double k_inv_sqrt2 = 0.70710678118654752440084436210485;
constexpr double k_inv_sqrt2pi = 0.39894228040143267793994605993438;

double normal_cdf(double z) { return 0.5 * std::erfc(-z * k_inv_sqrt2); }
double normal_pdf(double z) { return k_inv_sqrt2pi * std::exp(-0.5 * z * z); }

} // namespace

double acquisition_value(const AcquisitionSpec& spec, double mean, double variance, double best)
{
    if (!std::isfinite(mean) || !std::isfinite(variance))
        throw NonFiniteInput("acquisition_value: non-finite posterior");
    if (variance < 0.0)
        throw std::invalid_argument("acquisition_value: negative variance");

    const double sigma = std::sqrt(variance);
    // Improvement direction folded into delta so every branch maximizes.
    const double sense = spec.maximize ? 1.0 : -1.0;

    switch (spec.type) {
    case AcquisitionType::ExpectedImprovement: {
        if (!std::isfinite(best))
            throw NonFiniteInput("acquisition_value: non-finite incumbent");
        const double delta = sense * (mean - best) - spec.xi;
        if (sigma == 0.0)
            return std::max(delta, 0.0);
        const double z = delta / sigma;
        return std::max(delta * normal_cdf(z) + sigma * normal_pdf(z), 0.0);
    }
    case AcquisitionType::ProbabilityOfImprovement: {
        if (!std::isfinite(best))
            throw NonFiniteInput("acquisition_value: non-finite incumbent");
        const double delta = sense * (mean - best) - spec.xi;
        if (sigma == 0.0)
            return delta > 0.0 ? 1.0 : 0.0;
        return normal_cdf(delta / sigma);
    }
    case AcquisitionType::UpperConfidenceBound:
        return sense * mean + spec.kappa * sigma;
    }
    return 0.0;
}

namespace {

double incumbent_of(const gp::GpModel& model, const AcquisitionSpec& acq)
{
    if (acq.type == AcquisitionType::UpperConfidenceBound)
        return 0.0; // unused
    if (model.size() == 0)
        throw EmptyModel("acquisition needs an incumbent but the model has no data");
    return acq.maximize ? model.targets.maxCoeff() : model.targets.minCoeff();
}

double acq_at(const gp::GpModel& model, const AcquisitionSpec& acq, double best, const Vec& x)
{
    const auto pred = gp_predict(model, x);
    return acquisition_value(acq, pred.mean, pred.variance, best);
}

} // namespace

Vec propose_continuous(const gp::GpModel& model, const AcquisitionSpec& acq, int dim, Rng& rng,
                       const ProposeConfig& config)
{
    if (dim < 1)
        throw std::invalid_argument("propose_continuous: dim must be >= 1");
    const double best = incumbent_of(model, acq);

    struct Scored {
        Vec x;
        double value;
    };
    std::vector<Scored> samples;
    samples.reserve(static_cast<std::size_t>(config.samples));
    for (int s = 0; s < config.samples; ++s) {
        Vec x(dim);
        for (int i = 0; i < dim; ++i)
            x[i] = rng.uniform01();
        const double v = acq_at(model, acq, best, x);
        samples.push_back({std::move(x), v});
    }

    std::vector<std::size_t> order(samples.size());
    for (std::size_t i = 0; i < order.size(); ++i)
        order[i] = i;
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return samples[a].value > samples[b].value; });

    Vec best_x = samples[order[0]].x;
    double best_v = samples[order[0]].value;

    const int starts = std::min<int>(config.refine_top, static_cast<int>(order.size()));
    for (int s = 0; s < starts; ++s) {
        Vec x = samples[order[static_cast<std::size_t>(s)]].x;
        double v = samples[order[static_cast<std::size_t>(s)]].value;
        double step = config.initial_step;
        for (int iter = 0; iter < config.refine_iters && step >= config.min_step; ++iter) {
            bool improved = false;
            for (int i = 0; i < dim; ++i) {
                for (double dir : {+1.0, -1.0}) {
                    Vec trial = x;
                    trial[i] = std::min(std::max(trial[i] + dir * step, 0.0), 1.0);
                    if (trial[i] == x[i])
                        continue;
                    const double tv = acq_at(model, acq, best, trial);
                    if (tv > v) {
                        x = std::move(trial);
                        v = tv;
                        improved = true;
                    }
                }
            }
            if (!improved)
                step *= 0.5;
        }
        if (v > best_v) {
            best_v = v;
            best_x = std::move(x);
        }
    }
    return best_x;
}

std::size_t propose_discrete(const gp::GpModel& model, const AcquisitionSpec& acq,
                             const std::vector<Vec>& candidates)
{
    if (candidates.empty())
        throw EmptyCandidates("propose_discrete: no candidates");
    const double best = incumbent_of(model, acq);

    std::size_t arg = 0;
    double best_v = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const double v = acq_at(model, acq, best, candidates[i]);
        if (v > best_v) { // strict: ties keep the lowest index
            best_v = v;
            arg = i;
        }
    }
    return arg;
}

double BoTrace::best() const
{
    if (records.empty())
        throw EmptyData("BoTrace::best: empty trace");
    return records.back().best_so_far;
}

namespace {

/// Latin-hypercube points: one sample per stratum and axis, seeded shuffles.
std::vector<Vec> space_filling_init(int count, int dim, Rng& rng)
{
    std::vector<std::vector<int>> strata(static_cast<std::size_t>(dim),
                                         std::vector<int>(static_cast<std::size_t>(count)));
    for (int i = 0; i < dim; ++i) {
        auto& perm = strata[static_cast<std::size_t>(i)];
        for (int s = 0; s < count; ++s)
            perm[static_cast<std::size_t>(s)] = s;
        for (int s = count - 1; s > 0; --s)
            std::swap(perm[static_cast<std::size_t>(s)],
                      perm[rng.uniform_index(static_cast<std::size_t>(s) + 1)]);
    }
    std::vector<Vec> points;
    points.reserve(static_cast<std::size_t>(count));
    for (int s = 0; s < count; ++s) {
        Vec x(dim);
        for (int i = 0; i < dim; ++i)
            x[i] = (strata[static_cast<std::size_t>(i)][static_cast<std::size_t>(s)] + rng.uniform01())
                / static_cast<double>(count);
        points.push_back(std::move(x));
    }
    return points;
}

} // namespace

BoTrace bo_run(const Objective& objective, int dim, int budget, const BoConfig& config,
               std::uint64_t seed)
{
    if (dim < 1)
        throw std::invalid_argument("bo_run: dim must be >= 1");
    if (budget < 1)
        throw std::invalid_argument("bo_run: budget must be >= 1");

    BoTrace trace;
    trace.seed = seed;
    trace.dim = dim;
    trace.budget = budget;

    Rng rng(seed);
    const bool maximize = config.acquisition.maximize;
    const double nan = std::numeric_limits<double>::quiet_NaN();

    Mat inputs(budget, dim);
    Vec targets(budget);
    int n = 0;
    double best = maximize ? -std::numeric_limits<double>::infinity()
                           : std::numeric_limits<double>::infinity();

    auto observe = [&](const Vec& x, double acq_value) {
        const double y = objective(x);
        if (!std::isfinite(y)) {
            trace.aborted = true;
            throw ObjectiveNanError(std::move(trace));
        }
        inputs.row(n) = x;
        targets[n] = y;
        ++n;
        best = maximize ? std::max(best, y) : std::min(best, y);
        trace.records.push_back({n - 1, x, y, best, acq_value});
    };

    const int init_count = std::min(budget, config.init_points > 0 ? config.init_points
                                                                   : std::max(3, dim));
    for (const Vec& x : space_filling_init(init_count, dim, rng))
        observe(x, nan);

    gp::KernelSpec kernel = gp::KernelSpec::ard(config.kernel, config.init_signal_variance,
                                                dim, config.init_length_scale);
    double noise = config.init_noise_variance;

    while (n < budget) {
        if (config.optimize_hypers && n >= 3) {
            gp::HyperOptConfig hyper;
            hyper.restarts = config.hyper_restarts;
            hyper.max_ascent_iters = config.hyper_ascent_iters;
            hyper.bounds = config.hyper_bounds;
            hyper.warm_start = {{kernel, noise}};
            const auto result = gp::optimize_hyperparams(config.kernel, inputs.topRows(n),
                                                         targets.head(n), nullptr, hyper, rng);
            kernel = result.kernel;
            noise = result.noise_variance;
        }
        const gp::GpModel model = gp::gp_fit(kernel, noise, nullptr, inputs.topRows(n),
                                             targets.head(n));
        const Vec x = propose_continuous(model, config.acquisition, dim, rng, config.propose);
        const double acq = acq_at(model, config.acquisition,
                                  incumbent_of(model, config.acquisition), x);
        observe(x, acq);
    }
    return trace;
}

BoTrace random_search(const Objective& objective, int dim, int budget, bool maximize,
                      std::uint64_t seed)
{
    if (dim < 1 || budget < 1)
        throw std::invalid_argument("random_search: dim and budget must be >= 1");

    BoTrace trace;
    trace.seed = seed;
    trace.dim = dim;
    trace.budget = budget;

    Rng rng(seed);
    double best = maximize ? -std::numeric_limits<double>::infinity()
                           : std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < budget; ++iter) {
        Vec x(dim);
        for (int i = 0; i < dim; ++i)
            x[i] = rng.uniform01();
        const double y = objective(x);
        if (!std::isfinite(y)) {
            trace.aborted = true;
            throw ObjectiveNanError(std::move(trace));
        }
        best = maximize ? std::max(best, y) : std::min(best, y);
        trace.records.push_back({iter, std::move(x), y, best,
                                 std::numeric_limits<double>::quiet_NaN()});
    }
    return trace;
}

} // namespace microdata::bo
