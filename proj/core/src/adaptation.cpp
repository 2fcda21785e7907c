#include "microdata/adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "microdata/errors.hpp"

namespace microdata::adapt {

const PriorCell* PriorMap::find(elites::CellIndex cell) const
{
    auto it = std::lower_bound(cells.begin(), cells.end(), cell,
                               [](const PriorCell& c, elites::CellIndex v) { return c.cell < v; });
    if (it == cells.end() || it->cell != cell)
        return nullptr;
    return &*it;
}

PriorMap build_prior(const elites::EliteArchive& archive)
{
    if (archive.cells.empty())
        throw EmptyArchive("build_prior: archive is empty");
    PriorMap prior;
    prior.grid = archive.grid;
    prior.cells.reserve(archive.cells.size());
    for (const auto& [cell, elite] : archive.cells) // std::map is already in cell order
        prior.cells.push_back({cell, elite.descriptor, elite.params, elite.fitness});
    return prior;
}

namespace {

/// Prior mean over descriptor space: the map fitness of the cell the
/// descriptor falls into. Queries always come from map cells themselves.
gp::MeanFn prior_mean_of(const PriorMap& prior)
{
    // The lambda keeps its own copy so models stay valid independently.
    auto grid = prior.grid;
    auto cells = prior.cells;
    return [grid, cells](const Vec& descriptor) -> double {
        const elites::CellIndex cell = elites::descriptor_to_cell(descriptor, grid);
        auto it = std::lower_bound(cells.begin(), cells.end(), cell,
                                   [](const PriorCell& c, elites::CellIndex v) { return c.cell < v; });
        if (it == cells.end() || it->cell != cell)
            return 0.0;
        return it->prior_fitness;
    };
}

gp::GpModel fit_on_trials(const PriorMap& prior, const AdaptConfig& config,
                          const std::vector<std::pair<elites::CellIndex, double>>& trials)
{
    const int k = prior.grid.descriptor_dim;
    Mat inputs(static_cast<int>(trials.size()), k);
    Vec targets(static_cast<int>(trials.size()));
    for (std::size_t i = 0; i < trials.size(); ++i) {
        const PriorCell* cell = prior.find(trials[i].first);
        inputs.row(static_cast<int>(i)) = cell->descriptor;
        targets[static_cast<int>(i)] = trials[i].second;
    }
    const auto kernel = gp::KernelSpec::ard(config.kernel, config.signal_variance, k,
                                            config.length_scale);
    return gp::gp_fit(kernel, config.noise_variance, prior_mean_of(prior), inputs, targets);
}

} // namespace

AdaptState adapt_init(PriorMap prior, AdaptConfig config)
{
    if (prior.cells.empty())
        throw EmptyArchive("adapt_init: empty prior map");
    AdaptState state;
    state.config = config;
    state.gp = fit_on_trials(prior, config, {});
    state.prior = std::move(prior);
    state.best_observed = -std::numeric_limits<double>::infinity();
    return state;
}

gp::Prediction adapt_posterior(const AdaptState& state, const PriorCell& cell)
{
    return gp::gp_predict(state.gp, cell.descriptor);
}

elites::CellIndex adapt_select_next(const AdaptState& state, double kappa)
{
    if (state.stopped)
        throw AlreadyStopped("adapt_select_next: loop already stopped");
    const PriorCell* arg = nullptr;
    double best_score = -std::numeric_limits<double>::infinity();
    for (const PriorCell& cell : state.prior.cells) {
        const auto pred = adapt_posterior(state, cell);
        const double score = pred.mean + kappa * std::sqrt(pred.variance);
        if (score > best_score) { // strict: ties keep the lowest cell index
            best_score = score;
            arg = &cell;
        }
    }
    return arg->cell;
}

namespace {

double max_posterior_mean(const AdaptState& state)
{
    double best = -std::numeric_limits<double>::infinity();
    for (const PriorCell& cell : state.prior.cells)
        best = std::max(best, adapt_posterior(state, cell).mean);
    return best;
}

} // namespace

AdaptState adapt_step(AdaptState state, const RealEvaluator& evaluate)
{
    if (state.stopped)
        throw AlreadyStopped("adapt_step: loop already stopped");

    const elites::CellIndex cell = adapt_select_next(state, state.config.kappa);
    const PriorCell* chosen = state.prior.find(cell);
    const double observed = evaluate(chosen->params);
    if (!std::isfinite(observed)) {
        state.stopped = true;
        throw EvaluatorNanError(std::move(state));
    }

    state.trials.emplace_back(cell, observed);
    if (!std::isfinite(state.best_observed) || observed > state.best_observed) {
        state.best_observed = observed;
        state.best_cell = cell;
    }
    state.gp = fit_on_trials(state.prior, state.config, state.trials);

    state.stop_metric = state.config.alpha * max_posterior_mean(state);
    if (state.best_observed >= state.stop_metric) {
        state.stopped = true;
        state.reason = StopReason::StopRuleMet;
    }
    return state;
}

AdaptTrace adapt_run(PriorMap prior, const RealEvaluator& evaluate, int budget,
                     const AdaptConfig& config, std::uint64_t seed)
{
    if (budget < 1)
        throw std::invalid_argument("adapt_run: budget must be >= 1");

    AdaptTrace trace;
    trace.seed = seed;

    AdaptState state = adapt_init(std::move(prior), config);
    for (int trial = 0; trial < budget && !state.stopped; ++trial) {
        state = adapt_step(std::move(state), evaluate);
        trace.records.push_back({trial, state.trials.back().first, state.trials.back().second,
                                 state.best_observed, state.stop_metric});
    }
    if (!state.stopped) {
        state.stopped = true;
        state.reason = StopReason::BudgetExhausted;
    }
    trace.reason = state.reason;
    trace.best_observed = state.best_observed;
    trace.best_cell = state.best_cell;
    return trace;
}

} // namespace microdata::adapt
