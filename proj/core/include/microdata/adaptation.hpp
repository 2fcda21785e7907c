#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <utility>
#include <vector>

#include "microdata/gp.hpp"
#include "microdata/map_elites.hpp"
#include "microdata/types.hpp"

namespace microdata::adapt {

/// One archive cell offered as a candidate trial, with its simulated
/// (intact) fitness as prior knowledge.
struct PriorCell {
    elites::CellIndex cell = 0;
    Vec descriptor;
    Vec params;
    double prior_fitness = 0.0;
};

/// Candidate trials extracted from an archive, in ascending cell order.
struct PriorMap {
    elites::GridSpec grid;
    std::vector<PriorCell> cells;

    std::size_t size() const { return cells.size(); }
    const PriorCell* find(elites::CellIndex cell) const;
};

PriorMap build_prior(const elites::EliteArchive& archive); // EmptyArchive if empty

struct AdaptConfig {
    double kappa = 2.0;            // UCB exploration weight over map cells
    double alpha = 0.9;            // stop once best >= alpha * max posterior mean
    double length_scale = 0.4;     // in descriptor space; wide enough that one
                                   // bad trial discounts its whole gait family
    double signal_variance = 0.04;
    double noise_variance = 1e-6;
    gp::KernelType kernel = gp::KernelType::SquaredExponential;
};

enum class StopReason { None, BudgetExhausted, StopRuleMet };

/// Damage-recovery loop state. The GP runs over descriptor space on the
/// residual observed - prior_fitness; the map fitness is added back as the
/// prior mean, so trials can confirm, question, or override the prior.
struct AdaptState {
    PriorMap prior;
    AdaptConfig config;
    std::vector<std::pair<elites::CellIndex, double>> trials;
    gp::GpModel gp;
    double best_observed = 0.0;
    elites::CellIndex best_cell = 0;
    double stop_metric = 0.0; // alpha * max posterior mean after the last trial
    bool stopped = false;
    StopReason reason = StopReason::None;

    bool has_trials() const { return !trials.empty(); }
};

AdaptState adapt_init(PriorMap prior, AdaptConfig config = {});

/// Posterior over one cell: prior fitness plus the residual GP.
gp::Prediction adapt_posterior(const AdaptState& state, const PriorCell& cell);

/// Argmax over map cells of mean + kappa * stddev; ties break to the lowest
/// cell index. Throws AlreadyStopped once the loop has stopped.
elites::CellIndex adapt_select_next(const AdaptState& state, double kappa);

using RealEvaluator = std::function<double(const Vec& params)>;

struct EvaluatorNanError : std::runtime_error {
    explicit EvaluatorNanError(AdaptState flagged)
        : std::runtime_error("real evaluator returned a non-finite value"),
          state(std::move(flagged))
    {
    }
    AdaptState state;
};

/// Runs one real trial at the selected cell, refits the residual GP, and
/// applies the stop rule.
AdaptState adapt_step(AdaptState state, const RealEvaluator& evaluate);

struct AdaptRecord {
    int trial = 0;
    elites::CellIndex cell = 0;
    double observed = 0.0;
    double best = 0.0;
    double stop_metric = 0.0; // alpha * max posterior mean after this trial
};

struct AdaptTrace {
    std::vector<AdaptRecord> records;
    StopReason reason = StopReason::None;
    double best_observed = 0.0;
    elites::CellIndex best_cell = 0;
    std::uint64_t seed = 0;
};

/// Full recovery loop: at most `budget` trials ("a dozen" by default),
/// stopping early once observed performance reaches the stop rule.
AdaptTrace adapt_run(PriorMap prior, const RealEvaluator& evaluate, int budget = 12,
                     const AdaptConfig& config = {}, std::uint64_t seed = 0);

} // namespace microdata::adapt
