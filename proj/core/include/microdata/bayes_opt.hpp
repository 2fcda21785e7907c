#pragma once

#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "microdata/gp.hpp"
#include "microdata/rng.hpp"
#include "microdata/types.hpp"

namespace microdata::bo {

enum class AcquisitionType { ExpectedImprovement, UpperConfidenceBound, ProbabilityOfImprovement };

/// Acquisition functions are always maximized; `maximize` states the
/// objective sense they score candidates for.
struct AcquisitionSpec {
    AcquisitionType type = AcquisitionType::ExpectedImprovement;
    double xi = 0.01;    // EI/PI exploration margin
    double kappa = 2.0;  // UCB exploration weight
    bool maximize = true;

    static AcquisitionSpec ei(double xi = 0.01, bool maximize = true)
    {
        return {AcquisitionType::ExpectedImprovement, xi, 0.0, maximize};
    }
    static AcquisitionSpec ucb(double kappa = 2.0, bool maximize = true)
    {
        return {AcquisitionType::UpperConfidenceBound, 0.0, kappa, maximize};
    }
    static AcquisitionSpec pi(double xi = 0.01, bool maximize = true)
    {
        return {AcquisitionType::ProbabilityOfImprovement, xi, 0.0, maximize};
    }
};

/// Scores a posterior (mean, variance) against the incumbent `best`.
double acquisition_value(const AcquisitionSpec& spec, double mean, double variance, double best);

struct ProposeConfig {
    int samples = 512;     // random multistart candidates
    int refine_top = 4;    // candidates refined by pattern search
    int refine_iters = 48; // pattern-search sweeps per candidate
    double initial_step = 0.1;
    double min_step = 1e-7;
};

/// Maximizes the acquisition over [0,1]^dim: seeded random multistart plus
/// coordinate pattern search from the best starts. The result's acquisition
/// value is never below any multistart sample's.
Vec propose_continuous(const gp::GpModel& model, const AcquisitionSpec& acq, int dim, Rng& rng,
                       const ProposeConfig& config = {});

/// Argmax of the acquisition over an explicit candidate list; ties break to
/// the lowest index.
std::size_t propose_discrete(const gp::GpModel& model, const AcquisitionSpec& acq,
                             const std::vector<Vec>& candidates);

struct BoRecord {
    int iter = 0;
    Vec params;
    double observed = 0.0;
    double best_so_far = 0.0;
    double acq_value = 0.0; // NaN for the space-filling init phase
};

/// Trial ledger of one run; the budget is the number of records.
struct BoTrace {
    std::vector<BoRecord> records;
    std::uint64_t seed = 0;
    int dim = 0;
    int budget = 0;
    bool aborted = false; // objective returned a non-finite value

    double best() const;
};

struct ObjectiveNanError : std::runtime_error {
    explicit ObjectiveNanError(BoTrace partial)
        : std::runtime_error("objective returned a non-finite value"),
          trace(std::move(partial))
    {
    }
    BoTrace trace;
};

struct BoConfig {
    AcquisitionSpec acquisition = AcquisitionSpec::ei(0.01);
    gp::KernelType kernel = gp::KernelType::SquaredExponential;
    double init_length_scale = 0.2;
    double init_signal_variance = 1.0;
    double init_noise_variance = 1e-6;
    bool optimize_hypers = true;
    int hyper_restarts = 2; // warm start plus randoms, every iteration once n >= 3
    int hyper_ascent_iters = 30;
    gp::HyperBounds hyper_bounds;
    ProposeConfig propose;
    int init_points = -1; // -1 selects max(3, dim)
};

using Objective = std::function<double(const Vec&)>;

/// Select-test-update loop on [0,1]^dim: max(3, dim) space-filling points,
/// then acquisition-driven proposals with per-iteration hyperparameter
/// refits. Spends the budget exactly; deterministic given the seed. A
/// non-finite observation raises ObjectiveNanError carrying the partial
/// trace flagged aborted.
BoTrace bo_run(const Objective& objective, int dim, int budget, const BoConfig& config,
               std::uint64_t seed);

/// Uniform-random baseline with the same trace format and budget accounting.
BoTrace random_search(const Objective& objective, int dim, int budget, bool maximize,
                      std::uint64_t seed);

} // namespace microdata::bo
