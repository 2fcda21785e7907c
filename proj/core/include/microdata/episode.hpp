#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include "microdata/gp.hpp"
#include "microdata/rng.hpp"
#include "microdata/testbeds.hpp"
#include "microdata/types.hpp"

namespace microdata::episode {

struct Step {
    Vec4 state;          // before the action
    double action = 0.0; // applied force, N
    double reward = 0.0; // of the state the action led to
};

/// Per-tick trajectory of one trial: every step is a usable data point, not
/// just the end-of-trial outcome.
struct EpisodeLog {
    double tick_seconds = 0.01;
    std::vector<Step> steps;
    Vec4 final_state = Vec4::Zero(); // state after the last recorded action

    std::size_t transition_count() const { return steps.size(); }
    double total_reward() const;
};

using Policy = std::function<double(const Vec4& state, int tick, Rng& rng)>;

/// Rolls the system under the policy for up to `horizon` ticks, stopping
/// early at the first failure state. When `start` is unset the episode
/// begins upright with U(-0.05, 0.05) noise on each state dimension.
EpisodeLog record_episode(const testbeds::CartPoleParams& system, const Policy& policy,
                          int horizon, double tick, Rng& rng,
                          std::optional<Vec4> start = std::nullopt);

struct DynamicsConfig {
    int max_points = 300;              // uniform seeded subsample cap
    double length_scale_factor = 3.0;  // times the per-dimension input stddev;
                                       // wide kernels suit the near-linear
                                       // balancing envelope
    double min_length_scale = 1e-3;
    double min_signal_variance = 1e-4;
    double noise_variance = 1e-8;
};

/// One-step model: four squared-exponential GPs over (state, action) with
/// shared inputs and length scales, predicting the per-dimension state
/// delta.
struct DynamicsModel {
    std::array<gp::GpModel, 4> output_gp;
    Mat train_inputs; // m x 5, shared by all four outputs

    int train_size() const { return static_cast<int>(train_inputs.rows()); }

    /// Reference path through gp_predict.
    Vec4 predict_delta(const Vec4& state, double action) const;

    /// Vectorized mean prediction for a batch of (state, action) rows;
    /// agrees with predict_delta.
    Mat predict_delta_mean(const Mat& states, const Vec& actions) const;

    Vec4 predict_next(const Vec4& state, double action) const;
};

/// Fits the dynamics model on every transition harvested from the logs.
/// Throws EmptyData when there is none.
DynamicsModel fit_dynamics(const std::vector<EpisodeLog>& logs, const DynamicsConfig& config,
                           std::uint64_t seed);

struct PlanConfig {
    int horizon = 25;
    int samples = 200;
    double action_min = -10.0;
    double action_max = 10.0;
    int threads = 1;
};

/// Advances a batch of states (rows) in place under per-row actions.
using BatchStepper = std::function<void(Mat& states, const Vec& actions)>;

/// Random-shooting MPC: samples iid action sequences, rolls each out under
/// the stepper's mean dynamics, and returns the first action of the
/// sequence with the highest cumulative cos(theta) reward (first index on
/// ties). Deterministic given the rng state.
double shoot_plan(const BatchStepper& stepper, const Vec4& state, const PlanConfig& config,
                  Rng& rng);

double shoot_plan(const DynamicsModel& model, const Vec4& state, const PlanConfig& config,
                  Rng& rng);

/// Batch stepper running the true simulator (oracle model for tests).
BatchStepper simulator_stepper(const testbeds::CartPoleParams& system, double dt);

struct LoopConfig {
    int max_episodes = 10;
    int horizon = 500;  // ticks per episode; also the balancing criterion span
    double tick = 0.01;
    PlanConfig plan;
    DynamicsConfig dynamics;
};

using SuccessCriterion = std::function<bool(const EpisodeLog&)>;

/// Balanced for the whole horizon: the log reached `steps` transitions and
/// never left the pole/cart limits.
SuccessCriterion balance_criterion(const testbeds::CartPoleParams& system, int steps = 500);

struct LoopResult {
    int episodes_used = 0;
    bool success = false;
    std::vector<EpisodeLog> logs;
};

/// Learn-to-balance loop: a random-policy bootstrap episode, then
/// alternating model refits and MPC episodes with per-tick replanning.
LoopResult episode_loop(const testbeds::CartPoleParams& system, const LoopConfig& config,
                        const SuccessCriterion& success, std::uint64_t seed);

} // namespace microdata::episode
