#include "microdata/episode.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "microdata/errors.hpp"
#include "microdata/parallel.hpp"

namespace microdata::episode {

double EpisodeLog::total_reward() const
{
    double total = 0.0;
    for (const Step& s : steps)
        total += s.reward;
    return total;
}

EpisodeLog record_episode(const testbeds::CartPoleParams& system, const Policy& policy,
                          int horizon, double tick, Rng& rng, std::optional<Vec4> start)
{
    if (horizon < 1)
        throw std::invalid_argument("record_episode: horizon must be >= 1");

    EpisodeLog log;
    log.tick_seconds = tick;
    log.steps.reserve(static_cast<std::size_t>(horizon));

    Vec4 state;
    if (start) {
        state = *start;
    } else {
        for (int i = 0; i < 4; ++i)
            state[i] = rng.uniform(-0.05, 0.05);
    }

    for (int t = 0; t < horizon; ++t) {
        const double action = policy(state, t, rng);
        const Vec4 next = testbeds::cartpole_step(state, action, tick, system);
        log.steps.push_back({state, action, testbeds::cartpole_reward(next)});
        state = next;
        if (testbeds::cartpole_failed(state, system))
            break;
    }
    log.final_state = state;
    return log;
}

namespace {

struct TransitionSet {
    Mat inputs;  // m x 5
    Mat targets; // m x 4, per-dimension delta
};

TransitionSet gather_transitions(const std::vector<EpisodeLog>& logs)
{
    std::size_t total = 0;
    for (const EpisodeLog& log : logs)
        total += log.steps.size();
    if (total == 0)
        throw EmptyData("fit_dynamics: no transitions");

    TransitionSet set;
    set.inputs = Mat(static_cast<int>(total), 5);
    set.targets = Mat(static_cast<int>(total), 4);
    int row = 0;
    for (const EpisodeLog& log : logs) {
        for (std::size_t t = 0; t < log.steps.size(); ++t) {
            const Step& step = log.steps[t];
            const Vec4& next = t + 1 < log.steps.size() ? log.steps[t + 1].state : log.final_state;
            set.inputs.row(row).head<4>() = step.state;
            set.inputs(row, 4) = step.action;
            set.targets.row(row) = (next - step.state).transpose();
            ++row;
        }
    }
    return set;
}

/// Uniform seeded subsample of row indices, kept in ascending order.
std::vector<int> subsample_rows(int total, int keep, Rng& rng)
{
    std::vector<int> idx(static_cast<std::size_t>(total));
    for (int i = 0; i < total; ++i)
        idx[static_cast<std::size_t>(i)] = i;
    for (int i = 0; i < keep; ++i) {
        const auto j = i + static_cast<int>(rng.uniform_index(static_cast<std::size_t>(total - i)));
        std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
    }
    idx.resize(static_cast<std::size_t>(keep));
    std::sort(idx.begin(), idx.end());
    return idx;
}

} // namespace

DynamicsModel fit_dynamics(const std::vector<EpisodeLog>& logs, const DynamicsConfig& config,
                           std::uint64_t seed)
{
    TransitionSet set = gather_transitions(logs);
    const int total = static_cast<int>(set.inputs.rows());

    if (total > config.max_points) {
        Rng rng(seed);
        const auto rows = subsample_rows(total, config.max_points, rng);
        Mat inputs(config.max_points, 5);
        Mat targets(config.max_points, 4);
        for (int i = 0; i < config.max_points; ++i) {
            inputs.row(i) = set.inputs.row(rows[static_cast<std::size_t>(i)]);
            targets.row(i) = set.targets.row(rows[static_cast<std::size_t>(i)]);
        }
        set.inputs = std::move(inputs);
        set.targets = std::move(targets);
    }

    const int m = static_cast<int>(set.inputs.rows());

    // Shared ARD length scales from the input spread.
    Vec length_scales(5);
    for (int j = 0; j < 5; ++j) {
        const double mean = set.inputs.col(j).mean();
        const double var = (set.inputs.col(j).array() - mean).square().sum() / std::max(1, m - 1);
        length_scales[j] = std::max(config.length_scale_factor * std::sqrt(var),
                                    config.min_length_scale);
    }

    DynamicsModel model;
    model.train_inputs = set.inputs;
    for (int out = 0; out < 4; ++out) {
        const Vec target = set.targets.col(out);
        const double mean = target.mean();
        const double var = (target.array() - mean).square().sum() / std::max(1, m - 1);
        gp::KernelSpec kernel;
        kernel.type = gp::KernelType::SquaredExponential;
        kernel.signal_variance = std::max(var, config.min_signal_variance);
        kernel.length_scales = length_scales;
        model.output_gp[static_cast<std::size_t>(out)] = gp::gp_fit(
            std::move(kernel), config.noise_variance, nullptr, set.inputs, target);
    }
    return model;
}

Vec4 DynamicsModel::predict_delta(const Vec4& state, double action) const
{
    Vec x(5);
    x.head<4>() = state;
    x[4] = action;
    Vec4 delta;
    for (int out = 0; out < 4; ++out)
        delta[out] = gp::gp_predict(output_gp[static_cast<std::size_t>(out)], x).mean;
    return delta;
}

Mat DynamicsModel::predict_delta_mean(const Mat& states, const Vec& actions) const
{
    const int s = static_cast<int>(states.rows());
    const int m = train_size();
    const Vec& ls = output_gp[0].kernel.length_scales;

    Mat queries(s, 5);
    queries.leftCols<4>() = states;
    queries.col(4) = actions;

    // Shared scaled squared distances, then exp(-d/2) once; the four
    // outputs differ only in signal variance and weights.
    Mat scaled_q = queries.array().rowwise() / ls.transpose().array();
    Mat scaled_u = train_inputs.array().rowwise() / ls.transpose().array();
    Vec q_norm = scaled_q.rowwise().squaredNorm();
    Vec u_norm = scaled_u.rowwise().squaredNorm();
    Mat d2 = -2.0 * (scaled_q * scaled_u.transpose());
    d2.colwise() += q_norm;
    d2.rowwise() += u_norm.transpose();
    const Mat corr = (-0.5 * d2.cwiseMax(0.0).array()).exp();

    Mat deltas(s, 4);
    for (int out = 0; out < 4; ++out) {
        const auto& gp_out = output_gp[static_cast<std::size_t>(out)];
        deltas.col(out) = gp_out.kernel.signal_variance * (corr * gp_out.alpha);
    }
    return deltas;
}

Vec4 DynamicsModel::predict_next(const Vec4& state, double action) const
{
    return state + predict_delta(state, action);
}

double shoot_plan(const BatchStepper& stepper, const Vec4& state, const PlanConfig& config,
                  Rng& rng)
{
    if (config.samples < 1 || config.horizon < 1)
        throw std::invalid_argument("shoot_plan: samples and horizon must be >= 1");

    // All randomness is drawn up front so threading cannot change it.
    Mat actions(config.samples, config.horizon);
    for (int s = 0; s < config.samples; ++s)
        for (int h = 0; h < config.horizon; ++h)
            actions(s, h) = rng.uniform(config.action_min, config.action_max);

    Vec returns = Vec::Zero(config.samples);
    const int chunks = config.threads <= 1 ? 1 : config.threads;
    const int chunk_size = (config.samples + chunks - 1) / chunks;

    indexed_parallel_for(static_cast<std::size_t>(chunks), config.threads, [&](std::size_t c) {
        const int begin = static_cast<int>(c) * chunk_size;
        const int end = std::min(config.samples, begin + chunk_size);
        if (begin >= end)
            return;
        const int rows = end - begin;
        Mat states(rows, 4);
        states.rowwise() = state.transpose();
        for (int h = 0; h < config.horizon; ++h) {
            const Vec step_actions = actions.block(begin, h, rows, 1);
            stepper(states, step_actions);
            returns.segment(begin, rows).array() += states.col(2).array().cos();
        }
    });

    int best = 0;
    for (int s = 1; s < config.samples; ++s)
        if (returns[s] > returns[best])
            best = s;
    return actions(best, 0);
}

double shoot_plan(const DynamicsModel& model, const Vec4& state, const PlanConfig& config,
                  Rng& rng)
{
    BatchStepper stepper = [&model](Mat& states, const Vec& step_actions) {
        states += model.predict_delta_mean(states, step_actions);
    };
    return shoot_plan(stepper, state, config, rng);
}

BatchStepper simulator_stepper(const testbeds::CartPoleParams& system, double dt)
{
    return [system, dt](Mat& states, const Vec& actions) {
        for (int i = 0; i < states.rows(); ++i) {
            const Vec4 next = testbeds::cartpole_step(states.row(i).transpose(), actions[i], dt,
                                                      system);
            states.row(i) = next.transpose();
        }
    };
}

SuccessCriterion balance_criterion(const testbeds::CartPoleParams& system, int steps)
{
    return [system, steps](const EpisodeLog& log) {
        if (static_cast<int>(log.steps.size()) < steps)
            return false;
        for (const Step& s : log.steps)
            if (testbeds::cartpole_failed(s.state, system))
                return false;
        return !testbeds::cartpole_failed(log.final_state, system);
    };
}

LoopResult episode_loop(const testbeds::CartPoleParams& system, const LoopConfig& config,
                        const SuccessCriterion& success, std::uint64_t seed)
{
    if (config.max_episodes < 1)
        throw std::invalid_argument("episode_loop: max_episodes must be >= 1");

    LoopResult result;
    Policy random_policy = [&system](const Vec4&, int, Rng& rng) {
        return rng.uniform(system.force_min, system.force_max);
    };

    for (int ep = 0; ep < config.max_episodes; ++ep) {
        Rng rng(seed_split(seed, static_cast<std::uint64_t>(ep)));
        EpisodeLog log;
        if (result.logs.empty()) {
            // Bootstrap: no model to plan with yet.
            log = record_episode(system, random_policy, config.horizon, config.tick, rng);
        } else {
            const DynamicsModel model = fit_dynamics(result.logs, config.dynamics,
                                                     seed_split(seed, 1000 + static_cast<std::uint64_t>(ep)));
            Policy mpc = [&model, &config](const Vec4& state, int, Rng& policy_rng) {
                return shoot_plan(model, state, config.plan, policy_rng);
            };
            log = record_episode(system, mpc, config.horizon, config.tick, rng);
        }
        result.logs.push_back(std::move(log));
        result.episodes_used = ep + 1;
        if (success(result.logs.back())) {
            result.success = true;
            break;
        }
    }
    return result;
}

} // namespace microdata::episode
