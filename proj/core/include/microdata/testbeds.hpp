#pragma once

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "microdata/errors.hpp"
#include "microdata/types.hpp"

namespace microdata::testbeds {

// ---------------------------------------------------------------------------
// Hexapod gait proxy
// ---------------------------------------------------------------------------

inline constexpr int gait_legs = 6;
inline constexpr int gait_param_dim = 3 * gait_legs; // amplitude, phase, duty per leg
inline constexpr int gait_descriptor_dim = gait_legs;

/// Open-loop gait genotype; all components live in [0, 1]. Packed into a
/// parameter vector as (a_0, phi_0, d_0, a_1, phi_1, d_1, ...).
struct GaitParams {
    std::array<double, gait_legs> amplitude{};
    std::array<double, gait_legs> phase{};
    std::array<double, gait_legs> duty{};

    static GaitParams from_vector(const Vec& p);
    Vec to_vector() const;
};

/// Scripted damage: per-leg effectiveness weight plus optional stuck-phase
/// overrides. The learner never sees this struct, only fitness values.
struct DamageCondition {
    std::string id = "intact";
    std::array<double, gait_legs> leg_weight{1.0, 1.0, 1.0, 1.0, 1.0, 1.0};
    std::array<std::optional<double>, gait_legs> phase_override{};
};

DamageCondition intact_condition();

/// The five scripted damage conditions D1..D5.
std::vector<DamageCondition> damage_table();

DamageCondition damage_by_id(const std::string& id); // accepts "intact" and "D1".."D5"

struct GaitEval {
    double fitness = 0.0; // in [-1, 1]
    Vec descriptor;       // per-leg thrust, in [0, 1]^6, damage-independent
};

/// Analytic proxy for the walking simulator. Thrust tau_i = a_i sin(pi d_i);
/// coordination c = (1/3) sum_{i=0..2} -cos(2 pi (phi_i - phi_{i+3}));
/// fitness = ((1 + c) / 2) * (1/6) sum_i tau_i (2 w_i - 1), where disabled
/// legs (w_i = 0) drag instead of pushing. Descriptors are computed from the
/// commanded parameters, independent of damage.
GaitEval gait_proxy_eval(const Vec& params, const DamageCondition& damage);

/// Damaged-fitness evaluator with a fixed condition (for adaptation loops).
std::function<double(const Vec&)> gait_fitness_under(const DamageCondition& damage);

// ---------------------------------------------------------------------------
// Planar reaching arm
// ---------------------------------------------------------------------------

/// Cumulative-angle planar forward kinematics; returns the end effector.
Eigen::Vector2d arm_forward(const Vec& joint_angles, const Vec& link_lengths);

/// Negative Euclidean distance from the end effector to the target.
double arm_task_eval(const Vec& joint_angles, const Vec& link_lengths,
                     const Eigen::Vector2d& target);

// ---------------------------------------------------------------------------
// Cart-pole
// ---------------------------------------------------------------------------

struct CartPoleParams {
    double cart_mass = 1.0;     // kg
    double pole_mass = 0.1;     // kg
    double half_length = 0.5;   // m
    double gravity = 9.8;       // m/s^2
    double force_min = -10.0;   // N
    double force_max = 10.0;    // N
    double dt = 0.01;           // s, the 10 ms recording tick
    double theta_limit = 0.21;  // rad; beyond this the episode has failed
    double x_limit = 2.4;       // m
};

/// One explicit-Euler step; positions advance with pre-update velocities.
/// The force is clamped to the actuator range. State is (x, xdot, theta,
/// thetadot) with theta measured from upright.
Vec4 cartpole_step(const Vec4& state, double force, double dt,
                   const CartPoleParams& params = {});

bool cartpole_failed(const Vec4& state, const CartPoleParams& params = {});

inline double cartpole_reward(const Vec4& state) { return std::cos(state[2]); }

// ---------------------------------------------------------------------------
// Synthetic objectives
// ---------------------------------------------------------------------------

/// Named benchmark objectives on [0,1]^d, all maximized with optimum 0 at
/// the box center: sphere15, sphere2, rastrigin2.
std::function<double(const Vec&)> synthetic_suite(const std::string& name);

int synthetic_dim(const std::string& name);

} // namespace microdata::testbeds
