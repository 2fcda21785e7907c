#include "microdata/testbeds.hpp"

#include <cmath>

namespace microdata::testbeds {

namespace {
constexpr double k_pi = 3.14159265358979323846;
}

GaitParams GaitParams::from_vector(const Vec& p)
{
    if (p.size() != gait_param_dim)
        throw DimensionMismatch("gait params must have 18 components");
    GaitParams g;
    for (int leg = 0; leg < gait_legs; ++leg) {
        g.amplitude[leg] = p[3 * leg + 0];
        g.phase[leg] = p[3 * leg + 1];
        g.duty[leg] = p[3 * leg + 2];
    }
    return g;
}

Vec GaitParams::to_vector() const
{
    Vec p(gait_param_dim);
    for (int leg = 0; leg < gait_legs; ++leg) {
        p[3 * leg + 0] = amplitude[leg];
        p[3 * leg + 1] = phase[leg];
        p[3 * leg + 2] = duty[leg];
    }
    return p;
}

DamageCondition intact_condition()
{
    return DamageCondition{};
}

std::vector<DamageCondition> damage_table()
{
    std::vector<DamageCondition> table(5);
    table[0].id = "D1";
    table[0].leg_weight[0] = 0.0; // leg 1 disabled
    table[1].id = "D2";
    table[1].leg_weight[3] = 0.0; // leg 4 disabled
    table[2].id = "D3";
    table[2].leg_weight[0] = 0.0; // legs 1 and 4 disabled
    table[2].leg_weight[3] = 0.0;
    table[3].id = "D4";
    table[3].leg_weight[1] = 0.5; // leg 2 weakened
    table[4].id = "D5";
    table[4].leg_weight[2] = 0.5; // leg 3 weakened with its joint stuck
    table[4].phase_override[2] = 0.0;
    return table;
}

DamageCondition damage_by_id(const std::string& id)
{
    if (id == "intact")
        return intact_condition();
    for (auto& condition : damage_table())
        if (condition.id == id)
            return condition;
    throw std::invalid_argument("unknown damage condition: '" + id + "'");
}

GaitEval gait_proxy_eval(const Vec& params, const DamageCondition& damage)
{
    if (!all_finite(params))
        throw NonFiniteInput("gait_proxy_eval: non-finite parameters");
    GaitParams gait = GaitParams::from_vector(params);

    // Descriptor: commanded per-leg thrust, independent of damage.
    Vec descriptor(gait_legs);
    for (int leg = 0; leg < gait_legs; ++leg)
        descriptor[leg] = gait.amplitude[leg] * std::sin(k_pi * gait.duty[leg]);

    // Damage rewrites the executed gait: stuck joints override the phase.
    GaitParams executed = gait;
    for (int leg = 0; leg < gait_legs; ++leg)
        if (damage.phase_override[leg])
            executed.phase[leg] = *damage.phase_override[leg];

    double coordination = 0.0;
    for (int pair = 0; pair < 3; ++pair)
        coordination += -std::cos(2.0 * k_pi * (executed.phase[pair] - executed.phase[pair + 3]));
    coordination /= 3.0;

    double net_thrust = 0.0;
    for (int leg = 0; leg < gait_legs; ++leg)
        net_thrust += descriptor[leg] * (2.0 * damage.leg_weight[leg] - 1.0);
    net_thrust /= static_cast<double>(gait_legs);

    GaitEval out;
    out.descriptor = descriptor;
    out.fitness = 0.5 * (1.0 + coordination) * net_thrust;
    return out;
}

std::function<double(const Vec&)> gait_fitness_under(const DamageCondition& damage)
{
    return [damage](const Vec& params) { return gait_proxy_eval(params, damage).fitness; };
}

Eigen::Vector2d arm_forward(const Vec& joint_angles, const Vec& link_lengths)
{
    if (joint_angles.size() != link_lengths.size() || joint_angles.size() == 0)
        throw DimensionMismatch("arm_forward: angles/lengths mismatch or empty");
    double angle = 0.0;
    Eigen::Vector2d tip(0.0, 0.0);
    for (int i = 0; i < joint_angles.size(); ++i) {
        angle += joint_angles[i];
        tip.x() += link_lengths[i] * std::cos(angle);
        tip.y() += link_lengths[i] * std::sin(angle);
    }
    return tip;
}

double arm_task_eval(const Vec& joint_angles, const Vec& link_lengths,
                     const Eigen::Vector2d& target)
{
    return -(arm_forward(joint_angles, link_lengths) - target).norm();
}

Vec4 cartpole_step(const Vec4& state, double force, double dt, const CartPoleParams& params)
{
    const double f = std::min(std::max(force, params.force_min), params.force_max);
    const double x_dot = state[1];
    const double theta = state[2];
    const double theta_dot = state[3];

    const double total_mass = params.cart_mass + params.pole_mass;
    const double pole_ml = params.pole_mass * params.half_length;
    const double sin_t = std::sin(theta);
    const double cos_t = std::cos(theta);

    const double temp = (f + pole_ml * theta_dot * theta_dot * sin_t) / total_mass;
    const double theta_acc = (params.gravity * sin_t - cos_t * temp)
        / (params.half_length * (4.0 / 3.0 - params.pole_mass * cos_t * cos_t / total_mass));
    const double x_acc = temp - pole_ml * theta_acc * cos_t / total_mass;

    Vec4 next;
    next[0] = state[0] + dt * x_dot;
    next[1] = x_dot + dt * x_acc;
    next[2] = theta + dt * theta_dot;
    next[3] = theta_dot + dt * theta_acc;
    return next;
}

bool cartpole_failed(const Vec4& state, const CartPoleParams& params)
{
    return std::abs(state[2]) > params.theta_limit || std::abs(state[0]) > params.x_limit;
}

namespace {

double sphere(const Vec& x)
{
    return -(x.array() - 0.5).square().sum();
}

double rastrigin2(const Vec& x)
{
    // Unit square mapped to [-5.12, 5.12]^2; maximized, optimum 0 at center.
    double value = 0.0;
    for (int i = 0; i < x.size(); ++i) {
        const double z = (x[i] - 0.5) * 10.24;
        value += z * z - 10.0 * std::cos(2.0 * k_pi * z) + 10.0;
    }
    return -value;
}

} // namespace

std::function<double(const Vec&)> synthetic_suite(const std::string& name)
{
    const int dim = synthetic_dim(name);
    if (name == "sphere15" || name == "sphere2")
        return [dim](const Vec& x) {
            if (x.size() != dim)
                throw DimensionMismatch("synthetic objective: wrong dimension");
            return sphere(x);
        };
    return [dim](const Vec& x) {
        if (x.size() != dim)
            throw DimensionMismatch("synthetic objective: wrong dimension");
        return rastrigin2(x);
    };
}

int synthetic_dim(const std::string& name)
{
    if (name == "sphere15")
        return 15;
    if (name == "sphere2")
        return 2;
    if (name == "rastrigin2")
        return 2;
    throw std::invalid_argument("unknown objective: '" + name + "'");
}

} // namespace microdata::testbeds
