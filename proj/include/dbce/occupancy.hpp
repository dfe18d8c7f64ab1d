#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "dbce/linalg.hpp"
#include "dbce/markov_game.hpp"

namespace dbce {

/// BF residual bound for occupancies obtained by direct solve.
inline constexpr double kBfExactTol = 1e-8;
/// BF residual threshold past which an LP-produced occupancy is suspect.
inline constexpr double kBfWarnTol = 1e-4;

/// Discounted state/joint-action visitation mass. Total mass of a feasible
/// occupancy is 1/(1-gamma).
struct OccupancyMeasure {
    int num_states = 0;
    int num_joint_actions = 0;
    std::vector<double> values;

    static OccupancyMeasure zeros(const MarkovGame& game) {
        OccupancyMeasure f;
        f.num_states = game.num_states();
        f.num_joint_actions = game.num_joint_actions();
        f.values.assign(static_cast<std::size_t>(f.num_states) * f.num_joint_actions, 0.0);
        return f;
    }

    double at(int s, int ja) const { return values[static_cast<std::size_t>(s) * num_joint_actions + ja]; }
    double& at(int s, int ja) { return values[static_cast<std::size_t>(s) * num_joint_actions + ja]; }

    double total_mass() const {
        double sum = 0.0;
        for (double v : values) sum += v;
        return sum;
    }

    /// Density of a state: mass summed over joint actions.
    double state_density(int s) const {
        double sum = 0.0;
        for (int ja = 0; ja < num_joint_actions; ++ja) sum += at(s, ja);
        return sum;
    }
};

/// Per-state Bellman-flow residual of f:
///   BFError(s) = sum_a f(s,a) - eta(s) - gamma * sum_{s',a} P(s|s',a) f(s',a)
/// Zero everywhere (plus nonnegativity) characterizes occupancy measures.
inline std::vector<double> bellman_flow_error(const MarkovGame& game, const OccupancyMeasure& f) {
    const int S = game.num_states();
    const int JA = game.num_joint_actions();
    if (f.num_states != S || f.num_joint_actions != JA)
        throw std::invalid_argument("occupancy shape does not match game");

    std::vector<double> residual(S);
    for (int s = 0; s < S; ++s) residual[s] = f.state_density(s) - game.initial_dist[s];
    for (int sp = 0; sp < S; ++sp)
        for (int ja = 0; ja < JA; ++ja) {
            const double mass = f.at(sp, ja);
            if (mass == 0.0) continue;
            for (int s = 0; s < S; ++s) residual[s] -= game.gamma * game.prob(sp, ja, s) * mass;
        }
    return residual;
}

/// Occupancy measure of a policy by direct linear solve. The state densities
/// d solve (I - gamma K^T) d = eta with K the policy-induced state kernel,
/// and f(s,a) = pi(s,a) d(s).
inline OccupancyMeasure exact_occupancy(const MarkovGame& game, const JointPolicy& policy) {
    check_policy(game, policy);
    const int S = game.num_states();
    const int JA = game.num_joint_actions();

    // a[s][s'] = delta(s,s') - gamma * K(s', s), K(s',s) = sum_a pi(s',a) P(s|s',a)
    std::vector<double> a(static_cast<std::size_t>(S) * S, 0.0);
    for (int s = 0; s < S; ++s) a[static_cast<std::size_t>(s) * S + s] = 1.0;
    for (int sp = 0; sp < S; ++sp)
        for (int ja = 0; ja < JA; ++ja) {
            const double p = policy.at(sp, ja);
            if (p == 0.0) continue;
            for (int s = 0; s < S; ++s)
                a[static_cast<std::size_t>(s) * S + sp] -= game.gamma * p * game.prob(sp, ja, s);
        }

    const std::vector<double> density = solve_dense(std::move(a), game.initial_dist);

    OccupancyMeasure f = OccupancyMeasure::zeros(game);
    for (int s = 0; s < S; ++s)
        for (int ja = 0; ja < JA; ++ja) f.at(s, ja) = policy.at(s, ja) * density[s];

    for (double r : bellman_flow_error(game, f))
        if (std::fabs(r) > 1e-6)
            throw std::runtime_error("exact_occupancy: linear solve left a Bellman-flow residual above 1e-6");
    return f;
}

/// Policy carried by an occupancy measure: pi(s,a) = f(s,a) / sum_a' f(s,a').
/// States with no mass (row sum <= 1e-9) get the uniform row; any occupancy
/// is consistent with them and uniform keeps the map deterministic.
inline JointPolicy policy_from_occupancy(const OccupancyMeasure& f) {
    JointPolicy pi;
    pi.num_states = f.num_states;
    pi.num_joint_actions = f.num_joint_actions;
    pi.probs.assign(f.values.size(), 0.0);

    for (int s = 0; s < f.num_states; ++s) {
        double row_sum = 0.0;
        for (int ja = 0; ja < f.num_joint_actions; ++ja) {
            const double v = f.at(s, ja);
            if (v < -1e-9)
                throw std::invalid_argument("policy_from_occupancy: negative occupancy entry");
            row_sum += std::max(v, 0.0);
        }
        if (row_sum <= 1e-9) {
            for (int ja = 0; ja < f.num_joint_actions; ++ja) pi.at(s, ja) = 1.0 / f.num_joint_actions;
        } else {
            for (int ja = 0; ja < f.num_joint_actions; ++ja) pi.at(s, ja) = std::max(f.at(s, ja), 0.0) / row_sum;
        }
    }
    return pi;
}

}  // namespace dbce
