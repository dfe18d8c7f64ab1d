#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "linalg.hpp"
#include "markov_game.hpp"
#include "random.hpp"
#include "stage_lp.hpp"
#include "trajectory.hpp"

namespace dbce {

enum class EvalMode { Exact, Sampled };

inline const char* to_string(EvalMode mode) {
    return mode == EvalMode::Exact ? "exact" : "sampled";
}

struct DbcpiConfig {
    int iterations = 250;
    EvalMode eval_mode = EvalMode::Exact;
    double alpha_start = 0.3;
    double alpha_end = 0.001;
    // Per-inner-step multiplicative decay. γ=0.99 means a value-error
    // contraction of only (1 − α·0.01) per sweep, so the schedule must keep
    // Σα large: this rate leaves roughly Σα ≈ 1.9e4 over the 2e5-step cap
    // (α ≈ 0.015 at the cap), where a faster decay starves the later sweeps
    // and freezes a percent-level bias into Q.
    double alpha_decay = 0.999985;
    double inner_convergence_epsilon = 1e-4;
    long inner_max_steps = 200000;
    std::uint64_t seed = 0;
};

/// Q^π per agent by direct linear solve: V_i = (I − γK_π)⁻¹ r̄_i with
/// K_π(s,s′) = Σ_a⃗ π(s,a⃗) P(s′|s,a⃗), then one Bellman backup per (s,a⃗).
inline QTables evaluate_policy_exact(const MarkovGame& game, const JointPolicy& policy) {
    const int ns = game.num_states();
    const int nja = game.num_joint_actions();
    std::vector<double> system(static_cast<std::size_t>(ns) * ns, 0.0);
    for (int s = 0; s < ns; ++s) {
        for (int sp = 0; sp < ns; ++sp) {
            double k = 0.0;
            for (int ja = 0; ja < nja; ++ja) k += policy.at(s, ja) * game.prob(s, ja, sp);
            system[static_cast<std::size_t>(s) * ns + sp] = (s == sp ? 1.0 : 0.0) - game.gamma * k;
        }
    }

    QTables q = QTables::zeros(game);
    for (int i = 0; i < game.num_agents; ++i) {
        std::vector<double> mean_reward(ns, 0.0);
        for (int s = 0; s < ns; ++s)
            for (int ja = 0; ja < nja; ++ja)
                mean_reward[s] += policy.at(s, ja) * game.rewards[i][game.sa_index(s, ja)];

        const std::vector<double> v = solve_dense(system, mean_reward);
        double residual = 0.0;
        for (int s = 0; s < ns; ++s) {
            double lhs = 0.0;
            for (int sp = 0; sp < ns; ++sp) lhs += system[static_cast<std::size_t>(s) * ns + sp] * v[sp];
            residual = std::max(residual, std::fabs(lhs - mean_reward[s]));
        }
        if (residual > 1e-10)
            throw std::runtime_error("policy evaluation residual " + std::to_string(residual));

        for (int s = 0; s < ns; ++s)
            for (int ja = 0; ja < nja; ++ja) {
                double backup = game.rewards[i][game.sa_index(s, ja)];
                for (int sp = 0; sp < ns; ++sp) backup += game.gamma * game.prob(s, ja, sp) * v[sp];
                q.at(i, s, ja) = backup;
            }
    }
    return q;
}

struct TdOutcome {
    bool converged = false;
    long steps = 0;
    double alpha_final = 0.0;
};

namespace detail {
inline constexpr int kTdWindow = 500;
}

/// Temporal-difference evaluation: cyclic exploring starts sweep every
/// (s, a⃗) pair, each visit samples (r⃗, s′) and applies
/// Q_i(s,a⃗) ← (1−α)Q_i(s,a⃗) + α(r_i + γ V_i(s′)) with V_i(s′) the
/// π-average of Q_i(s′,·). α decays multiplicatively per step, clamped at
/// alpha_end, and is threaded through `alpha` so an outer loop can continue
/// one global schedule. Stops when the max |ΔQ| over a 500-step window
/// drops below epsilon, or at inner_max_steps (outcome.converged = false).
inline QTables evaluate_policy_td(const MarkovGame& game, const JointPolicy& policy,
                                  QTables q_init, const DbcpiConfig& cfg, std::mt19937_64& rng,
                                  double& alpha, TdOutcome* outcome = nullptr) {
    const int ns = game.num_states();
    const int nja = game.num_joint_actions();
    QTables q = std::move(q_init);
    std::vector<double> value(game.num_agents);

    TdOutcome out;
    double window_max = 0.0;
    int window_fill = 0;
    int cursor = 0;  // cyclic index over (s, a⃗) pairs
    const int num_pairs = ns * nja;
    std::vector<double> rewards;

    while (out.steps < cfg.inner_max_steps) {
        const int s = cursor / nja;
        const int ja = cursor % nja;
        cursor = (cursor + 1) % num_pairs;

        sample_rewards_into(game, s, ja, rng, rewards);
        const int sp = sample_next_state(game, s, ja, rng);
        for (int i = 0; i < game.num_agents; ++i) {
            double v = 0.0;
            for (int jap = 0; jap < nja; ++jap) v += policy.at(sp, jap) * q.at(i, sp, jap);
            value[i] = rewards[i] + game.gamma * v;
        }
        double delta = 0.0;
        for (int i = 0; i < game.num_agents; ++i) {
            const double old = q.at(i, s, ja);
            const double updated = (1.0 - alpha) * old + alpha * value[i];
            q.at(i, s, ja) = updated;
            delta = std::max(delta, std::fabs(updated - old));
        }

        alpha = std::max(cfg.alpha_end, alpha * cfg.alpha_decay);
        ++out.steps;
        window_max = std::max(window_max, delta);
        if (++window_fill == detail::kTdWindow) {
            if (window_max < cfg.inner_convergence_epsilon) {
                out.converged = true;
                break;
            }
            window_max = 0.0;
            window_fill = 0;
        }
    }
    out.alpha_final = alpha;
    if (outcome) *outcome = out;
    return q;
}

inline QTables evaluate_policy_td(const MarkovGame& game, const JointPolicy& policy,
                                  QTables q_init, const DbcpiConfig& cfg, std::uint64_t seed,
                                  TdOutcome* outcome = nullptr) {
    std::mt19937_64 rng(derive_seed(seed, 0x7d));
    double alpha = cfg.alpha_start;
    return evaluate_policy_td(game, policy, std::move(q_init), cfg, rng, alpha, outcome);
}

}  // namespace dbce
