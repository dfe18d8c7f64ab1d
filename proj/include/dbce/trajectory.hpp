#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "dbce/markov_game.hpp"
#include "dbce/random.hpp"

namespace dbce {

struct TrajectoryStep {
    int state = 0;
    int joint_action = 0;
    std::vector<double> rewards;
};

struct Trajectory {
    std::vector<TrajectoryStep> steps;
    std::uint64_t seed = 0;
};

/// Samples the rewards of one transition into a caller-owned buffer:
/// mixture draw when the game is stochastic, the expectation table
/// otherwise. Allocation-free so the TD inner loop can run hot.
inline void sample_rewards_into(const MarkovGame& game, int s, int ja, std::mt19937_64& rng,
                                std::vector<double>& out) {
    out.resize(game.num_agents);
    if (game.has_stochastic_rewards()) {
        const auto& mix = game.reward_mixtures[game.sa_index(s, ja)];
        if (!mix.empty()) {
            double u = uniform01(rng);
            const RewardOutcome* picked = &mix.back();
            for (const auto& outcome : mix) {
                u -= outcome.prob;
                if (u < 0.0) {
                    picked = &outcome;
                    break;
                }
            }
            for (int i = 0; i < game.num_agents; ++i) out[i] = picked->rewards[i];
            return;
        }
    }
    for (int i = 0; i < game.num_agents; ++i) out[i] = game.rewards[i][game.sa_index(s, ja)];
}

inline std::vector<double> sample_rewards(const MarkovGame& game, int s, int ja, std::mt19937_64& rng) {
    std::vector<double> rewards;
    sample_rewards_into(game, s, ja, rng, rewards);
    return rewards;
}

inline int sample_state(const MarkovGame& game, const std::vector<double>& dist, std::mt19937_64& rng) {
    double u = uniform01(rng);
    int last = 0;
    for (int s = 0; s < game.num_states(); ++s) {
        if (dist[s] <= 0.0) continue;
        last = s;
        u -= dist[s];
        if (u < 0.0) return s;
    }
    return last;
}

/// Samples s' ~ P(.|s, ja) straight from the transition row.
inline int sample_next_state(const MarkovGame& game, int s, int ja, std::mt19937_64& rng) {
    const double* row = &game.transition[static_cast<std::size_t>(game.sa_index(s, ja)) * game.num_states()];
    double u = uniform01(rng);
    int last = 0;
    for (int sp = 0; sp < game.num_states(); ++sp) {
        if (row[sp] <= 0.0) continue;
        last = sp;
        u -= row[sp];
        if (u < 0.0) return sp;
    }
    return last;
}

inline int sample_joint_action(const MarkovGame& game, const JointPolicy& policy, int s,
                               std::mt19937_64& rng) {
    double u = uniform01(rng);
    int last = 0;
    for (int ja = 0; ja < game.num_joint_actions(); ++ja) {
        const double p = policy.at(s, ja);
        if (p <= 0.0) continue;
        last = ja;
        u -= p;
        if (u < 0.0) return ja;
    }
    return last;
}

/// Simulates `steps` transitions: s0 ~ eta, then a ~ pi(s), s' ~ P(.|s,a).
/// Deterministic given the seed.
inline Trajectory rollout(const MarkovGame& game, const JointPolicy& policy, int steps,
                          std::uint64_t seed) {
    if (steps < 1) throw std::invalid_argument("rollout: steps must be >= 1");
    check_policy(game, policy);

    std::mt19937_64 rng(seed);
    Trajectory traj;
    traj.seed = seed;
    traj.steps.reserve(steps);

    int s = sample_state(game, game.initial_dist, rng);
    for (int t = 0; t < steps; ++t) {
        const int ja = sample_joint_action(game, policy, s, rng);
        TrajectoryStep step;
        step.state = s;
        step.joint_action = ja;
        step.rewards = sample_rewards(game, s, ja, rng);
        traj.steps.push_back(std::move(step));

        s = sample_next_state(game, s, ja, rng);
    }
    return traj;
}

enum class RequirementKind { Safety, Frequency, Fairness };

/// Trajectory-level requirement over state subsets. Scores are built so
/// that 0 means the trajectory behaves as required.
struct RequirementSpec {
    RequirementKind kind = RequirementKind::Safety;
    std::vector<int> set_1;
    std::vector<int> set_2;       // Fairness only
    double proportion = 0.0;      // Frequency only
};

inline const char* to_string(RequirementKind kind) {
    switch (kind) {
        case RequirementKind::Safety: return "safety";
        case RequirementKind::Frequency: return "frequency";
        case RequirementKind::Fairness: return "fairness";
    }
    return "?";
}

namespace detail {
inline int count_visits(const Trajectory& traj, const std::vector<int>& states) {
    int count = 0;
    for (const auto& step : traj.steps)
        for (int s : states)
            if (step.state == s) {
                ++count;
                break;
            }
    return count;
}
}  // namespace detail

/// Safety: number of visits to the undesired set (perfect = 0).
/// Frequency: visit fraction minus the required proportion (signed).
/// Fairness: visit-count difference between the two sets (signed).
inline double requirement_score(const Trajectory& traj, const RequirementSpec& req) {
    switch (req.kind) {
        case RequirementKind::Safety:
            return static_cast<double>(detail::count_visits(traj, req.set_1));
        case RequirementKind::Frequency:
            return static_cast<double>(detail::count_visits(traj, req.set_1)) /
                       static_cast<double>(traj.steps.size()) -
                   req.proportion;
        case RequirementKind::Fairness:
            return static_cast<double>(detail::count_visits(traj, req.set_1)) -
                   static_cast<double>(detail::count_visits(traj, req.set_2));
    }
    throw std::logic_error("unreachable requirement kind");
}

}  // namespace dbce
