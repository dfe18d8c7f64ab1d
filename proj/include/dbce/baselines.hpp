#pragma once

#include <optional>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "dbcpi.hpp"

namespace dbce {

/// Copy of the game with the constant p < 0 added to every agent's reward
/// at every joint action of the states in s_star (indices).
inline MarkovGame reward_modified_game(const MarkovGame& game, const std::vector<int>& s_star,
                                       double p) {
    if (p >= 0.0) throw std::invalid_argument("reward modification requires p < 0");
    MarkovGame modified = game;
    const int nja = game.num_joint_actions();
    for (int s : s_star) {
        if (s < 0 || s >= game.num_states())
            throw std::invalid_argument("reward_modified_game: state index out of range");
        for (int i = 0; i < game.num_agents; ++i)
            for (int ja = 0; ja < nja; ++ja) modified.rewards[i][game.sa_index(s, ja)] += p;
        if (!modified.reward_mixtures.empty())
            for (int ja = 0; ja < nja; ++ja)
                for (auto& outcome : modified.reward_mixtures[game.sa_index(s, ja)])
                    for (double& r : outcome.rewards) r += p;
    }
    return modified;
}

/// Minimal decimal rendering for method ids ("cm-0.05", "rm-1.5").
inline std::string format_bound(double value) {
    std::ostringstream out;
    out << value;
    return out.str();
}

/// Utilitarian CE-Q iteration: the DBCPI loop with the stage objective
/// replaced by maximizing the occupancy-weighted sum of all agents' Q, plus
/// an optional density cap (CM-b). `metric` selects the φ′ reported as
/// Error/trace; it defaults to the cap's objective when present.
inline RunResult run_ce_q(const MarkovGame& game, const DbcpiConfig& cfg,
                          std::optional<DensityCap> cap = std::nullopt,
                          std::optional<DensityObjective> metric = std::nullopt) {
    if (!metric) {
        if (cap)
            metric = cap->objective;
        else
            metric = DensityObjective::min_density(std::vector<double>(game.num_states(), 0.0));
    }
    auto result = detail::policy_iteration_loop(game, StageSolveOptions::utilitarian(cap), *metric, cfg);
    result.method_id = cap ? "cm-" + format_bound(cap->bound) : "ceq";
    return result;
}

/// RM-p baseline: run CE-Q on the reward-modified game and report, next to
/// the modified-game regret, how far the found policy is from the CE set of
/// the ORIGINAL game (exact evaluation of its Q on unmodified rewards).
inline RunResult run_rm(const MarkovGame& game, const std::vector<int>& s_star, double p,
                        const DensityObjective& metric, const DbcpiConfig& cfg) {
    const MarkovGame modified = reward_modified_game(game, s_star, p);
    RunResult result = run_ce_q(modified, cfg, std::nullopt, metric);
    const QTables q_original = evaluate_policy_exact(game, result.policy);
    result.max_reg_original = stage_regret(game, result.occupancy, q_original).max_regret;
    result.method_id = "rm-" + format_bound(-p);
    return result;
}

}  // namespace dbce
