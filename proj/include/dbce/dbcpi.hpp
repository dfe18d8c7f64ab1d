#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "density.hpp"
#include "markov_game.hpp"
#include "occupancy.hpp"
#include "policy_eval.hpp"
#include "stage_lp.hpp"

namespace dbce {

struct RunResult {
    std::string game_id;
    std::string task_id;
    std::string method_id;
    std::uint64_t seed = 0;

    double error = 0.0;    // φ′(f) of the final occupancy
    double max_reg = 0.0;  // max stage regret of (f, Q_final)
    double max_bf = 0.0;   // max |BFError| of the final occupancy
    double max_reg_original = std::numeric_limits<double>::quiet_NaN();  // RM runs only

    std::vector<double> trace;  // φ′(f) per iteration
    JointPolicy policy;
    OccupancyMeasure occupancy;
    QTables q_final;
    double runtime_s = 0.0;
    int td_nonconverged = 0;  // inner loops that hit the step cap (Sampled mode)
    DbcpiConfig config;

    bool has_original_regret() const { return !std::isnan(max_reg_original); }
};

namespace detail {

/// Shared improvement/evaluation loop for DBCPI and the CE-Q baselines.
/// `metric` is the density objective recorded as the error trace; for DBCPI
/// it is also the LP objective inside `opts`.
inline RunResult policy_iteration_loop(const MarkovGame& game, const StageSolveOptions& opts,
                                       const DensityObjective& metric, const DbcpiConfig& cfg) {
    const auto started = std::chrono::steady_clock::now();
    if (cfg.iterations < 1) throw std::invalid_argument("iterations must be >= 1");
    if (!(cfg.alpha_start < 1.0 && cfg.alpha_start >= 0.0) || cfg.alpha_end > cfg.alpha_start)
        throw std::invalid_argument("alpha schedule must satisfy 0 <= alpha_end <= alpha_start < 1");

    RunResult result;
    result.seed = cfg.seed;
    result.config = cfg;
    result.trace.reserve(cfg.iterations);

    QTables q = QTables::zeros(game);
    std::mt19937_64 rng(derive_seed(cfg.seed, 0x7d));
    double alpha = cfg.alpha_start;
    OccupancyMeasure f;
    JointPolicy policy;
    OccupancyMeasure prev_f;
    QTables prev_q;

    for (int t = 0; t < cfg.iterations; ++t) {
        StageResult stage;
        try {
            stage = solve_stage_game(game, q, opts);
        } catch (const InfeasibleStage& e) {
            throw InfeasibleStage(std::string(e.what()) + " at iteration " + std::to_string(t),
                                  e.status);
        }
        f = std::move(stage.occupancy);
        policy = std::move(stage.policy);
        result.trace.push_back(density_error(f, metric, game.gamma));

        if (cfg.eval_mode == EvalMode::Exact) {
            prev_q = std::move(q);
            q = evaluate_policy_exact(game, policy);
            // Bitwise fixed point: the LP and the evaluator are deterministic
            // functions, so once (f, Q) repeats, every remaining iteration
            // would reproduce it exactly — fill the trace and stop.
            if (t > 0 && q.values == prev_q.values && f.values == prev_f.values) {
                result.trace.resize(cfg.iterations, result.trace.back());
                break;
            }
            prev_f = f;
        } else {
            TdOutcome outcome;
            q = evaluate_policy_td(game, policy, std::move(q), cfg, rng, alpha, &outcome);
            if (!outcome.converged) ++result.td_nonconverged;
        }
    }

    result.error = result.trace.back();
    result.max_reg = stage_regret(game, f, q).max_regret;
    double bf = 0.0;
    for (double e : bellman_flow_error(game, f)) bf = std::max(bf, std::fabs(e));
    result.max_bf = bf;
    result.policy = std::move(policy);
    result.occupancy = std::move(f);
    result.q_final = std::move(q);
    result.runtime_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

}  // namespace detail

/// Density-Based Correlated Policy Iteration: K rounds of stage-LP policy
/// improvement against the current Q followed by policy evaluation.
inline RunResult dbcpi_run(const MarkovGame& game, const DensityObjective& objective,
                           const DbcpiConfig& cfg = {}) {
    auto result = detail::policy_iteration_loop(game, StageSolveOptions::for_density(objective),
                                                objective, cfg);
    result.method_id = "dbce";
    return result;
}

struct GlobalOptimumReport {
    bool holds = true;
    std::vector<double> slack;  // [agent * num_states + s]

    double at(int num_states, int agent, int s) const {
        return slack[static_cast<std::size_t>(agent) * num_states + s];
    }
};

/// Global-optimality certificate: at every (i, s), does the policy's
/// expected Q reach the best achievable by ANY distribution over joint
/// actions (i.e. the max entry)? When it holds, a stage fixed point is a
/// globally optimal equilibrium. Sufficient, not necessary — reported only.
inline GlobalOptimumReport check_global_optimum(const MarkovGame& game, const JointPolicy& policy,
                                                const QTables& q) {
    const int ns = game.num_states();
    const int nja = game.num_joint_actions();
    GlobalOptimumReport report;
    report.slack.assign(static_cast<std::size_t>(game.num_agents) * ns, 0.0);
    for (int i = 0; i < game.num_agents; ++i)
        for (int s = 0; s < ns; ++s) {
            double expectation = 0.0;
            double best = -std::numeric_limits<double>::infinity();
            for (int ja = 0; ja < nja; ++ja) {
                expectation += policy.at(s, ja) * q.at(i, s, ja);
                best = std::max(best, q.at(i, s, ja));
            }
            const double slack = expectation - best;
            report.slack[static_cast<std::size_t>(i) * ns + s] = slack;
            if (slack < -1e-7) report.holds = false;
        }
    return report;
}

}  // namespace dbce
