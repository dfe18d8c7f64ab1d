#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "density.hpp"
#include "linprog.hpp"
#include "markov_game.hpp"
#include "occupancy.hpp"

namespace dbce {

/// Per-agent expected-return tables Q_i(s, a⃗), the frozen stage game Qᵗ.
struct QTables {
    int num_agents = 0;
    int num_states = 0;
    int num_joint_actions = 0;
    std::vector<std::vector<double>> values;  // [agent][s * num_joint_actions + ja]

    static QTables zeros(const MarkovGame& game) {
        QTables q;
        q.num_agents = game.num_agents;
        q.num_states = game.num_states();
        q.num_joint_actions = game.num_joint_actions();
        q.values.assign(q.num_agents,
                        std::vector<double>(static_cast<std::size_t>(q.num_states) * q.num_joint_actions, 0.0));
        return q;
    }

    double at(int agent, int s, int ja) const {
        return values[agent][static_cast<std::size_t>(s) * num_joint_actions + ja];
    }
    double& at(int agent, int s, int ja) {
        return values[agent][static_cast<std::size_t>(s) * num_joint_actions + ja];
    }

    double max_abs_diff(const QTables& other) const {
        double worst = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i)
            for (std::size_t k = 0; k < values[i].size(); ++k)
                worst = std::max(worst, std::fabs(values[i][k] - other.values[i][k]));
        return worst;
    }
};

enum class StageObjectiveMode { Density, Utilitarian };

struct DensityCap {
    DensityObjective objective;
    double bound = 0.0;
};

struct StageSolveOptions {
    StageObjectiveMode mode = StageObjectiveMode::Density;
    DensityObjective density;  // used when mode == Density
    std::optional<DensityCap> extra_density_cap;
    double feasibility_tolerance = 1e-7;

    static StageSolveOptions for_density(DensityObjective obj) {
        StageSolveOptions o;
        o.mode = StageObjectiveMode::Density;
        o.density = std::move(obj);
        return o;
    }
    static StageSolveOptions utilitarian(std::optional<DensityCap> cap = std::nullopt) {
        StageSolveOptions o;
        o.mode = StageObjectiveMode::Utilitarian;
        o.extra_density_cap = std::move(cap);
        return o;
    }
};

struct StageDiagnostics {
    LpStatus status = LpStatus::NumericalFailure;
    double objective_value = 0.0;
    double max_regret = 0.0;
    double max_bf_error = 0.0;
    long lp_iterations = 0;
    int lp_rows = 0;
    int lp_vars = 0;
};

struct StageResult {
    OccupancyMeasure occupancy;
    JointPolicy policy;
    StageDiagnostics diagnostics;
};

/// Raised when the stage LP has no feasible point (only possible with an
/// extra density cap — the CE constraint set alone always contains a CE).
struct InfeasibleStage : std::runtime_error {
    LpStatus status;
    explicit InfeasibleStage(const std::string& what, LpStatus st = LpStatus::Infeasible)
        : std::runtime_error(what), status(st) {}
};

namespace detail {

/// Signed per-variable coefficients of the linear functional L(f) whose
/// value (or |value|) the objective tracks, plus the constant target it is
/// measured against (nonzero only for FrequencyMatch).
inline std::pair<std::vector<double>, double> density_functional(const MarkovGame& game,
                                                                 const DensityObjective& obj) {
    const int ns = game.num_states();
    const int nja = game.num_joint_actions();
    std::vector<double> coeffs(static_cast<std::size_t>(ns) * nja, 0.0);
    double target = 0.0;
    for (int s = 0; s < ns; ++s) {
        double w = obj.weights_1.empty() ? 0.0 : obj.weights_1[s];
        if (obj.kind == DensityKind::DensityGap && !obj.weights_2.empty()) w -= obj.weights_2[s];
        if (w == 0.0) continue;
        for (int ja = 0; ja < nja; ++ja) coeffs[static_cast<std::size_t>(s) * nja + ja] = w;
    }
    if (obj.kind == DensityKind::FrequencyMatch)
        target = obj.target_fraction / (1.0 - game.gamma);
    return {std::move(coeffs), target};
}

}  // namespace detail

/// Assembles the stage LP for the frozen Q-tables `q`: CE regret rows for
/// every (agent, state, action, deviation) including the vacuous a = a′
/// ones, Bellman-flow equalities per state, f ≥ 0 via variable bounds, and
/// the objective selected by `opts` (absolute values via one epigraph
/// variable t with t ≥ ±L(f)).
inline LinearProgram build_stage_lp(const MarkovGame& game, const QTables& q,
                                    const StageSolveOptions& opts) {
    const int ns = game.num_states();
    const int nja = game.num_joint_actions();
    const int nf = ns * nja;
    const bool needs_epigraph =
        opts.mode == StageObjectiveMode::Density && opts.density.kind != DensityKind::MinDensity;

    LinearProgram lp(nf + (needs_epigraph ? 1 : 0), LpSense::Minimize);

    for (int i = 0; i < game.num_agents; ++i) {
        const int count = static_cast<int>(game.actions[i].size());
        for (int s = 0; s < ns; ++s)
            for (int ai = 0; ai < count; ++ai)
                for (int aj = 0; aj < count; ++aj) {
                    std::vector<double> row(lp.num_vars, 0.0);
                    for (int ja = 0; ja < nja; ++ja) {
                        if (game.agent_action_of(ja, i) != ai) continue;
                        const int deviated = game.replace_action(ja, i, aj);
                        row[static_cast<std::size_t>(s) * nja + ja] =
                            q.at(i, s, deviated) - q.at(i, s, ja);
                    }
                    lp.add_constraint(std::move(row), LpRelation::LessEq, 0.0);
                }
    }

    for (int s = 0; s < ns; ++s) {
        std::vector<double> row(lp.num_vars, 0.0);
        for (int sp = 0; sp < ns; ++sp)
            for (int ja = 0; ja < nja; ++ja)
                row[static_cast<std::size_t>(sp) * nja + ja] =
                    (sp == s ? 1.0 : 0.0) - game.gamma * game.prob(sp, ja, s);
        lp.add_constraint(std::move(row), LpRelation::Equal, game.initial_dist[s]);
    }

    if (opts.mode == StageObjectiveMode::Density) {
        auto [coeffs, target] = detail::density_functional(game, opts.density);
        if (opts.density.kind == DensityKind::MinDensity) {
            for (int k = 0; k < nf; ++k) lp.objective[k] = coeffs[k];
        } else {
            const int t = nf;
            lp.objective[t] = 1.0;
            std::vector<double> upper(coeffs.begin(), coeffs.end());
            upper.push_back(-1.0);
            lp.add_constraint(std::move(upper), LpRelation::LessEq, target);
            std::vector<double> lower(nf + 1, 0.0);
            for (int k = 0; k < nf; ++k) lower[k] = -coeffs[k];
            lower[nf] = -1.0;
            lp.add_constraint(std::move(lower), LpRelation::LessEq, -target);
        }
    } else {
        lp.sense = LpSense::Maximize;
        for (int s = 0; s < ns; ++s)
            for (int ja = 0; ja < nja; ++ja) {
                double total = 0.0;
                for (int i = 0; i < game.num_agents; ++i) total += q.at(i, s, ja);
                lp.objective[static_cast<std::size_t>(s) * nja + ja] = total;
            }
    }

    if (opts.extra_density_cap) {
        const auto& cap = *opts.extra_density_cap;
        if (cap.bound < 0.0) throw std::invalid_argument("density cap bound must be >= 0");
        auto [coeffs, target] = detail::density_functional(game, cap.objective);
        std::vector<double> row(lp.num_vars, 0.0);
        for (int k = 0; k < nf; ++k) row[k] = coeffs[k];
        if (cap.objective.kind == DensityKind::MinDensity) {
            lp.add_constraint(std::move(row), LpRelation::LessEq, cap.bound);
        } else {
            std::vector<double> mirror(lp.num_vars, 0.0);
            for (int k = 0; k < nf; ++k) mirror[k] = -coeffs[k];
            lp.add_constraint(std::move(row), LpRelation::LessEq, target + cap.bound);
            lp.add_constraint(std::move(mirror), LpRelation::LessEq, -(target - cap.bound));
        }
    }

    return lp;
}

/// Variable names matching build_stage_lp's column layout, for LP dumps.
inline std::vector<std::string> stage_lp_var_names(const MarkovGame& game,
                                                   const StageSolveOptions& opts) {
    std::vector<std::string> names;
    const int nja = game.num_joint_actions();
    names.reserve(static_cast<std::size_t>(game.num_states()) * nja + 1);
    for (int s = 0; s < game.num_states(); ++s)
        for (int ja = 0; ja < nja; ++ja)
            names.push_back("f[" + game.states[s] + "][" + game.joint_action_name(ja) + "]");
    if (opts.mode == StageObjectiveMode::Density && opts.density.kind != DensityKind::MinDensity)
        names.push_back("t");
    return names;
}

/// reg_f(i, s, a_i, a_i′) for all tuples plus the maximum (the MaxReg metric).
struct RegretReport {
    double max_regret = 0.0;
    std::vector<std::vector<double>> tensor;  // [agent][(s * |A_i| + a_i) * |A_i| + a_i′]

    double at(const MarkovGame& game, int agent, int s, int ai, int aj) const {
        const int count = static_cast<int>(game.actions[agent].size());
        return tensor[agent][(static_cast<std::size_t>(s) * count + ai) * count + aj];
    }
};

inline RegretReport stage_regret(const MarkovGame& game, const OccupancyMeasure& f,
                                 const QTables& q) {
    const int ns = game.num_states();
    const int nja = game.num_joint_actions();
    if (f.num_states != ns || f.num_joint_actions != nja || q.num_states != ns ||
        q.num_joint_actions != nja || q.num_agents != game.num_agents)
        throw std::invalid_argument("stage_regret: shape mismatch");

    RegretReport report;
    report.tensor.resize(game.num_agents);
    for (int i = 0; i < game.num_agents; ++i) {
        const int count = static_cast<int>(game.actions[i].size());
        report.tensor[i].assign(static_cast<std::size_t>(ns) * count * count, 0.0);
        for (int s = 0; s < ns; ++s)
            for (int ja = 0; ja < nja; ++ja) {
                const int ai = game.agent_action_of(ja, i);
                const double mass = f.at(s, ja);
                if (mass == 0.0) continue;
                for (int aj = 0; aj < count; ++aj) {
                    const int deviated = game.replace_action(ja, i, aj);
                    report.tensor[i][(static_cast<std::size_t>(s) * count + ai) * count + aj] +=
                        mass * (q.at(i, s, deviated) - q.at(i, s, ja));
                }
            }
        for (double v : report.tensor[i]) report.max_regret = std::max(report.max_regret, v);
    }
    return report;
}

/// Solves the stage game: assembles the LP, runs the simplex,
/// extracts the occupancy (clamping basis roundoff to zero), converts it to a
/// policy, and re-checks regret and Bellman flow on the extracted point.
///
/// The |·|-shaped density objectives usually admit a whole face of optimal
/// occupancies (many ways to balance or hit a density). Which vertex the
/// simplex lands on would otherwise be an accident of pivot order, and the
/// variance of finite-horizon visit counts differs wildly across the face:
/// a chain that tends to stay on the same monitored side random-walks away
/// from the target even though the discounted objective is exact, while an
/// alternating chain keeps counts pinned. A second solve therefore fixes
/// the achieved objective and minimizes the same-side repeat flow
/// Σ f(s,a⃗)·P(next state on the same side | s,a⃗) — the
/// maximum-alternation representative of the optimal face.
inline StageResult solve_stage_game(const MarkovGame& game, const QTables& q,
                                    const StageSolveOptions& opts) {
    const LinearProgram lp = build_stage_lp(game, q, opts);
    LpSolution sol = solve_lp(lp);
    if (sol.status == LpStatus::Infeasible)
        throw InfeasibleStage("stage LP infeasible" +
                                  (opts.extra_density_cap ? std::string(" (density cap bound ") +
                                                                std::to_string(opts.extra_density_cap->bound) + ")"
                                                          : std::string()),
                              sol.status);
    if (sol.status != LpStatus::Optimal)
        throw std::runtime_error(std::string("stage LP solve failed: ") + to_string(sol.status) +
                                 (sol.diagnostics.empty() ? "" : " — " + sol.diagnostics));
    const double primary_value = sol.objective_value;

    if (opts.mode == StageObjectiveMode::Density && opts.density.kind != DensityKind::MinDensity) {
        const int ns = game.num_states();
        const int nja = game.num_joint_actions();
        // +1: state weighted in set 1, -1: in set 2, 0: unmonitored (or both).
        auto set_side = [&](int s) {
            const double w1 = opts.density.weights_1.empty() ? 0.0 : opts.density.weights_1[s];
            const double w2 = opts.density.kind == DensityKind::DensityGap &&
                                      !opts.density.weights_2.empty()
                                  ? opts.density.weights_2[s]
                                  : 0.0;
            if (w1 != 0.0 && w2 == 0.0) return 1;
            if (w2 != 0.0 && w1 == 0.0) return -1;
            return 0;
        };
        LinearProgram refine = lp;
        std::fill(refine.objective.begin(), refine.objective.end(), 0.0);
        bool monitored = false;
        for (int s = 0; s < ns; ++s) {
            const int side = set_side(s);
            if (side == 0) continue;
            for (int ja = 0; ja < nja; ++ja) {
                double repeat = 0.0;
                for (int sp = 0; sp < ns; ++sp)
                    if (set_side(sp) == side) repeat += game.prob(s, ja, sp);
                refine.objective[static_cast<std::size_t>(s) * nja + ja] = repeat;
                if (repeat != 0.0) monitored = true;
            }
        }
        if (monitored) {
            std::vector<double> pin(refine.num_vars, 0.0);
            pin[ns * nja] = 1.0;  // the epigraph variable carries the objective
            refine.add_constraint(std::move(pin), LpRelation::LessEq,
                                  primary_value + 1e-9 * (1.0 + std::fabs(primary_value)));
            LpSolution refined = solve_lp(refine);
            if (refined.status == LpStatus::Optimal) {
                refined.iterations += sol.iterations;
                sol = std::move(refined);
            }
        }
    }

    StageResult result;
    result.occupancy = OccupancyMeasure::zeros(game);
    const int nf = game.num_states() * game.num_joint_actions();
    for (int k = 0; k < nf; ++k) {
        double v = sol.values[k];
        if (v < 0.0) {
            if (v < -1e-7)
                throw std::runtime_error("stage LP returned occupancy entry " + std::to_string(v));
            v = 0.0;
        }
        result.occupancy.values[k] = v;
    }
    result.policy = policy_from_occupancy(result.occupancy);

    result.diagnostics.status = sol.status;
    result.diagnostics.objective_value = primary_value;
    result.diagnostics.lp_iterations = sol.iterations;
    result.diagnostics.lp_rows = static_cast<int>(lp.constraints.size());
    result.diagnostics.lp_vars = lp.num_vars;
    result.diagnostics.max_regret = stage_regret(game, result.occupancy, q).max_regret;
    double bf = 0.0;
    for (double e : bellman_flow_error(game, result.occupancy)) bf = std::max(bf, std::fabs(e));
    result.diagnostics.max_bf_error = bf;
    return result;
}

}  // namespace dbce
