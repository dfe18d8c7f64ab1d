#include <catch2/catch_amalgamated.hpp>

#include "test_support.hpp"

using namespace dbce;

namespace {

int regret_row_count(const MarkovGame& game) {
    int rows = 0;
    for (int i = 0; i < game.num_agents; ++i) {
        const int c = static_cast<int>(game.actions[i].size());
        rows += game.num_states() * c * c;
    }
    return rows;
}

}  // namespace

TEST_CASE("build_stage_lp has the expected shape for each objective") {
    const auto game = build_fair_gamble();  // 3 states, 2 agents x 3 actions
    const auto q = QTables::zeros(game);
    const int nf = game.num_states() * game.num_joint_actions();
    const int base_rows = regret_row_count(game) + game.num_states();

    SECTION("min-density: no epigraph variable") {
        const auto lp = build_stage_lp(game, q, StageSolveOptions::for_density(
                                                    DensityObjective::min_density({0, 0, 1})));
        REQUIRE(lp.num_vars == nf);
        REQUIRE(static_cast<int>(lp.constraints.size()) == base_rows);
        REQUIRE(lp.sense == LpSense::Minimize);
    }
    SECTION("frequency-match: one epigraph variable, two extra rows") {
        const auto lp = build_stage_lp(game, q, StageSolveOptions::for_density(
                                                    DensityObjective::frequency_match({0, 0, 1}, 0.1)));
        REQUIRE(lp.num_vars == nf + 1);
        REQUIRE(static_cast<int>(lp.constraints.size()) == base_rows + 2);
        REQUIRE(lp.objective[nf] == 1.0);
    }
    SECTION("density-gap: one epigraph variable, two extra rows") {
        const auto lp = build_stage_lp(game, q, StageSolveOptions::for_density(
                                                    DensityObjective::density_gap({1, 0, 0}, {0, 1, 0})));
        REQUIRE(lp.num_vars == nf + 1);
        REQUIRE(static_cast<int>(lp.constraints.size()) == base_rows + 2);
    }
    SECTION("utilitarian: maximization, objective = sum of Q tables") {
        std::mt19937_64 rng(71);
        auto qr = QTables::zeros(game);
        for (auto& table : qr.values)
            for (auto& v : table) v = testsup::uniform(rng, -1.0, 1.0);
        const auto lp = build_stage_lp(game, qr, StageSolveOptions::utilitarian());
        REQUIRE(lp.num_vars == nf);
        REQUIRE(lp.sense == LpSense::Maximize);
        REQUIRE(static_cast<int>(lp.constraints.size()) == base_rows);
        for (int s = 0; s < game.num_states(); ++s)
            for (int ja = 0; ja < game.num_joint_actions(); ++ja)
                REQUIRE(lp.objective[s * game.num_joint_actions() + ja] ==
                        Catch::Approx(qr.at(0, s, ja) + qr.at(1, s, ja)).margin(1e-15));
    }
    SECTION("min-density cap adds one row, band caps add two") {
        const auto one = build_stage_lp(
            game, q,
            StageSolveOptions::utilitarian(DensityCap{DensityObjective::min_density({0, 0, 1}), 2.0}));
        REQUIRE(static_cast<int>(one.constraints.size()) == base_rows + 1);
        const auto two = build_stage_lp(
            game, q,
            StageSolveOptions::utilitarian(
                DensityCap{DensityObjective::frequency_match({0, 0, 1}, 0.1), 2.0}));
        REQUIRE(static_cast<int>(two.constraints.size()) == base_rows + 2);
        REQUIRE(two.num_vars == nf);  // caps never add the epigraph variable
    }
    SECTION("negative cap bound is rejected") {
        REQUIRE_THROWS_AS(
            build_stage_lp(game, q,
                           StageSolveOptions::utilitarian(
                               DensityCap{DensityObjective::min_density({0, 0, 1}), -0.5})),
            std::invalid_argument);
    }
}

TEST_CASE("stage_lp_var_names matches the column layout") {
    const auto game = build_fair_gamble();
    const auto opts =
        StageSolveOptions::for_density(DensityObjective::frequency_match({0, 0, 1}, 0.1));
    const auto names = stage_lp_var_names(game, opts);
    REQUIRE(static_cast<int>(names.size()) == game.num_states() * game.num_joint_actions() + 1);
    REQUIRE(names.front() == "f[G1][0|0]");
    REQUIRE(names.back() == "t");
}

TEST_CASE("stage_regret sign convention and vacuous entries, by hand") {
    // one state, agent 0 has 2 actions, agent 1 has 1; Q_0 = (0, 1), f = (2, 3)
    std::mt19937_64 rng(73);
    const auto game = testsup::random_game(rng, 1, {2, 1});
    auto q = QTables::zeros(game);
    q.at(0, 0, 1) = 1.0;
    auto f = OccupancyMeasure::zeros(game);
    f.at(0, 0) = 2.0;
    f.at(0, 1) = 3.0;

    const auto report = stage_regret(game, f, q);
    REQUIRE(report.at(game, 0, 0, 0, 1) == Catch::Approx(2.0));   // switch 0 -> 1 gains 2*(1-0)
    REQUIRE(report.at(game, 0, 0, 1, 0) == Catch::Approx(-3.0));  // switch 1 -> 0 loses
    REQUIRE(report.at(game, 0, 0, 0, 0) == 0.0);
    REQUIRE(report.at(game, 0, 0, 1, 1) == 0.0);
    REQUIRE(report.max_regret == Catch::Approx(2.0));
}

TEST_CASE("stage_regret never reports below zero thanks to vacuous deviations") {
    // All mass sits on the better action, so the only live deviation is a
    // strict loss and the max comes from the vacuous a -> a rows.
    std::mt19937_64 rng(79);
    const auto game = testsup::random_game(rng, 1, {2, 1});
    auto q = QTables::zeros(game);
    q.at(0, 0, 0) = 1.0;
    auto f = OccupancyMeasure::zeros(game);
    f.at(0, 0) = 2.0;
    const auto report = stage_regret(game, f, q);
    REQUIRE(report.at(game, 0, 0, 0, 1) == -2.0);
    REQUIRE(report.max_regret == 0.0);
}

TEST_CASE("stage_regret agrees with an independent accumulation on random input") {
    std::mt19937_64 rng(83);
    const auto game = testsup::random_game(rng, 3, {2, 3});
    auto q = QTables::zeros(game);
    for (auto& table : q.values)
        for (auto& v : table) v = testsup::uniform(rng, -2.0, 2.0);
    auto f = OccupancyMeasure::zeros(game);
    for (auto& v : f.values) v = testsup::uniform(rng, 0.0, 1.0);

    const auto report = stage_regret(game, f, q);

    double expected_max = 0.0;
    for (int i = 0; i < game.num_agents; ++i) {
        const int count = static_cast<int>(game.actions[i].size());
        for (int s = 0; s < game.num_states(); ++s)
            for (int ai = 0; ai < count; ++ai)
                for (int aj = 0; aj < count; ++aj) {
                    double total = 0.0;
                    for (int ja = 0; ja < game.num_joint_actions(); ++ja) {
                        const auto split = game.split_joint(ja);
                        if (split[i] != ai) continue;
                        auto dev = split;
                        dev[i] = aj;
                        total += f.at(s, ja) * (q.at(i, s, game.joint_index(dev)) - q.at(i, s, ja));
                    }
                    REQUIRE(report.at(game, i, s, ai, aj) == Catch::Approx(total).margin(1e-12));
                    expected_max = std::max(expected_max, total);
                }
    }
    REQUIRE(report.max_regret == Catch::Approx(expected_max).margin(1e-12));
}

TEST_CASE("zero-Q stage: every objective solves to a flow-feasible equilibrium") {
    const auto game = build_fair_gamble();
    const auto q = QTables::zeros(game);

    SECTION("min state-2 density reaches the initial-mass floor of 1/3") {
        // Nothing forces re-entry into G3 after t=0, so the density floor is
        // the initial mass eta(G3) = 1/3.
        const auto result =
            solve_stage_game(game, q, StageSolveOptions::for_density(
                                          DensityObjective::min_density({0, 0, 1})));
        REQUIRE(result.diagnostics.status == LpStatus::Optimal);
        REQUIRE(result.diagnostics.objective_value == Catch::Approx(1.0 / 3.0).margin(1e-8));
        REQUIRE(result.occupancy.state_density(2) == Catch::Approx(1.0 / 3.0).margin(1e-8));
        REQUIRE(result.diagnostics.max_regret <= 1e-9);
        REQUIRE(result.diagnostics.max_bf_error <= 1e-7);
        REQUIRE(result.occupancy.total_mass() == Catch::Approx(100.0).margin(1e-6));
    }
    SECTION("a 10% frequency target inside the reachable band is met exactly") {
        const auto result = solve_stage_game(
            game, q,
            StageSolveOptions::for_density(DensityObjective::frequency_match({0, 0, 1}, 0.1)));
        REQUIRE(result.diagnostics.objective_value == Catch::Approx(0.0).margin(1e-8));
        REQUIRE(result.occupancy.state_density(2) == Catch::Approx(10.0).margin(1e-6));
    }
    SECTION("a density gap of zero is reachable") {
        const auto result = solve_stage_game(
            game, q,
            StageSolveOptions::for_density(DensityObjective::density_gap({1, 0, 0}, {0, 1, 0})));
        REQUIRE(result.diagnostics.objective_value == Catch::Approx(0.0).margin(1e-8));
        REQUIRE(result.occupancy.state_density(0) ==
                Catch::Approx(result.occupancy.state_density(1)).margin(1e-6));
    }
}

TEST_CASE("utilitarian stage value on Chicken matches the vertex oracle") {
    const auto payoffs = testsup::chicken_payoffs();
    const auto game = testsup::single_state_game(payoffs);

    // stage Q = one-shot payoffs
    auto q = QTables::zeros(game);
    for (int a1 = 0; a1 < 2; ++a1)
        for (int a2 = 0; a2 < 2; ++a2) {
            const int ja = game.joint_index({a1, a2});
            q.at(0, 0, ja) = payoffs[0][a1][a2];
            q.at(1, 0, ja) = payoffs[1][a1][a2];
        }

    const auto result = solve_stage_game(game, q, StageSolveOptions::utilitarian());
    REQUIRE(result.diagnostics.status == LpStatus::Optimal);
    REQUIRE(result.diagnostics.max_regret <= 1e-9);

    // The single-state flow constraint pins total mass at 100, so the LP
    // optimum is 100x the normal-form CE optimum (which is 10.5 for Chicken).
    const auto oracle = testsup::ce_polytope(payoffs);
    std::vector<double> welfare(4);
    for (int a1 = 0; a1 < 2; ++a1)
        for (int a2 = 0; a2 < 2; ++a2)
            welfare[a1 * 2 + a2] = payoffs[0][a1][a2] + payoffs[1][a1][a2];
    const auto [lo, hi] = oracle.objective_range(welfare);
    REQUIRE(hi == Catch::Approx(10.5).margin(1e-9));
    REQUIRE(result.diagnostics.objective_value == Catch::Approx(100.0 * hi).margin(1e-5));

    // CE membership of the returned point, checked through the oracle's rows.
    std::vector<double> x(4);
    for (int a1 = 0; a1 < 2; ++a1)
        for (int a2 = 0; a2 < 2; ++a2)
            x[a1 * 2 + a2] = result.occupancy.at(0, game.joint_index({a1, a2})) / 100.0;
    for (std::size_t r = 0; r < oracle.ub.size(); ++r) {
        double lhs = 0.0;
        for (int j = 0; j < 4; ++j) lhs += oracle.ub[r][j] * x[j];
        REQUIRE(lhs <= oracle.ub_rhs[r] + 1e-9);
    }
}

TEST_CASE("density objectives are constant on single-state games") {
    // With one state every feasible occupancy has rho(s0) = 100, so the
    // optimum value is fixed regardless of Q.
    std::mt19937_64 rng(89);
    const auto game = testsup::single_state_game(testsup::chicken_payoffs());
    auto q = QTables::zeros(game);
    for (auto& table : q.values)
        for (auto& v : table) v = testsup::uniform(rng, -1.0, 1.0);

    const auto md = solve_stage_game(
        game, q, StageSolveOptions::for_density(DensityObjective::min_density({1.0})));
    REQUIRE(md.diagnostics.objective_value == Catch::Approx(100.0).margin(1e-6));

    const auto fm = solve_stage_game(
        game, q, StageSolveOptions::for_density(DensityObjective::frequency_match({1.0}, 0.25)));
    REQUIRE(fm.diagnostics.objective_value == Catch::Approx(100.0 - 25.0).margin(1e-6));
}

TEST_CASE("caps tighten the utilitarian value monotonically and can bite to infeasibility") {
    const auto game = build_fair_gamble();
    std::mt19937_64 rng(97);
    auto q = QTables::zeros(game);
    for (auto& table : q.values)
        for (auto& v : table) v = testsup::uniform(rng, -1.0, 1.0);

    const DensityObjective rho_g3 = DensityObjective::min_density({0, 0, 1});
    double previous = std::numeric_limits<double>::infinity();
    for (double bound : {50.0, 5.0, 1.0, 0.4}) {
        const auto result =
            solve_stage_game(game, q, StageSolveOptions::utilitarian(DensityCap{rho_g3, bound}));
        REQUIRE(result.diagnostics.objective_value <= previous + 1e-7);
        REQUIRE(result.occupancy.state_density(2) <= bound + 1e-6);
        previous = result.diagnostics.objective_value;
    }

    // eta(G3) = 1/3 cannot be undercut: a 0.2 cap has no feasible point.
    try {
        solve_stage_game(game, q, StageSolveOptions::utilitarian(DensityCap{rho_g3, 0.2}));
        FAIL("expected InfeasibleStage");
    } catch (const InfeasibleStage& e) {
        REQUIRE(std::string(e.what()).find("density cap bound") != std::string::npos);
        REQUIRE(e.status == LpStatus::Infeasible);
    }
}

TEST_CASE("min-density optimum is no worse than other feasible equilibria") {
    std::mt19937_64 rng(101);
    for (int trial = 0; trial < 5; ++trial) {
        const auto game = testsup::random_game(rng, 3, {2, 2});
        auto q = QTables::zeros(game);
        for (auto& table : q.values)
            for (auto& v : table) v = testsup::uniform(rng, -1.0, 1.0);

        const DensityObjective obj = DensityObjective::min_density({0.0, 1.0, 0.0});
        const auto best = solve_stage_game(game, q, StageSolveOptions::for_density(obj));
        const auto other = solve_stage_game(game, q, StageSolveOptions::utilitarian());
        REQUIRE(density_error(best.occupancy, obj, game.gamma) <=
                density_error(other.occupancy, obj, game.gamma) + 1e-7);
    }
}

TEST_CASE("solve_stage_game rejects shape mismatches via stage_regret") {
    std::mt19937_64 rng(103);
    const auto game = testsup::random_game(rng, 2, {2, 2});
    auto q = QTables::zeros(game);
    q.num_states = 3;  // corrupt
    auto f = OccupancyMeasure::zeros(game);
    REQUIRE_THROWS_AS(stage_regret(game, f, q), std::invalid_argument);
}
