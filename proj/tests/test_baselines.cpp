#include <catch2/catch_amalgamated.hpp>

#include "test_support.hpp"

using namespace dbce;

TEST_CASE("reward_modified_game adds p exactly on the flagged states") {
    const auto game = build_fair_gamble();
    const auto modified = reward_modified_game(game, {2}, -1.5);

    REQUIRE(validate_game(modified).ok());  // mixture means must track the tables
    const int nja = game.num_joint_actions();
    for (int s = 0; s < game.num_states(); ++s)
        for (int ja = 0; ja < nja; ++ja)
            for (int i = 0; i < game.num_agents; ++i) {
                const double diff = modified.rewards[i][game.sa_index(s, ja)] -
                                    game.rewards[i][game.sa_index(s, ja)];
                REQUIRE(diff == Catch::Approx(s == 2 ? -1.5 : 0.0).margin(1e-15));
            }
    // stochastic branches shift too
    for (int ja = 0; ja < nja; ++ja) {
        const auto& mix = modified.reward_mixtures[game.sa_index(2, ja)];
        REQUIRE(mix.size() == 2);
        for (const auto& outcome : mix)
            for (double r : outcome.rewards) REQUIRE((r == 1.0 - 1.5 || r == -1.0 - 1.5));
    }
    // transition structure untouched
    REQUIRE(modified.transition == game.transition);
}

TEST_CASE("reward_modified_game validates its inputs") {
    const auto game = build_fair_gamble();
    REQUIRE_THROWS_AS(reward_modified_game(game, {2}, 0.0), std::invalid_argument);
    REQUIRE_THROWS_AS(reward_modified_game(game, {2}, 0.5), std::invalid_argument);
    REQUIRE_THROWS_AS(reward_modified_game(game, {3}, -1.0), std::invalid_argument);

    const auto untouched = reward_modified_game(game, {}, -1.0);
    REQUIRE(untouched.rewards == game.rewards);
}

TEST_CASE("format_bound renders minimal decimals") {
    REQUIRE(format_bound(0.05) == "0.05");
    REQUIRE(format_bound(1.5) == "1.5");
    REQUIRE(format_bound(5.0) == "5");
    REQUIRE(format_bound(25.0) == "25");
}

TEST_CASE("plain CE-Q runs carry a zero metric and the ceq method id") {
    std::mt19937_64 rng(7);
    const auto game = testsup::random_game(rng, 2, {2, 2});
    DbcpiConfig cfg;
    cfg.iterations = 5;
    const auto result = run_ce_q(game, cfg);
    REQUIRE(result.method_id == "ceq");
    REQUIRE(result.error == 0.0);  // zero-weight default metric
    REQUIRE(result.max_bf <= 1e-7);
    REQUIRE(result.trace.size() == 5);
}

TEST_CASE("a cap far above any reachable density does not change the result") {
    std::mt19937_64 rng(11);
    const auto game = testsup::random_game(rng, 3, {2, 2});
    auto q = QTables::zeros(game);
    for (auto& table : q.values)
        for (auto& v : table) v = testsup::uniform(rng, -1.0, 1.0);

    const DensityObjective rho = DensityObjective::min_density({0.0, 1.0, 0.0});
    const auto plain = solve_stage_game(game, q, StageSolveOptions::utilitarian());
    const auto capped =
        solve_stage_game(game, q, StageSolveOptions::utilitarian(DensityCap{rho, 1e6}));
    REQUIRE(testsup::max_abs_diff(plain.occupancy.values, capped.occupancy.values) < 1e-7);
    REQUIRE(plain.diagnostics.objective_value ==
            Catch::Approx(capped.diagnostics.objective_value).margin(1e-7));

    // and through the full loop
    DbcpiConfig cfg;
    cfg.iterations = 5;
    const auto loop_plain = run_ce_q(build_collect_explore(), cfg, std::nullopt,
                                     requirement_preset("cae", "safety").objective);
    const auto loop_capped = run_ce_q(
        build_collect_explore(), cfg,
        DensityCap{requirement_preset("cae", "safety").objective, 1e6});
    REQUIRE(loop_plain.error == Catch::Approx(loop_capped.error).margin(1e-6));
    REQUIRE(loop_capped.method_id == "cm-1e+06");
}

TEST_CASE("cm method ids use the bound verbatim") {
    const auto game = build_fair_gamble();
    DbcpiConfig cfg;
    cfg.iterations = 2;
    const auto result = run_ce_q(
        game, cfg, DensityCap{requirement_preset("fairgamble", "safety").objective, 5.0});
    REQUIRE(result.method_id == "cm-5");
    REQUIRE(result.error <= 5.0 + 1e-6);  // the cap binds the reported density
}

TEST_CASE("an unreachable cap fails fast with the iteration in the message") {
    const auto game = build_fair_gamble();
    DbcpiConfig cfg;
    cfg.iterations = 10;
    try {
        run_ce_q(game, cfg,
                 DensityCap{requirement_preset("fairgamble", "safety").objective, 0.2});
        FAIL("expected InfeasibleStage");
    } catch (const InfeasibleStage& e) {
        const std::string what = e.what();
        REQUIRE(what.find("at iteration 0") != std::string::npos);
        REQUIRE(what.find("0.2") != std::string::npos);
    }
}

TEST_CASE("run_rm reports regret against both the modified and original game") {
    const auto game = build_fair_gamble();
    const auto preset = requirement_preset("fairgamble", "safety");
    DbcpiConfig cfg;
    cfg.iterations = 30;
    const auto result = run_rm(game, preset.requirement.set_1, -1.5, preset.objective, cfg);

    REQUIRE(result.method_id == "rm-1.5");
    REQUIRE(result.has_original_regret());
    // FairGamble's original expected rewards are all zero, so the original-game
    // Q of any policy is zero and every deviation is worthless.
    REQUIRE(result.max_reg_original == 0.0);
    REQUIRE(result.max_reg >= 0.0);
    REQUIRE(result.max_bf <= 1e-7);

    // The penalty makes G3 welfare-dominated; the exact fixed point parks at
    // the unavoidable initial mass.
    REQUIRE(result.error == Catch::Approx(1.0 / 3.0).margin(1e-6));
}

TEST_CASE("run_rm rejects non-negative penalties") {
    const auto game = build_fair_gamble();
    const auto preset = requirement_preset("fairgamble", "safety");
    DbcpiConfig cfg;
    cfg.iterations = 2;
    REQUIRE_THROWS_AS(run_rm(game, preset.requirement.set_1, 0.5, preset.objective, cfg),
                      std::invalid_argument);
}
