// dbce — command-line front end for the DBCE solver library.
//
// Subcommands:
//   solve       one (game, task, method) run → RunResult JSON
//   experiment  config file → full report (json + csv + trace-csv)
//   rollout     game + policy JSON → trajectory CSV + requirement scores
//   validate    game JSON → validation report
//   dump-lp     assembled stage LP (optionally from a Q snapshot) as text
//
// Exit codes: 0 success, 1 usage error, 2 run failure.

#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "dbce/dbce.hpp"

namespace {

std::string default_out_dir() {
    const char* env = std::getenv(dbce::kOutputDirEnvVar);
    return env && *env ? env : "out";
}

// --game accepts a builtin id or a path to a game JSON file.
dbce::MarkovGame load_game_arg(const std::string& game) {
    if (game == "fairgamble" || game == "hunters" || game == "cae") return dbce::build_game(game);
    return dbce::game_from_json(dbce::load_json_file(game));
}

void write_or_print(const std::optional<std::string>& path, const std::string& content) {
    if (path) {
        dbce::write_text_file(*path, content);
        std::cerr << "wrote " << *path << "\n";
    } else {
        std::cout << content;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Density-based correlated equilibrium solver"};
    app.require_subcommand(1);

    std::string game = "fairgamble";
    std::string task = "safety";
    std::string method = "dbce";
    std::uint64_t seed = 0;
    int iters = 250;
    std::string eval_mode = "exact";
    std::optional<std::string> out_path;
    std::string config_path;
    std::string policy_path;
    std::string q_path;
    int steps = 250;

    auto add_run_flags = [&](CLI::App* cmd) {
        cmd->add_option("--game", game, "builtin game id (fairgamble|hunters|cae)");
        cmd->add_option("--task", task, "task id (safety|freq-10|fairness)");
        cmd->add_option("--seed", seed, "run seed");
        cmd->add_option("--iters", iters, "outer iterations");
        cmd->add_option("--eval-mode", eval_mode, "policy evaluation mode (exact|sampled)");
    };

    auto* solve = app.add_subcommand("solve", "run one (game, task, method) configuration");
    add_run_flags(solve);
    solve->add_option("--method", method, "method id (dbce|ceq|cm-<b>|rm-<p>)");
    solve->add_option("--out", out_path, "output file (default: stdout)");

    auto* experiment = app.add_subcommand("experiment", "run a config file and emit reports");
    experiment->add_option("--config", config_path, "experiment config JSON")->required();
    std::string exp_out = default_out_dir();
    experiment->add_option("--out", exp_out, "output directory");
    int threads = 1;
    experiment->add_option("--threads", threads, "parallel workers");

    auto* rollout = app.add_subcommand("rollout", "sample a trajectory under a stored policy");
    rollout->add_option("--game", game, "builtin game id or game JSON path");
    rollout->add_option("--task", task, "task id used for the requirement score");
    rollout->add_option("--policy", policy_path, "policy JSON (dense rows or a solve report)")
        ->required();
    rollout->add_option("--steps", steps, "trajectory length");
    rollout->add_option("--seed", seed, "rollout seed");
    rollout->add_option("--out", out_path, "trajectory CSV file (default: stdout)");

    auto* validate = app.add_subcommand("validate", "check a game file against all invariants");
    validate->add_option("--game", game, "builtin game id or game JSON path")->required();

    auto* dump = app.add_subcommand("dump-lp", "print the assembled stage LP");
    dump->add_option("--game", game, "builtin game id or game JSON path");
    dump->add_option("--task", task, "task id (selects the density objective)");
    dump->add_option("--method", method, "method id (selects objective mode / cap)");
    dump->add_option("--q", q_path, "Q snapshot JSON, bare or a solve report (default: zeros)");
    dump->add_option("--out", out_path, "output file (default: stdout)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve->parsed()) {
            dbce::DbcpiConfig cfg;
            cfg.iterations = iters;
            cfg.eval_mode = dbce::eval_mode_from_string(eval_mode);
            cfg.seed = seed;
            const dbce::RunResult result = dbce::execute_run({game, task, method}, cfg);
            write_or_print(out_path, dbce::run_result_to_json(result).dump(2) + "\n");
        } else if (experiment->parsed()) {
            dbce::ExperimentConfig cfg =
                dbce::experiment_config_from_json(dbce::load_json_file(config_path));
            if (experiment->count("--out") || cfg.output_dir.empty()) cfg.output_dir = exp_out;
            if (experiment->count("--threads")) cfg.threads = threads;
            const dbce::RunReport report = dbce::run_experiment(cfg);
            for (const auto& format : {"json", "csv", "trace-csv"})
                for (const auto& path : dbce::emit_report(report, format, cfg.output_dir))
                    std::cerr << "wrote " << path << "\n";
            int failed = 0;
            for (const auto& record : report.records) failed += record.failed ? 1 : 0;
            std::cerr << report.records.size() - failed << "/" << report.records.size()
                      << " runs completed\n";
            if (failed == static_cast<int>(report.records.size())) return 2;
        } else if (rollout->parsed()) {
            const dbce::MarkovGame g = load_game_arg(game);
            // Accept either bare dense rows or a solve report wrapping them.
            const dbce::json stored = dbce::load_json_file(policy_path);
            const dbce::JointPolicy policy =
                dbce::policy_from_json(stored.is_object() ? stored.at("policy") : stored);
            const dbce::Trajectory traj = dbce::rollout(g, policy, steps, seed);
            std::ostringstream csv;
            dbce::trajectory_to_csv(traj, g, csv);
            write_or_print(out_path, csv.str());
            if (game == "fairgamble" || game == "hunters" || game == "cae") {
                const dbce::TaskPreset preset = dbce::requirement_preset(game, task);
                std::cerr << "requirement_score(" << task
                          << ") = " << dbce::requirement_score(traj, preset.requirement) << "\n";
            }
        } else if (validate->parsed()) {
            const dbce::ValidationReport report = dbce::validate_game(load_game_arg(game));
            if (report.ok()) {
                std::cout << "valid\n";
            } else {
                std::cout << report.to_string();
                return 2;
            }
        } else if (dump->parsed()) {
            const dbce::MarkovGame g = load_game_arg(game);
            const bool builtin = game == "fairgamble" || game == "hunters" || game == "cae";
            const dbce::DensityObjective objective =
                builtin ? dbce::requirement_preset(game, task).objective
                        : dbce::DensityObjective::min_density(
                              std::vector<double>(g.num_states(), 0.0));
            const dbce::MethodSpec spec = dbce::parse_method(method);
            dbce::StageSolveOptions opts;
            switch (spec.kind) {
                case dbce::MethodSpec::Kind::Dbce:
                    opts = dbce::StageSolveOptions::for_density(objective);
                    break;
                case dbce::MethodSpec::Kind::Cm:
                    opts = dbce::StageSolveOptions::utilitarian(
                        dbce::DensityCap{objective, spec.parameter});
                    break;
                default:
                    opts = dbce::StageSolveOptions::utilitarian();
                    break;
            }
            dbce::QTables q = dbce::QTables::zeros(g);
            if (!q_path.empty()) {
                // Accept either a bare agents x states x actions array or a
                // solve report wrapping it.
                const dbce::json stored = dbce::load_json_file(q_path);
                q = dbce::qtables_from_json(stored.is_object() ? stored.at("q") : stored);
            }
            const dbce::LinearProgram lp = dbce::build_stage_lp(g, q, opts);
            const auto names = dbce::stage_lp_var_names(g, opts);
            write_or_print(out_path, dbce::lp_to_text(lp, &names));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
