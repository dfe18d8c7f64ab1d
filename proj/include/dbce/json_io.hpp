#pragma once

#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "dbcpi.hpp"
#include "markov_game.hpp"
#include "trajectory.hpp"

namespace dbce {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Game file: {"agents", "states", "actions", "transitions"[s][ja][s'],
// "rewards"[i][s][ja], "eta", "gamma", "stochastic_rewards" (optional)}.

inline json game_to_json(const MarkovGame& game) {
    const int ns = game.num_states();
    const int nja = game.num_joint_actions();

    json transitions = json::array();
    for (int s = 0; s < ns; ++s) {
        json per_action = json::array();
        for (int ja = 0; ja < nja; ++ja) {
            json row = json::array();
            for (int sp = 0; sp < ns; ++sp) row.push_back(game.prob(s, ja, sp));
            per_action.push_back(std::move(row));
        }
        transitions.push_back(std::move(per_action));
    }

    json rewards = json::array();
    for (int i = 0; i < game.num_agents; ++i) {
        json per_state = json::array();
        for (int s = 0; s < ns; ++s) {
            json row = json::array();
            for (int ja = 0; ja < nja; ++ja) row.push_back(game.rewards[i][game.sa_index(s, ja)]);
            per_state.push_back(std::move(row));
        }
        rewards.push_back(std::move(per_state));
    }

    json out = {{"agents", game.num_agents}, {"states", game.states},  {"actions", game.actions},
                {"transitions", transitions}, {"rewards", rewards},     {"eta", game.initial_dist},
                {"gamma", game.gamma}};

    if (game.has_stochastic_rewards()) {
        json mixtures = json::array();
        for (int s = 0; s < ns; ++s) {
            json per_action = json::array();
            for (int ja = 0; ja < nja; ++ja) {
                json outcomes = json::array();
                for (const auto& o : game.reward_mixtures[game.sa_index(s, ja)])
                    outcomes.push_back({{"prob", o.prob}, {"rewards", o.rewards}});
                per_action.push_back(std::move(outcomes));
            }
            mixtures.push_back(std::move(per_action));
        }
        out["stochastic_rewards"] = {{"kind", "mixture"}, {"outcomes", std::move(mixtures)}};
    }
    return out;
}

inline MarkovGame game_from_json(const json& j) {
    MarkovGame game;
    game.num_agents = j.at("agents").get<int>();
    game.states = j.at("states").get<std::vector<std::string>>();
    game.actions = j.at("actions").get<std::vector<std::vector<std::string>>>();
    game.gamma = j.at("gamma").get<double>();
    game.initial_dist = j.at("eta").get<std::vector<double>>();

    const int ns = game.num_states();
    const int nja = game.num_joint_actions();
    const auto& transitions = j.at("transitions");
    game.transition.assign(static_cast<std::size_t>(ns) * nja * ns, 0.0);
    for (int s = 0; s < ns; ++s)
        for (int ja = 0; ja < nja; ++ja)
            for (int sp = 0; sp < ns; ++sp)
                game.transition[static_cast<std::size_t>(game.sa_index(s, ja)) * ns + sp] =
                    transitions.at(s).at(ja).at(sp).get<double>();

    const auto& rewards = j.at("rewards");
    game.rewards.assign(game.num_agents, std::vector<double>(static_cast<std::size_t>(ns) * nja, 0.0));
    for (int i = 0; i < game.num_agents; ++i)
        for (int s = 0; s < ns; ++s)
            for (int ja = 0; ja < nja; ++ja)
                game.rewards[i][game.sa_index(s, ja)] = rewards.at(i).at(s).at(ja).get<double>();

    if (j.contains("stochastic_rewards")) {
        const auto& stoch = j.at("stochastic_rewards");
        if (stoch.at("kind").get<std::string>() != "mixture")
            throw std::invalid_argument("unsupported stochastic_rewards kind");
        game.reward_mixtures.resize(static_cast<std::size_t>(ns) * nja);
        const auto& outcomes = stoch.at("outcomes");
        for (int s = 0; s < ns; ++s)
            for (int ja = 0; ja < nja; ++ja)
                for (const auto& o : outcomes.at(s).at(ja)) {
                    RewardOutcome outcome;
                    outcome.prob = o.at("prob").get<double>();
                    outcome.rewards = o.at("rewards").get<std::vector<double>>();
                    game.reward_mixtures[game.sa_index(s, ja)].push_back(std::move(outcome));
                }
    }
    return game;
}

// ---------------------------------------------------------------------------
// Policies, occupancies, Q tables: dense per-state (per-agent) rows.

inline json policy_to_json(const JointPolicy& policy) {
    json rows = json::array();
    for (int s = 0; s < policy.num_states; ++s) {
        json row = json::array();
        for (int ja = 0; ja < policy.num_joint_actions; ++ja) row.push_back(policy.at(s, ja));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline JointPolicy policy_from_json(const json& j) {
    JointPolicy policy;
    policy.num_states = static_cast<int>(j.size());
    policy.num_joint_actions = policy.num_states ? static_cast<int>(j.at(0).size()) : 0;
    for (const auto& row : j) {
        if (static_cast<int>(row.size()) != policy.num_joint_actions)
            throw std::invalid_argument("policy rows have inconsistent lengths");
        for (const auto& v : row) policy.probs.push_back(v.get<double>());
    }
    return policy;
}

inline json occupancy_to_json(const OccupancyMeasure& f) {
    json rows = json::array();
    for (int s = 0; s < f.num_states; ++s) {
        json row = json::array();
        for (int ja = 0; ja < f.num_joint_actions; ++ja) row.push_back(f.at(s, ja));
        rows.push_back(std::move(row));
    }
    return rows;
}

inline OccupancyMeasure occupancy_from_json(const json& j) {
    OccupancyMeasure f;
    f.num_states = static_cast<int>(j.size());
    f.num_joint_actions = f.num_states ? static_cast<int>(j.at(0).size()) : 0;
    for (const auto& row : j)
        for (const auto& v : row) f.values.push_back(v.get<double>());
    return f;
}

inline json qtables_to_json(const QTables& q) {
    json agents = json::array();
    for (int i = 0; i < q.num_agents; ++i) {
        json rows = json::array();
        for (int s = 0; s < q.num_states; ++s) {
            json row = json::array();
            for (int ja = 0; ja < q.num_joint_actions; ++ja) row.push_back(q.at(i, s, ja));
            rows.push_back(std::move(row));
        }
        agents.push_back(std::move(rows));
    }
    return agents;
}

inline QTables qtables_from_json(const json& j) {
    QTables q;
    q.num_agents = static_cast<int>(j.size());
    q.num_states = q.num_agents ? static_cast<int>(j.at(0).size()) : 0;
    q.num_joint_actions = q.num_states ? static_cast<int>(j.at(0).at(0).size()) : 0;
    q.values.resize(q.num_agents);
    for (int i = 0; i < q.num_agents; ++i)
        for (const auto& row : j.at(i))
            for (const auto& v : row) q.values[i].push_back(v.get<double>());
    return q;
}

// ---------------------------------------------------------------------------
// DbcpiConfig and RunResult.

inline json config_to_json(const DbcpiConfig& cfg) {
    return {{"iterations", cfg.iterations},
            {"eval_mode", to_string(cfg.eval_mode)},
            {"alpha_start", cfg.alpha_start},
            {"alpha_end", cfg.alpha_end},
            {"alpha_decay", cfg.alpha_decay},
            {"inner_convergence_epsilon", cfg.inner_convergence_epsilon},
            {"inner_max_steps", cfg.inner_max_steps},
            {"seed", cfg.seed}};
}

inline EvalMode eval_mode_from_string(const std::string& name) {
    if (name == "exact") return EvalMode::Exact;
    if (name == "sampled") return EvalMode::Sampled;
    throw std::invalid_argument("unknown eval mode: " + name + " (use exact|sampled)");
}

inline DbcpiConfig config_from_json(const json& j) {
    DbcpiConfig cfg;
    cfg.iterations = j.value("iterations", cfg.iterations);
    if (j.contains("eval_mode")) cfg.eval_mode = eval_mode_from_string(j.at("eval_mode"));
    cfg.alpha_start = j.value("alpha_start", cfg.alpha_start);
    cfg.alpha_end = j.value("alpha_end", cfg.alpha_end);
    cfg.alpha_decay = j.value("alpha_decay", cfg.alpha_decay);
    cfg.inner_convergence_epsilon = j.value("inner_convergence_epsilon", cfg.inner_convergence_epsilon);
    cfg.inner_max_steps = j.value("inner_max_steps", cfg.inner_max_steps);
    cfg.seed = j.value("seed", cfg.seed);
    return cfg;
}

inline json run_result_to_json(const RunResult& r) {
    json out = {{"game", r.game_id},
                {"task", r.task_id},
                {"method", r.method_id},
                {"seed", r.seed},
                {"error", r.error},
                {"max_reg", r.max_reg},
                {"max_bf", r.max_bf},
                {"trace", r.trace},
                {"policy", policy_to_json(r.policy)},
                {"occupancy", occupancy_to_json(r.occupancy)},
                {"q", qtables_to_json(r.q_final)},
                {"runtime_s", r.runtime_s},
                {"td_nonconverged", r.td_nonconverged},
                {"config", config_to_json(r.config)}};
    if (r.has_original_regret()) out["max_reg_original"] = r.max_reg_original;
    return out;
}

inline RunResult run_result_from_json(const json& j) {
    RunResult r;
    r.game_id = j.value("game", "");
    r.task_id = j.value("task", "");
    r.method_id = j.value("method", "");
    r.seed = j.value("seed", std::uint64_t{0});
    r.error = j.at("error").get<double>();
    r.max_reg = j.at("max_reg").get<double>();
    r.max_bf = j.at("max_bf").get<double>();
    if (j.contains("max_reg_original")) r.max_reg_original = j.at("max_reg_original").get<double>();
    r.trace = j.at("trace").get<std::vector<double>>();
    r.policy = policy_from_json(j.at("policy"));
    if (j.contains("occupancy")) r.occupancy = occupancy_from_json(j.at("occupancy"));
    if (j.contains("q")) r.q_final = qtables_from_json(j.at("q"));
    r.runtime_s = j.value("runtime_s", 0.0);
    r.td_nonconverged = j.value("td_nonconverged", 0);
    if (j.contains("config")) r.config = config_from_json(j.at("config"));
    return r;
}

// ---------------------------------------------------------------------------
// Trajectory CSV: step, state, joint_action, reward_1..N.

inline void trajectory_to_csv(const Trajectory& traj, const MarkovGame& game, std::ostream& out) {
    out << "step,state,joint_action";
    for (int i = 1; i <= game.num_agents; ++i) out << ",reward_" << i;
    out << '\n';
    for (std::size_t t = 0; t < traj.steps.size(); ++t) {
        const auto& step = traj.steps[t];
        out << t << ',' << game.states[step.state] << ',' << game.joint_action_name(step.joint_action);
        for (double r : step.rewards) out << ',' << r;
        out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Small file helpers shared by the harness and the CLI.

inline std::string read_text_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

inline void write_text_file(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << content;
    if (!out) throw std::runtime_error("write failed for " + path);
}

inline json load_json_file(const std::string& path) { return json::parse(read_text_file(path)); }

}  // namespace dbce
