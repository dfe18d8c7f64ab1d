#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dbce {

/// Tolerance for probability rows (transition rows, initial distribution,
/// policy rows, reward-mixture weights).
inline constexpr double kProbTol = 1e-9;

/// One branch of a stochastic reward: with probability `prob` every agent i
/// receives `rewards[i]`.
struct RewardOutcome {
    double prob = 0.0;
    std::vector<double> rewards;
};

/// Tabular N-agent Markov game.
///
/// Joint actions are indexed in mixed radix with agent 0 as the most
/// significant digit. All dense tables are flat and row-major:
///   transition[(s * JA + ja) * S + s']   = P(s' | s, ja)
///   rewards[i][s * JA + ja]              = expected reward of agent i
///
/// Games with stochastic rewards carry a finite mixture per (s, ja) in
/// `reward_mixtures`; the `rewards` tables then hold the expectations.
/// Exact evaluation uses the expectations, sampling draws from the mixture.
struct MarkovGame {
    int num_agents = 0;
    std::vector<std::string> states;
    std::vector<std::vector<std::string>> actions;  // per-agent action names
    std::vector<double> transition;
    std::vector<std::vector<double>> rewards;
    std::vector<double> initial_dist;
    double gamma = 0.99;
    std::vector<std::vector<RewardOutcome>> reward_mixtures;  // empty if deterministic

    int num_states() const { return static_cast<int>(states.size()); }

    std::vector<int> action_counts() const {
        std::vector<int> counts(actions.size());
        for (std::size_t i = 0; i < actions.size(); ++i) counts[i] = static_cast<int>(actions[i].size());
        return counts;
    }

    int num_joint_actions() const {
        int n = 1;
        for (const auto& a : actions) n *= static_cast<int>(a.size());
        return n;
    }

    bool has_stochastic_rewards() const { return !reward_mixtures.empty(); }

    int sa_index(int s, int ja) const { return s * num_joint_actions() + ja; }

    double prob(int s, int ja, int s_next) const {
        return transition[static_cast<std::size_t>(sa_index(s, ja)) * num_states() + s_next];
    }

    /// Stride of agent i's digit in the joint-action index.
    int action_stride(int agent) const {
        int stride = 1;
        for (int j = num_agents - 1; j > agent; --j) stride *= static_cast<int>(actions[j].size());
        return stride;
    }

    int joint_index(const std::vector<int>& per_agent) const {
        int ja = 0;
        for (int i = 0; i < num_agents; ++i) ja = ja * static_cast<int>(actions[i].size()) + per_agent[i];
        return ja;
    }

    std::vector<int> split_joint(int ja) const {
        std::vector<int> out(num_agents);
        for (int i = num_agents - 1; i >= 0; --i) {
            const int n = static_cast<int>(actions[i].size());
            out[i] = ja % n;
            ja /= n;
        }
        return out;
    }

    int agent_action_of(int ja, int agent) const {
        return (ja / action_stride(agent)) % static_cast<int>(actions[agent].size());
    }

    /// Joint index with agent's digit replaced by `a`.
    int replace_action(int ja, int agent, int a) const {
        const int stride = action_stride(agent);
        const int cur = (ja / stride) % static_cast<int>(actions[agent].size());
        return ja + (a - cur) * stride;
    }

    std::string joint_action_name(int ja) const {
        const auto split = split_joint(ja);
        std::string name;
        for (int i = 0; i < num_agents; ++i) {
            if (i > 0) name += '|';
            name += actions[i][split[i]];
        }
        return name;
    }

    int state_index(const std::string& name) const {
        for (int s = 0; s < num_states(); ++s)
            if (states[s] == name) return s;
        throw std::invalid_argument("unknown state: " + name);
    }
};

/// Per-state probability distribution over joint actions (the correlation
/// device). Rows sum to one.
struct JointPolicy {
    int num_states = 0;
    int num_joint_actions = 0;
    std::vector<double> probs;

    static JointPolicy uniform(const MarkovGame& game) {
        JointPolicy pi;
        pi.num_states = game.num_states();
        pi.num_joint_actions = game.num_joint_actions();
        pi.probs.assign(static_cast<std::size_t>(pi.num_states) * pi.num_joint_actions,
                        1.0 / pi.num_joint_actions);
        return pi;
    }

    double at(int s, int ja) const { return probs[static_cast<std::size_t>(s) * num_joint_actions + ja]; }
    double& at(int s, int ja) { return probs[static_cast<std::size_t>(s) * num_joint_actions + ja]; }
};

struct ValidationReport {
    std::vector<std::string> problems;

    bool ok() const { return problems.empty(); }

    std::string to_string() const {
        if (problems.empty()) return "valid\n";
        std::ostringstream out;
        for (const auto& p : problems) out << p << '\n';
        return out.str();
    }
};

namespace detail {
inline void check_distribution(const double* row, int n, const std::string& where, double tol,
                               std::vector<std::string>& problems) {
    double sum = 0.0;
    for (int k = 0; k < n; ++k) {
        if (row[k] < 0.0) {
            std::ostringstream msg;
            msg << where << ": negative entry " << row[k] << " at position " << k;
            problems.push_back(msg.str());
        }
        sum += row[k];
    }
    if (std::fabs(sum - 1.0) > tol) {
        std::ostringstream msg;
        msg << where << ": sums to " << sum << " (deficit " << (1.0 - sum) << ")";
        problems.push_back(msg.str());
    }
}
}  // namespace detail

/// Checks every structural invariant of the game and reports all violations
/// with their location. An empty report means the game is usable.
inline ValidationReport validate_game(const MarkovGame& game) {
    ValidationReport report;
    auto add = [&report](const std::string& msg) { report.problems.push_back(msg); };

    if (game.num_agents < 1) add("num_agents must be >= 1");
    if (static_cast<int>(game.actions.size()) != game.num_agents)
        add("actions: expected one action list per agent");
    for (std::size_t i = 0; i < game.actions.size(); ++i)
        if (game.actions[i].empty()) add("agent " + std::to_string(i) + " has no actions");
    if (game.states.empty()) add("no states");
    if (!(game.gamma > 0.0 && game.gamma < 1.0)) add("gamma must lie in (0,1)");
    if (!report.ok()) return report;  // shape is broken, table checks would misindex

    const int S = game.num_states();
    const int JA = game.num_joint_actions();

    if (static_cast<int>(game.transition.size()) != S * JA * S)
        add("transition table has wrong size");
    if (static_cast<int>(game.rewards.size()) != game.num_agents)
        add("rewards: expected one table per agent");
    for (std::size_t i = 0; i < game.rewards.size(); ++i)
        if (static_cast<int>(game.rewards[i].size()) != S * JA)
            add("rewards[" + std::to_string(i) + "] has wrong size");
    if (static_cast<int>(game.initial_dist.size()) != S) add("initial_dist has wrong size");
    if (!report.ok()) return report;

    for (int s = 0; s < S; ++s)
        for (int ja = 0; ja < JA; ++ja) {
            std::ostringstream where;
            where << "P(.|s=" << game.states[s] << ", a=" << game.joint_action_name(ja) << ")";
            detail::check_distribution(&game.transition[static_cast<std::size_t>(game.sa_index(s, ja)) * S],
                                       S, where.str(), kProbTol, report.problems);
        }
    detail::check_distribution(game.initial_dist.data(), S, "initial_dist", kProbTol, report.problems);

    for (int i = 0; i < game.num_agents; ++i)
        for (int sa = 0; sa < S * JA; ++sa)
            if (!std::isfinite(game.rewards[i][sa]))
                add("rewards[" + std::to_string(i) + "][" + std::to_string(sa) + "] is not finite");

    if (game.has_stochastic_rewards()) {
        if (static_cast<int>(game.reward_mixtures.size()) != S * JA) {
            add("reward_mixtures has wrong size");
            return report;
        }
        for (int sa = 0; sa < S * JA; ++sa) {
            const auto& mix = game.reward_mixtures[sa];
            if (mix.empty()) continue;  // deterministic at this pair; the tables apply
            double total = 0.0;
            std::vector<double> mean(game.num_agents, 0.0);
            for (const auto& outcome : mix) {
                if (outcome.prob < 0.0) add("reward mixture " + std::to_string(sa) + ": negative probability");
                if (static_cast<int>(outcome.rewards.size()) != game.num_agents)
                    add("reward mixture " + std::to_string(sa) + ": wrong reward vector size");
                else
                    for (int i = 0; i < game.num_agents; ++i) mean[i] += outcome.prob * outcome.rewards[i];
                total += outcome.prob;
            }
            if (std::fabs(total - 1.0) > kProbTol)
                add("reward mixture " + std::to_string(sa) + ": probabilities sum to " + std::to_string(total));
            else
                for (int i = 0; i < game.num_agents; ++i)
                    if (std::fabs(mean[i] - game.rewards[i][sa]) > 1e-9)
                        add("reward mixture " + std::to_string(sa) +
                            ": expectation disagrees with declared reward table for agent " + std::to_string(i));
        }
    }
    return report;
}

/// Throws unless the policy has the game's shape and valid probability rows.
inline void check_policy(const MarkovGame& game, const JointPolicy& policy) {
    const int S = game.num_states();
    const int JA = game.num_joint_actions();
    if (policy.num_states != S || policy.num_joint_actions != JA ||
        static_cast<int>(policy.probs.size()) != S * JA)
        throw std::invalid_argument("policy shape does not match game");
    for (int s = 0; s < S; ++s) {
        double sum = 0.0;
        for (int ja = 0; ja < JA; ++ja) {
            const double p = policy.at(s, ja);
            if (p < 0.0) throw std::invalid_argument("policy has a negative entry at state " + game.states[s]);
            sum += p;
        }
        if (std::fabs(sum - 1.0) > kProbTol)
            throw std::invalid_argument("policy row at state " + game.states[s] + " does not sum to 1");
    }
}

}  // namespace dbce
