#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "density.hpp"
#include "markov_game.hpp"
#include "trajectory.hpp"

namespace dbce {

/// FairGamble: two gamblers repeatedly pick numbers 0..2; the gap |a₁−a₂|
/// selects which of three zero-mean games is played next (equal → G1,
/// off-by-one → G2, off-by-two → G3). The current game pays a fair coin of
/// stakes 0 / ±0.5 / ±1, so every expected reward is exactly zero.
inline MarkovGame build_fair_gamble() {
    MarkovGame game;
    game.num_agents = 2;
    game.states = {"G1", "G2", "G3"};
    game.actions = {{"0", "1", "2"}, {"0", "1", "2"}};
    game.gamma = 0.99;
    game.initial_dist.assign(3, 1.0 / 3.0);

    const int ns = 3;
    const int nja = game.num_joint_actions();
    game.transition.assign(static_cast<std::size_t>(ns) * nja * ns, 0.0);
    game.rewards.assign(2, std::vector<double>(static_cast<std::size_t>(ns) * nja, 0.0));
    game.reward_mixtures.resize(static_cast<std::size_t>(ns) * nja);

    for (int s = 0; s < ns; ++s)
        for (int ja = 0; ja < nja; ++ja) {
            const auto acts = game.split_joint(ja);
            const int next = acts[0] > acts[1] ? acts[0] - acts[1] : acts[1] - acts[0];
            game.transition[static_cast<std::size_t>(game.sa_index(s, ja)) * ns + next] = 1.0;
            if (s > 0) {
                const double stake = s == 1 ? 0.5 : 1.0;
                game.reward_mixtures[game.sa_index(s, ja)] = {{0.5, {stake, -stake}},
                                                              {0.5, {-stake, stake}}};
            }
        }
    return game;
}

namespace detail {
// Hunters state index packs the three locations as bits, in = 0 / out = 1.
inline bool hunter_out(int state, int hunter) { return (state >> (2 - hunter)) & 1; }
}  // namespace detail

/// Hunters: three hunters choose hunt/guard each round. Hunting from inside
/// the village earns 1 (plus 0.1 to the others), hunting while outside
/// earns 0.5 at the others' expense, guarding pays 0.5 to everyone; with at
/// most one guard the village is raided and everyone takes −3. The state
/// tracks who ended up in (guarded) or out (hunting).
inline MarkovGame build_hunters() {
    MarkovGame game;
    game.num_agents = 3;
    game.actions = {{"hunt", "guard"}, {"hunt", "guard"}, {"hunt", "guard"}};
    game.gamma = 0.99;
    for (int s = 0; s < 8; ++s) {
        std::string name;
        for (int h = 0; h < 3; ++h) {
            if (h) name += '|';
            name += detail::hunter_out(s, h) ? "out" : "in";
        }
        game.states.push_back(name);
    }
    game.initial_dist.assign(8, 0.0);
    game.initial_dist[0] = 1.0;  // everyone starts in the village

    const int ns = 8;
    const int nja = game.num_joint_actions();
    game.transition.assign(static_cast<std::size_t>(ns) * nja * ns, 0.0);
    game.rewards.assign(3, std::vector<double>(static_cast<std::size_t>(ns) * nja, 0.0));

    for (int s = 0; s < ns; ++s)
        for (int ja = 0; ja < nja; ++ja) {
            const auto acts = game.split_joint(ja);  // 0 = hunt, 1 = guard
            int next = 0;
            int guards = 0;
            double reward[3] = {0.0, 0.0, 0.0};
            for (int h = 0; h < 3; ++h) {
                if (acts[h] == 0) {
                    next |= 1 << (2 - h);
                    if (!detail::hunter_out(s, h)) {
                        reward[h] += 1.0;
                        for (int o = 0; o < 3; ++o)
                            if (o != h) reward[o] += 0.1;
                    } else {
                        reward[h] += 0.5;
                        for (int o = 0; o < 3; ++o)
                            if (o != h) reward[o] -= 0.5;
                    }
                } else {
                    ++guards;
                    for (int o = 0; o < 3; ++o) reward[o] += 0.5;
                }
            }
            if (guards <= 1)
                for (int o = 0; o < 3; ++o) reward[o] -= 3.0;
            game.transition[static_cast<std::size_t>(game.sa_index(s, ja)) * ns + next] = 1.0;
            for (int o = 0; o < 3; ++o) game.rewards[o][game.sa_index(s, ja)] = reward[o];
        }
    return game;
}

/// Collect-and-Explore: three trapped agents either explore a way out or
/// collect food. One of the explorers (uniformly) becomes "the" explorer —
/// remembered as the state. The shared reward is 1 if anyone explores plus
/// 0.3 per collecting agent, identical for all three.
inline MarkovGame build_collect_explore() {
    MarkovGame game;
    game.num_agents = 3;
    game.states = {"none", "explorer-1", "explorer-2", "explorer-3"};
    game.actions = {{"explore", "collect"}, {"explore", "collect"}, {"explore", "collect"}};
    game.gamma = 0.99;
    game.initial_dist = {1.0, 0.0, 0.0, 0.0};

    const int ns = 4;
    const int nja = game.num_joint_actions();
    game.transition.assign(static_cast<std::size_t>(ns) * nja * ns, 0.0);
    game.rewards.assign(3, std::vector<double>(static_cast<std::size_t>(ns) * nja, 0.0));

    for (int s = 0; s < ns; ++s)
        for (int ja = 0; ja < nja; ++ja) {
            const auto acts = game.split_joint(ja);  // 0 = explore, 1 = collect
            std::vector<int> explorers;
            for (int i = 0; i < 3; ++i)
                if (acts[i] == 0) explorers.push_back(i);
            double* row = &game.transition[static_cast<std::size_t>(game.sa_index(s, ja)) * ns];
            if (explorers.empty()) {
                row[0] = 1.0;
            } else {
                for (int i : explorers) row[1 + i] = 1.0 / static_cast<double>(explorers.size());
            }
            const double shared = (explorers.empty() ? 0.0 : 1.0) +
                                  0.3 * static_cast<double>(3 - explorers.size());
            for (int i = 0; i < 3; ++i) game.rewards[i][game.sa_index(s, ja)] = shared;
        }
    return game;
}

inline MarkovGame build_game(const std::string& game_id) {
    if (game_id == "fairgamble") return build_fair_gamble();
    if (game_id == "hunters") return build_hunters();
    if (game_id == "cae") return build_collect_explore();
    throw std::invalid_argument("unknown game id: " + game_id);
}

inline const std::vector<std::string>& game_ids() {
    static const std::vector<std::string> ids = {"fairgamble", "hunters", "cae"};
    return ids;
}

inline const std::vector<std::string>& task_ids() {
    static const std::vector<std::string> ids = {"safety", "freq-10", "fairness"};
    return ids;
}

struct TaskPreset {
    DensityObjective objective;
    RequirementSpec requirement;
};

/// The nine (game, task) pairs studied in the experiments. The density
/// objective is the exact weighted form; the RequirementSpec carries the
/// plain state sets used for trajectory scoring.
inline TaskPreset requirement_preset(const std::string& game_id, const std::string& task_id) {
    auto indicator = [](int n, const std::vector<int>& set) {
        std::vector<double> w(n, 0.0);
        for (int s : set) w[s] = 1.0;
        return w;
    };

    std::vector<int> set_1, set_2;
    std::vector<double> w1, w2;
    int ns = 0;
    if (game_id == "fairgamble") {
        ns = 3;
        if (task_id == "fairness") {
            set_1 = {0};
            set_2 = {1};
        } else {
            set_1 = {2};  // avoid the high-stakes game G3
        }
        w1 = indicator(ns, set_1);
        w2 = indicator(ns, set_2);
    } else if (game_id == "hunters") {
        ns = 8;
        if (task_id == "fairness") {
            // Hunter 1 out as often as hunters 2 and 3 combined.
            w1.assign(ns, 0.0);
            w2.assign(ns, 0.0);
            for (int s = 0; s < ns; ++s) {
                if (detail::hunter_out(s, 0)) {
                    w1[s] = 1.0;
                    set_1.push_back(s);
                }
                w2[s] = (detail::hunter_out(s, 1) ? 1.0 : 0.0) +
                        (detail::hunter_out(s, 2) ? 1.0 : 0.0);
                if (w2[s] > 0.0) set_2.push_back(s);
            }
        } else {
            for (int s = 0; s < ns; ++s) {
                const int inside = (detail::hunter_out(s, 0) ? 0 : 1) +
                                   (detail::hunter_out(s, 1) ? 0 : 1) +
                                   (detail::hunter_out(s, 2) ? 0 : 1);
                if (inside <= 1) set_1.push_back(s);  // village underdefended
            }
            w1 = indicator(ns, set_1);
            w2.assign(ns, 0.0);
        }
    } else if (game_id == "cae") {
        ns = 4;
        if (task_id == "fairness") {
            set_1 = {1};
            set_2 = {2, 3};
        } else {
            set_1 = {1};  // agent 1 sent out to explore
        }
        w1 = indicator(ns, set_1);
        w2 = indicator(ns, set_2);
    } else {
        throw std::invalid_argument("unknown game id: " + game_id);
    }

    TaskPreset preset;
    if (task_id == "safety") {
        preset.objective = DensityObjective::min_density(w1);
        preset.requirement = {RequirementKind::Safety, set_1, {}, 0.0};
    } else if (task_id == "freq-10") {
        preset.objective = DensityObjective::frequency_match(w1, 0.1);
        preset.requirement = {RequirementKind::Frequency, set_1, {}, 0.1};
    } else if (task_id == "fairness") {
        preset.objective = DensityObjective::density_gap(w1, w2);
        preset.requirement = {RequirementKind::Fairness, set_1, set_2, 0.0};
    } else {
        throw std::invalid_argument("unknown task id: " + task_id);
    }
    return preset;
}

/// Baseline parameters used by the experiment grid: CM bounds and the RM
/// reward penalty (negative), per game.
struct BaselineDefaults {
    double rm_p;
    double cm_tight = 0.05;
    double cm_loose;
};

inline BaselineDefaults baseline_defaults(const std::string& game_id) {
    if (game_id == "fairgamble" || game_id == "hunters") return {-1.5, 0.05, 5.0};
    if (game_id == "cae") return {-0.5, 0.05, 25.0};
    throw std::invalid_argument("unknown game id: " + game_id);
}

}  // namespace dbce
