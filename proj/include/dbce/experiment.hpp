#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "baselines.hpp"
#include "dbcpi.hpp"
#include "environments.hpp"
#include "json_io.hpp"

namespace dbce {

inline constexpr const char* kOutputDirEnvVar = "DBCE_OUT_DIR";

struct RunTriple {
    std::string game_id;
    std::string task_id;
    std::string method_id;
};

struct ExperimentConfig {
    std::vector<RunTriple> runs;
    std::vector<std::uint64_t> seeds;
    DbcpiConfig base;  // per-run copy gets its seed from `seeds`
    std::string output_dir;
    int threads = 1;
};

struct MethodSpec {
    enum class Kind { Dbce, Ceq, Cm, Rm } kind = Kind::Dbce;
    double parameter = 0.0;  // CM bound b, or RM magnitude |p|
};

inline MethodSpec parse_method(const std::string& method_id) {
    if (method_id == "dbce") return {MethodSpec::Kind::Dbce, 0.0};
    if (method_id == "ceq") return {MethodSpec::Kind::Ceq, 0.0};
    auto parse_suffix = [&](std::size_t prefix_len) {
        const std::string text = method_id.substr(prefix_len);
        std::size_t parsed = 0;
        double value = 0.0;
        try {
            value = std::stod(text, &parsed);
        } catch (const std::exception&) {
            parsed = 0;
        }
        if (text.empty() || parsed != text.size() || !(value >= 0.0) || !std::isfinite(value))
            throw std::invalid_argument("bad method parameter in '" + method_id + "'");
        return value;
    };
    if (method_id.rfind("cm-", 0) == 0) return {MethodSpec::Kind::Cm, parse_suffix(3)};
    if (method_id.rfind("rm-", 0) == 0) return {MethodSpec::Kind::Rm, parse_suffix(3)};
    throw std::invalid_argument("unknown method id: " + method_id +
                                " (use dbce|ceq|cm-<b>|rm-<p>)");
}

/// Validates a triple and runs it. RM is only defined for safety tasks; the
/// modified-game penalty states are the task's S*.
inline RunResult execute_run(const RunTriple& triple, const DbcpiConfig& cfg) {
    const MethodSpec method = parse_method(triple.method_id);
    const MarkovGame game = build_game(triple.game_id);
    const TaskPreset preset = requirement_preset(triple.game_id, triple.task_id);

    RunResult result;
    switch (method.kind) {
        case MethodSpec::Kind::Dbce:
            result = dbcpi_run(game, preset.objective, cfg);
            break;
        case MethodSpec::Kind::Ceq:
            result = run_ce_q(game, cfg, std::nullopt, preset.objective);
            break;
        case MethodSpec::Kind::Cm:
            result = run_ce_q(game, cfg, DensityCap{preset.objective, method.parameter},
                              preset.objective);
            break;
        case MethodSpec::Kind::Rm:
            if (triple.task_id != "safety")
                throw std::invalid_argument("RM applies to safety tasks only (got task '" +
                                            triple.task_id + "')");
            result = run_rm(game, preset.requirement.set_1, -method.parameter, preset.objective, cfg);
            break;
    }
    result.game_id = triple.game_id;
    result.task_id = triple.task_id;
    result.method_id = triple.method_id;  // keep the id exactly as configured
    return result;
}

struct RunRecord {
    RunTriple triple;
    std::uint64_t seed = 0;
    bool failed = false;
    std::string failure;
    RunResult result;
};

struct Stats {
    double mean = std::numeric_limits<double>::quiet_NaN();
    double stddev = std::numeric_limits<double>::quiet_NaN();
};

/// Mean and sample standard deviation (n−1 denominator; 0 when n = 1).
inline Stats compute_stats(const std::vector<double>& values) {
    Stats stats;
    if (values.empty()) return stats;
    double sum = 0.0;
    for (double v : values) sum += v;
    stats.mean = sum / static_cast<double>(values.size());
    if (values.size() == 1) {
        stats.stddev = 0.0;
        return stats;
    }
    double ss = 0.0;
    for (double v : values) ss += (v - stats.mean) * (v - stats.mean);
    stats.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    return stats;
}

struct AggregateRow {
    RunTriple triple;
    int completed = 0;
    Stats error, max_reg, max_bf, runtime;
    Stats max_reg_original;  // populated for RM rows only
};

struct RunReport {
    std::vector<RunRecord> records;      // triple-major, seed-minor
    std::vector<AggregateRow> aggregates;  // one per triple, config order
};

/// Executes every (triple, seed) pair, optionally across worker threads
/// (runs are independent and deterministic, so scheduling cannot change the
/// report). Individual failures are recorded, not fatal.
inline RunReport run_experiment(const ExperimentConfig& cfg) {
    if (cfg.seeds.empty()) throw std::invalid_argument("experiment needs at least one seed");
    for (const auto& triple : cfg.runs) {
        parse_method(triple.method_id);
        requirement_preset(triple.game_id, triple.task_id);
        if (parse_method(triple.method_id).kind == MethodSpec::Kind::Rm &&
            triple.task_id != "safety")
            throw std::invalid_argument("RM applies to safety tasks only (config lists " +
                                        triple.game_id + "/" + triple.task_id + ")");
    }

    RunReport report;
    report.records.resize(cfg.runs.size() * cfg.seeds.size());
    for (std::size_t r = 0; r < cfg.runs.size(); ++r)
        for (std::size_t k = 0; k < cfg.seeds.size(); ++k) {
            auto& record = report.records[r * cfg.seeds.size() + k];
            record.triple = cfg.runs[r];
            record.seed = cfg.seeds[k];
        }

    auto execute_slot = [&](RunRecord& record) {
        DbcpiConfig run_cfg = cfg.base;
        run_cfg.seed = record.seed;
        try {
            record.result = execute_run(record.triple, run_cfg);
        } catch (const std::exception& e) {
            record.failed = true;
            record.failure = e.what();
        }
    };

    const int threads = std::max(1, cfg.threads);
    if (threads == 1 || report.records.size() <= 1) {
        for (auto& record : report.records) execute_slot(record);
    } else {
        std::atomic<std::size_t> next{0};
        auto worker = [&] {
            while (true) {
                const std::size_t slot = next.fetch_add(1);
                if (slot >= report.records.size()) return;
                execute_slot(report.records[slot]);
            }
        };
        std::vector<std::thread> pool;
        const int n = static_cast<int>(
            std::min(static_cast<std::size_t>(threads), report.records.size()));
        pool.reserve(n);
        for (int i = 0; i < n; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }

    for (std::size_t r = 0; r < cfg.runs.size(); ++r) {
        AggregateRow row;
        row.triple = cfg.runs[r];
        std::vector<double> error, reg, bf, runtime, reg_orig;
        for (std::size_t k = 0; k < cfg.seeds.size(); ++k) {
            const auto& record = report.records[r * cfg.seeds.size() + k];
            if (record.failed) continue;
            ++row.completed;
            error.push_back(record.result.error);
            reg.push_back(record.result.max_reg);
            bf.push_back(record.result.max_bf);
            runtime.push_back(record.result.runtime_s);
            if (record.result.has_original_regret())
                reg_orig.push_back(record.result.max_reg_original);
        }
        row.error = compute_stats(error);
        row.max_reg = compute_stats(reg);
        row.max_bf = compute_stats(bf);
        row.runtime = compute_stats(runtime);
        row.max_reg_original = compute_stats(reg_orig);
        report.aggregates.push_back(std::move(row));
    }
    return report;
}

// ---------------------------------------------------------------------------
// Serialization.

inline json experiment_config_to_json(const ExperimentConfig& cfg) {
    json runs = json::array();
    for (const auto& t : cfg.runs)
        runs.push_back({{"game", t.game_id}, {"task", t.task_id}, {"method", t.method_id}});
    return {{"runs", runs},
            {"seeds", cfg.seeds},
            {"config", config_to_json(cfg.base)},
            {"output_dir", cfg.output_dir},
            {"threads", cfg.threads}};
}

inline ExperimentConfig experiment_config_from_json(const json& j) {
    ExperimentConfig cfg;
    for (const auto& r : j.at("runs"))
        cfg.runs.push_back({r.at("game").get<std::string>(), r.at("task").get<std::string>(),
                            r.at("method").get<std::string>()});
    cfg.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("config")) cfg.base = config_from_json(j.at("config"));
    cfg.output_dir = j.value("output_dir", "");
    cfg.threads = j.value("threads", 1);
    return cfg;
}

inline json report_to_json(const RunReport& report) {
    json records = json::array();
    for (const auto& record : report.records) {
        json row = {{"game", record.triple.game_id},
                    {"task", record.triple.task_id},
                    {"method", record.triple.method_id},
                    {"seed", record.seed},
                    {"failed", record.failed}};
        if (record.failed)
            row["failure"] = record.failure;
        else
            row["result"] = run_result_to_json(record.result);
        records.push_back(std::move(row));
    }
    json aggregates = json::array();
    auto stats_json = [](const Stats& s) { return json{{"mean", s.mean}, {"std", s.stddev}}; };
    for (const auto& row : report.aggregates) {
        json agg = {{"game", row.triple.game_id},
                    {"task", row.triple.task_id},
                    {"method", row.triple.method_id},
                    {"completed", row.completed},
                    {"error", stats_json(row.error)},
                    {"max_reg", stats_json(row.max_reg)},
                    {"max_bf", stats_json(row.max_bf)},
                    {"runtime_s", stats_json(row.runtime)}};
        if (!std::isnan(row.max_reg_original.mean))
            agg["max_reg_original"] = stats_json(row.max_reg_original);
        aggregates.push_back(std::move(agg));
    }
    return {{"records", records}, {"aggregates", aggregates}};
}

/// Shortest round-trip decimal for CSV cells (exactly re-parseable).
inline std::string format_double(double value) {
    if (std::isnan(value)) return "";
    char buffer[32];
    const auto out = std::to_chars(buffer, buffer + sizeof buffer, value);
    return std::string(buffer, out.ptr);
}

inline std::string runs_csv(const RunReport& report) {
    std::string out = "game,task,method,seed,error,max_reg,max_bf,runtime_s,max_reg_original,failed\n";
    for (const auto& record : report.records) {
        out += record.triple.game_id + ',' + record.triple.task_id + ',' + record.triple.method_id +
               ',' + std::to_string(record.seed) + ',';
        if (!record.failed) {
            const auto& r = record.result;
            out += format_double(r.error) + ',' + format_double(r.max_reg) + ',' +
                   format_double(r.max_bf) + ',' + format_double(r.runtime_s) + ',' +
                   (r.has_original_regret() ? format_double(r.max_reg_original) : "");
        } else {
            out += ",,,,";
        }
        out += record.failed ? ",1\n" : ",0\n";
    }
    return out;
}

inline std::string aggregates_csv(const RunReport& report) {
    std::string out =
        "game,task,method,completed,error_mean,error_std,max_reg_mean,max_reg_std,"
        "max_bf_mean,max_bf_std,runtime_s_mean,runtime_s_std,"
        "max_reg_original_mean,max_reg_original_std\n";
    for (const auto& row : report.aggregates) {
        out += row.triple.game_id + ',' + row.triple.task_id + ',' + row.triple.method_id + ',' +
               std::to_string(row.completed) + ',' + format_double(row.error.mean) + ',' +
               format_double(row.error.stddev) + ',' + format_double(row.max_reg.mean) + ',' +
               format_double(row.max_reg.stddev) + ',' + format_double(row.max_bf.mean) + ',' +
               format_double(row.max_bf.stddev) + ',' + format_double(row.runtime.mean) + ',' +
               format_double(row.runtime.stddev) + ',' + format_double(row.max_reg_original.mean) +
               ',' + format_double(row.max_reg_original.stddev) + '\n';
    }
    return out;
}

inline std::string traces_csv(const RunReport& report) {
    std::string out = "game,task,method,seed,iteration,error\n";
    for (const auto& record : report.records) {
        if (record.failed) continue;
        const std::string prefix = record.triple.game_id + ',' + record.triple.task_id + ',' +
                                   record.triple.method_id + ',' + std::to_string(record.seed) + ',';
        for (std::size_t t = 0; t < record.result.trace.size(); ++t)
            out += prefix + std::to_string(t) + ',' + format_double(record.result.trace[t]) + '\n';
    }
    return out;
}

/// Writes the report in one format into `out_dir` and returns the paths.
/// Formats: "json" → report.json; "csv" → runs.csv + aggregates.csv;
/// "trace-csv" → traces.csv.
inline std::vector<std::string> emit_report(const RunReport& report, const std::string& format,
                                            const std::string& out_dir) {
    std::filesystem::create_directories(out_dir);
    const auto path = [&](const char* name) { return (std::filesystem::path(out_dir) / name).string(); };
    std::vector<std::string> written;
    if (format == "json") {
        written.push_back(path("report.json"));
        write_text_file(written.back(), report_to_json(report).dump(2) + "\n");
    } else if (format == "csv") {
        written.push_back(path("runs.csv"));
        write_text_file(written.back(), runs_csv(report));
        written.push_back(path("aggregates.csv"));
        write_text_file(written.back(), aggregates_csv(report));
    } else if (format == "trace-csv") {
        written.push_back(path("traces.csv"));
        write_text_file(written.back(), traces_csv(report));
    } else {
        throw std::invalid_argument("unknown report format: " + format +
                                    " (use json|csv|trace-csv)");
    }
    return written;
}

/// The full benchmark grid: DBCE and both CM bounds on all three tasks per
/// game, RM on the safety task only (reward penalties only make sense for
/// states one wants to avoid outright).
inline std::vector<RunTriple> benchmark_grid() {
    std::vector<RunTriple> grid;
    for (const auto& game : game_ids()) {
        const BaselineDefaults defaults = baseline_defaults(game);
        for (const auto& task : task_ids()) {
            grid.push_back({game, task, "dbce"});
            grid.push_back({game, task, "cm-" + format_bound(defaults.cm_tight)});
            grid.push_back({game, task, "cm-" + format_bound(defaults.cm_loose)});
        }
        grid.push_back({game, "safety", "rm-" + format_bound(-defaults.rm_p)});
    }
    return grid;
}

}  // namespace dbce
