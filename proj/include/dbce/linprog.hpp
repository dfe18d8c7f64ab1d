#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace dbce {

enum class LpSense { Minimize, Maximize };
enum class LpRelation { LessEq, Equal, GreaterEq };
enum class LpStatus { Optimal, Infeasible, Unbounded, NumericalFailure };

inline const char* to_string(LpStatus status) {
    switch (status) {
        case LpStatus::Optimal: return "optimal";
        case LpStatus::Infeasible: return "infeasible";
        case LpStatus::Unbounded: return "unbounded";
        case LpStatus::NumericalFailure: return "numerical_failure";
    }
    return "?";
}

struct LpConstraint {
    std::vector<double> coeffs;
    LpRelation rel = LpRelation::LessEq;
    double rhs = 0.0;
};

/// Dense LP: objective over num_vars variables, a row list of constraints,
/// and per-variable bounds (lower defaults to 0, upper optional).
struct LinearProgram {
    int num_vars = 0;
    LpSense sense = LpSense::Minimize;
    std::vector<double> objective;
    std::vector<LpConstraint> constraints;
    std::vector<double> lower_bounds;
    std::vector<double> upper_bounds;  // +inf when unbounded above

    LinearProgram() = default;
    explicit LinearProgram(int n, LpSense s = LpSense::Minimize)
        : num_vars(n),
          sense(s),
          objective(n, 0.0),
          lower_bounds(n, 0.0),
          upper_bounds(n, std::numeric_limits<double>::infinity()) {}

    void add_constraint(std::vector<double> coeffs, LpRelation rel, double rhs) {
        if (static_cast<int>(coeffs.size()) != num_vars)
            throw std::invalid_argument("constraint coefficient vector has wrong length");
        if (!std::isfinite(rhs)) throw std::invalid_argument("constraint rhs must be finite");
        constraints.push_back({std::move(coeffs), rel, rhs});
    }
};

struct LpSolution {
    LpStatus status = LpStatus::NumericalFailure;
    std::vector<double> values;
    double objective_value = 0.0;
    long iterations = 0;
    std::string diagnostics;
};

namespace detail {

inline constexpr double kPivotTol = 1e-9;

/// Full dense simplex tableau with the cost row stored last. Basis handling
/// follows Bland's rule, which cannot cycle and keeps runs deterministic.
struct SimplexTableau {
    int rows = 0;
    int cols = 0;  // structural + slack + artificial columns, excluding rhs
    std::vector<double> t;  // (rows + 1) x (cols + 1), last row = cost, last col = rhs
    std::vector<int> basis;
    long pivots = 0;

    double& at(int r, int c) { return t[static_cast<std::size_t>(r) * (cols + 1) + c]; }
    double at(int r, int c) const { return t[static_cast<std::size_t>(r) * (cols + 1) + c]; }
    double& rhs(int r) { return at(r, cols); }
    double& cost(int c) { return at(rows, c); }

    void pivot(int prow, int pcol) {
        const double pv = at(prow, pcol);
        const double inv = 1.0 / pv;
        for (int c = 0; c <= cols; ++c) at(prow, c) *= inv;
        at(prow, pcol) = 1.0;
        for (int r = 0; r <= rows; ++r) {
            if (r == prow) continue;
            const double factor = at(r, pcol);
            if (factor == 0.0) continue;
            for (int c = 0; c <= cols; ++c) at(r, c) -= factor * at(prow, c);
            at(r, pcol) = 0.0;
        }
        basis[prow] = pcol;
        ++pivots;
    }

    /// One simplex phase over the admissible columns. Pricing is Dantzig's
    /// rule (most negative reduced cost) with the leaving row picked among
    /// the minimum-ratio ties by largest pivot magnitude; after a long run
    /// of degenerate pivots it falls back to Bland's rule, which provably
    /// escapes any degenerate vertex, and reverts once the objective moves
    /// again. Returns Optimal, Unbounded, or NumericalFailure (pivot cap).
    LpStatus run(const std::vector<bool>& enterable, long max_pivots) {
        long stalled = 0;
        const long stall_limit = 200 + 2L * (rows + cols);
        while (true) {
            const bool anti_cycle = stalled > stall_limit;

            int entering = -1;
            double best_cost = -kPivotTol;
            for (int c = 0; c < cols; ++c) {
                if (!enterable[c]) continue;
                const double rc = cost(c);
                if (rc < best_cost) {
                    entering = c;
                    if (anti_cycle) break;  // Bland: first improving column
                    best_cost = rc;         // Dantzig: most negative cost
                }
            }
            if (entering < 0) return LpStatus::Optimal;

            // Two-pass ratio test: establish the true minimum ratio first,
            // then break ties separately. Folding both into one pass and
            // updating the reference inside the tie window lets the
            // "minimum" drift upward across chained near-ties, which pivots
            // past the blocking row and drives basic values negative.
            // Slightly negative basic values are roundoff and clamp to zero.
            double min_ratio = std::numeric_limits<double>::infinity();
            for (int r = 0; r < rows; ++r) {
                const double a = at(r, entering);
                if (a <= kPivotTol) continue;
                min_ratio = std::min(min_ratio, std::max(rhs(r), 0.0) / a);
            }
            if (!std::isfinite(min_ratio)) return LpStatus::Unbounded;

            const double tie = kPivotTol * (1.0 + min_ratio);
            int leaving = -1;
            for (int r = 0; r < rows; ++r) {
                const double a = at(r, entering);
                if (a <= kPivotTol) continue;
                if (std::max(rhs(r), 0.0) / a > min_ratio + tie) continue;
                if (leaving < 0) {
                    leaving = r;
                } else if (anti_cycle) {
                    if (basis[r] < basis[leaving]) leaving = r;
                } else if (a > at(leaving, entering)) {
                    leaving = r;
                }
            }

            pivot(leaving, entering);
            if (pivots > max_pivots) return LpStatus::NumericalFailure;
            stalled = min_ratio > kPivotTol ? 0 : stalled + 1;
        }
    }
};

}  // namespace detail

/// Two-phase dense primal simplex. Variables are shifted by their lower
/// bounds; finite upper bounds become explicit rows, equality and >= rows
/// get phase-1 artificials. Deterministic: identical inputs yield bitwise
/// identical solutions.
inline LpSolution solve_lp(const LinearProgram& lp) {
    const int n = lp.num_vars;
    if (static_cast<int>(lp.objective.size()) != n || static_cast<int>(lp.lower_bounds.size()) != n ||
        static_cast<int>(lp.upper_bounds.size()) != n)
        throw std::invalid_argument("solve_lp: inconsistent LinearProgram vectors");

    struct Row {
        std::vector<double> coeffs;
        LpRelation rel;
        double rhs;
    };
    std::vector<Row> rows;
    rows.reserve(lp.constraints.size() + static_cast<std::size_t>(n));
    for (const auto& c : lp.constraints) {
        double shifted = c.rhs;
        for (int j = 0; j < n; ++j) shifted -= c.coeffs[j] * lp.lower_bounds[j];
        rows.push_back({c.coeffs, c.rel, shifted});
    }
    for (int j = 0; j < n; ++j) {
        if (!std::isfinite(lp.upper_bounds[j])) continue;
        std::vector<double> coeffs(n, 0.0);
        coeffs[j] = 1.0;
        rows.push_back({std::move(coeffs), LpRelation::LessEq, lp.upper_bounds[j] - lp.lower_bounds[j]});
    }

    // rhs >= 0 normalization
    for (auto& row : rows) {
        if (row.rhs >= 0.0) continue;
        for (double& v : row.coeffs) v = -v;
        row.rhs = -row.rhs;
        row.rel = row.rel == LpRelation::LessEq    ? LpRelation::GreaterEq
                  : row.rel == LpRelation::GreaterEq ? LpRelation::LessEq
                                                     : LpRelation::Equal;
    }

    // Row equilibration: rescale every row to unit max-abs coefficient so
    // the pivot tolerances act relatively. Stage rows mix O(1) flow terms
    // with value differences in the hundreds, and an unscaled tableau of
    // that kind sheds precision quickly.
    for (auto& row : rows) {
        double scale = 0.0;
        for (double v : row.coeffs) scale = std::max(scale, std::fabs(v));
        if (scale <= 0.0) continue;
        const double inv = 1.0 / scale;
        for (double& v : row.coeffs) v *= inv;
        row.rhs *= inv;
    }

    const int m = static_cast<int>(rows.size());
    int num_slack = 0, num_art = 0;
    for (const auto& row : rows) {
        if (row.rel != LpRelation::Equal) ++num_slack;
        if (row.rel != LpRelation::LessEq) ++num_art;
    }

    detail::SimplexTableau tab;
    tab.rows = m;
    tab.cols = n + num_slack + num_art;
    tab.t.assign(static_cast<std::size_t>(m + 1) * (tab.cols + 1), 0.0);
    tab.basis.assign(m, -1);

    const int slack_base = n;
    const int art_base = n + num_slack;
    int next_slack = 0, next_art = 0;
    for (int r = 0; r < m; ++r) {
        for (int j = 0; j < n; ++j) tab.at(r, j) = rows[r].coeffs[j];
        tab.rhs(r) = rows[r].rhs;
        switch (rows[r].rel) {
            case LpRelation::LessEq:
                tab.at(r, slack_base + next_slack) = 1.0;
                tab.basis[r] = slack_base + next_slack++;
                break;
            case LpRelation::GreaterEq:
                tab.at(r, slack_base + next_slack++) = -1.0;
                tab.at(r, art_base + next_art) = 1.0;
                tab.basis[r] = art_base + next_art++;
                break;
            case LpRelation::Equal:
                tab.at(r, art_base + next_art) = 1.0;
                tab.basis[r] = art_base + next_art++;
                break;
        }
    }

    const long max_pivots = 10000L * (m + tab.cols);
    LpSolution sol;

    std::vector<bool> enterable(tab.cols, true);

    // Phase 1: minimize the sum of artificials.
    if (num_art > 0) {
        for (int c = art_base; c < tab.cols; ++c) tab.cost(c) = 1.0;
        for (int r = 0; r < m; ++r)
            if (tab.basis[r] >= art_base)
                for (int c = 0; c <= tab.cols; ++c) tab.at(m, c) -= tab.at(r, c);

        const LpStatus phase1 = tab.run(enterable, max_pivots);
        sol.iterations = tab.pivots;
        if (phase1 == LpStatus::NumericalFailure || phase1 == LpStatus::Unbounded) {
            sol.status = LpStatus::NumericalFailure;
            std::ostringstream msg;
            msg << "phase 1 stopped (" << to_string(phase1) << ") after " << tab.pivots << " pivots";
            sol.diagnostics = msg.str();
            return sol;
        }
        const double infeasibility = -tab.at(m, tab.cols);
        if (infeasibility > 1e-7) {
            sol.status = LpStatus::Infeasible;
            sol.objective_value = infeasibility;
            std::ostringstream msg;
            msg << "phase 1 left an infeasibility gap of " << infeasibility;
            sol.diagnostics = msg.str();
            return sol;
        }

        // Drive leftover artificials out of the basis; rows where that is
        // impossible are redundant and harmless (the artificial stays basic
        // at zero and its column is barred from re-entering).
        for (int r = 0; r < m; ++r) {
            if (tab.basis[r] < art_base) continue;
            int pcol = -1;
            for (int c = 0; c < art_base; ++c)
                if (std::fabs(tab.at(r, c)) > detail::kPivotTol) {
                    pcol = c;
                    break;
                }
            if (pcol >= 0) tab.pivot(r, pcol);
        }
        for (int c = art_base; c < tab.cols; ++c) enterable[c] = false;
    }

    // Phase 2: reduced costs of the original objective over the current basis.
    const double sense_sign = lp.sense == LpSense::Maximize ? -1.0 : 1.0;
    for (int c = 0; c <= tab.cols; ++c) tab.cost(c) = 0.0;
    for (int j = 0; j < n; ++j) tab.cost(j) = sense_sign * lp.objective[j];
    for (int r = 0; r < m; ++r) {
        const int b = tab.basis[r];
        if (b >= n) continue;
        const double cb = sense_sign * lp.objective[b];
        if (cb == 0.0) continue;
        for (int c = 0; c <= tab.cols; ++c) tab.at(m, c) -= cb * tab.at(r, c);
    }

    const LpStatus phase2 = tab.run(enterable, max_pivots);
    sol.iterations = tab.pivots;
    if (phase2 == LpStatus::NumericalFailure) {
        sol.status = LpStatus::NumericalFailure;
        std::ostringstream msg;
        msg << "phase 2 exceeded the pivot cap (" << tab.pivots << " pivots)";
        sol.diagnostics = msg.str();
        return sol;
    }
    if (phase2 == LpStatus::Unbounded) {
        sol.status = LpStatus::Unbounded;
        return sol;
    }

    sol.status = LpStatus::Optimal;
    sol.values.assign(n, 0.0);
    for (int r = 0; r < m; ++r)
        if (tab.basis[r] < n) sol.values[tab.basis[r]] = tab.rhs(r);
    for (int j = 0; j < n; ++j) sol.values[j] += lp.lower_bounds[j];
    sol.objective_value = 0.0;
    for (int j = 0; j < n; ++j) sol.objective_value += lp.objective[j] * sol.values[j];
    return sol;
}

/// Plain-text dump of an LP (objective, rows, bounds) for debugging.
inline std::string lp_to_text(const LinearProgram& lp, const std::vector<std::string>* var_names = nullptr) {
    auto name = [&](int j) {
        return var_names && j < static_cast<int>(var_names->size()) ? (*var_names)[j]
                                                                    : "x" + std::to_string(j);
    };
    auto write_terms = [&](std::ostream& out, const std::vector<double>& coeffs) {
        bool first = true;
        for (int j = 0; j < lp.num_vars; ++j) {
            if (coeffs[j] == 0.0) continue;
            if (first) {
                out << coeffs[j] << ' ' << name(j);
                first = false;
            } else {
                out << (coeffs[j] >= 0.0 ? " + " : " - ") << std::fabs(coeffs[j]) << ' ' << name(j);
            }
        }
        if (first) out << "0";
    };

    std::ostringstream out;
    out << (lp.sense == LpSense::Minimize ? "Minimize\n obj: " : "Maximize\n obj: ");
    write_terms(out, lp.objective);
    out << "\nSubject To\n";
    for (std::size_t i = 0; i < lp.constraints.size(); ++i) {
        out << " c" << i << ": ";
        write_terms(out, lp.constraints[i].coeffs);
        const auto rel = lp.constraints[i].rel;
        out << (rel == LpRelation::LessEq ? " <= " : rel == LpRelation::GreaterEq ? " >= " : " = ")
            << lp.constraints[i].rhs << '\n';
    }
    out << "Bounds\n";
    for (int j = 0; j < lp.num_vars; ++j) {
        out << ' ' << lp.lower_bounds[j] << " <= " << name(j);
        if (std::isfinite(lp.upper_bounds[j])) out << " <= " << lp.upper_bounds[j];
        out << '\n';
    }
    out << "End\n";
    return out.str();
}

}  // namespace dbce
