#include "wolc/owopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace wolc {

namespace {

constexpr double kReducedCostTol = 1e-9;
constexpr double kPivotTol = 1e-12;
constexpr double kStrongPivotTol = 1e-7;
constexpr double kFeasibilityTol = 1e-7;
constexpr long kPivotLimit = 200000;

constexpr double kInf = std::numeric_limits<double>::infinity();

// Internal tableau: rows 0..m-1 are constraints, row m is the cost row;
// the last column is the right-hand side.
struct Tableau {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> cells;

    Tableau(std::size_t r, std::size_t c) : rows(r), cols(c), cells(r * c, 0.0) {}
    double& at(std::size_t r, std::size_t c) { return cells[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return cells[r * cols + c]; }
};

void pivot(Tableau& t, std::size_t pivot_row, std::size_t pivot_col) {
    const double pivot_value = t.at(pivot_row, pivot_col);
    if (std::abs(pivot_value) < kPivotTol || !std::isfinite(pivot_value)) {
        throw NumericError("simplex: numerical breakdown, pivot " + std::to_string(pivot_value));
    }
    for (std::size_t c = 0; c < t.cols; ++c) t.at(pivot_row, c) /= pivot_value;
    t.at(pivot_row, pivot_col) = 1.0;
    for (std::size_t r = 0; r < t.rows; ++r) {
        if (r == pivot_row) continue;
        const double factor = t.at(r, pivot_col);
        if (factor == 0.0) continue;
        for (std::size_t c = 0; c < t.cols; ++c) t.at(r, c) -= factor * t.at(pivot_row, c);
        t.at(r, pivot_col) = 0.0;
    }
}

// Runs the simplex iterations with Bland's rule over the first `active_cols`
// columns.  Returns true when optimal, false when unbounded.
bool iterate(Tableau& t, std::vector<std::size_t>& basis, std::size_t active_cols, int& pivots) {
    const std::size_t m = basis.size();
    const std::size_t rhs = t.cols - 1;
    // Preferring well-conditioned pivots (below) forfeits Bland's
    // anti-cycling guarantee, so watch for a long streak of pivots that
    // leave the objective flat and fall back to the pure rule for the rest
    // of the call when one appears.
    const long stall_limit = 200 + 4 * static_cast<long>(m);
    long stalled = 0;
    bool bland_only = false;
    double best_objective = t.at(m, rhs);
    for (;;) {
        // Bland: the entering variable is the lowest index with a negative
        // reduced cost.  A column whose positive entries are all
        // elimination residue cannot host a pivot, so pass it over; if a
        // column has no positive entry at all the program is unbounded
        // along it.
        std::size_t enter = active_cols;
        bool ray = false;
        for (std::size_t c = 0; c < active_cols && enter == active_cols; ++c) {
            if (t.at(m, c) >= -kReducedCostTol) continue;
            bool usable = false;
            bool any_positive = false;
            for (std::size_t r = 0; r < m; ++r) {
                const double coef = t.at(r, c);
                if (coef > kPivotTol) any_positive = true;
                if (coef > kStrongPivotTol) {
                    usable = true;
                    break;
                }
            }
            if (usable) {
                enter = c;
            } else if (!any_positive) {
                enter = c;
                ray = true;
            }
        }
        if (enter == active_cols) return true;
        if (ray) return false;

        // Pivoting must never divide a row by near-dust: the reciprocal
        // multiplies the whole tableau and poisons every later step.  The
        // clamp on the right-hand side turns roundoff that dipped a basic
        // value a hair below zero into a degenerate tie instead of a
        // negative step.
        double best_ratio = kInf;
        for (std::size_t r = 0; r < m; ++r) {
            if (t.at(r, enter) > kStrongPivotTol) {
                const double numer = std::max(t.at(r, rhs), 0.0);
                best_ratio = std::min(best_ratio, numer / t.at(r, enter));
            }
        }

        // Among the rows tied at the minimum ratio, consider only pivots
        // within a constant factor of the best-conditioned one (degenerate
        // vertices offer many ties, and repeatedly pivoting on the small
        // ones is what grows the tableau); Bland's lowest-basic-index rule
        // picks within that set to keep the path deterministic and cycling
        // at bay.
        const double ratio_edge = best_ratio + kReducedCostTol * std::max(1.0, std::abs(best_ratio));
        double best_mag = 0.0;
        for (std::size_t r = 0; r < m; ++r) {
            const double coef = t.at(r, enter);
            if (coef <= kStrongPivotTol) continue;
            if (std::max(t.at(r, rhs), 0.0) / coef > ratio_edge) continue;
            best_mag = std::max(best_mag, coef);
        }
        const double mag_floor = bland_only ? 0.0 : 0.3 * best_mag;
        std::size_t leave = m;
        for (std::size_t r = 0; r < m; ++r) {
            const double coef = t.at(r, enter);
            if (coef <= kStrongPivotTol || coef < mag_floor) continue;
            if (std::max(t.at(r, rhs), 0.0) / coef > ratio_edge) continue;
            if (leave == m || basis[r] < basis[leave]) leave = r;
        }

        pivot(t, leave, enter);
        basis[leave] = enter;
        if (++pivots > kPivotLimit) {
            throw NumericError("simplex: no convergence within " + std::to_string(kPivotLimit) +
                               " pivots");
        }
        if (t.at(m, rhs) > best_objective + 1e-12) {
            best_objective = t.at(m, rhs);
            stalled = 0;
        } else if (!bland_only && ++stalled > stall_limit) {
            bland_only = true;
        }
    }
}

struct NormalizedRow {
    std::vector<double> coeffs;
    double bound = 0.0;
    bool is_eq = false;
};

} // namespace

SimplexResult simplex_solve(const LinearProgram& lp) {
    const auto n = static_cast<std::size_t>(lp.variables);
    if (lp.variables <= 0) throw ConfigError("linear program has no variables");
    if (lp.objective.size() != n) {
        throw ConfigError("objective has " + std::to_string(lp.objective.size()) +
                          " coefficients for " + std::to_string(lp.variables) + " variables");
    }
    if (lp.ineq_coeffs.size() != lp.ineq_bounds.size() ||
        lp.eq_coeffs.size() != lp.eq_bounds.size()) {
        throw ConfigError("constraint matrix and bound counts differ");
    }

    std::vector<double> lower = lp.lower;
    if (lower.empty()) lower.assign(n, 0.0);
    std::vector<double> upper = lp.upper;
    if (upper.empty()) upper.assign(n, kInf);
    if (lower.size() != n || upper.size() != n) {
        throw ConfigError("variable bound vectors must match the variable count");
    }
    for (std::size_t j = 0; j < n; ++j) {
        if (!std::isfinite(lower[j])) {
            throw ConfigError("variable " + std::to_string(j + 1) +
                              " needs a finite lower bound");
        }
        if (upper[j] < lower[j]) {
            return {SimplexResult::Status::infeasible, {}, 0.0, 0};
        }
    }

    // Shift out the lower bounds (x = x' + lower, x' >= 0) and turn finite
    // upper bounds into rows.
    std::vector<NormalizedRow> rows;
    auto add_row = [&](const std::vector<double>& coeffs, double bound, bool is_eq) {
        if (coeffs.size() != n) {
            throw ConfigError("constraint row has " + std::to_string(coeffs.size()) +
                              " coefficients for " + std::to_string(lp.variables) + " variables");
        }
        double shifted = bound;
        for (std::size_t j = 0; j < n; ++j) shifted -= coeffs[j] * lower[j];
        rows.push_back({coeffs, shifted, is_eq});
    };
    for (std::size_t r = 0; r < lp.ineq_coeffs.size(); ++r) {
        add_row(lp.ineq_coeffs[r], lp.ineq_bounds[r], false);
    }
    for (std::size_t r = 0; r < lp.eq_coeffs.size(); ++r) {
        add_row(lp.eq_coeffs[r], lp.eq_bounds[r], true);
    }
    for (std::size_t j = 0; j < n; ++j) {
        if (upper[j] == kInf) continue;
        std::vector<double> coeffs(n, 0.0);
        coeffs[j] = 1.0;
        rows.push_back({std::move(coeffs), upper[j] - lower[j], false});
    }

    const std::size_t m = rows.size();
    std::size_t slack_count = 0;
    for (const NormalizedRow& row : rows) slack_count += row.is_eq ? 0 : 1;
    std::size_t art_count = 0;
    for (const NormalizedRow& row : rows) art_count += (row.is_eq || row.bound < 0.0) ? 1 : 0;

    const std::size_t art_base = n + slack_count;
    const std::size_t width = art_base + art_count;
    Tableau t(m + 1, width + 1);
    std::vector<std::size_t> basis(m);

    std::size_t next_slack = n;
    std::size_t next_art = art_base;
    for (std::size_t r = 0; r < m; ++r) {
        const double sign = rows[r].bound < 0.0 ? -1.0 : 1.0;
        for (std::size_t j = 0; j < n; ++j) t.at(r, j) = sign * rows[r].coeffs[j];
        t.at(r, width) = sign * rows[r].bound;
        if (!rows[r].is_eq) t.at(r, next_slack) = sign;
        if (rows[r].is_eq || sign < 0.0) {
            t.at(r, next_art) = 1.0;
            basis[r] = next_art++;
        } else {
            basis[r] = next_slack;
        }
        if (!rows[r].is_eq) ++next_slack;
    }

    SimplexResult result;

    // Phase 1: minimize the artificial variables.
    if (art_count > 0) {
        for (std::size_t c = art_base; c < width; ++c) t.at(m, c) = 1.0;
        for (std::size_t r = 0; r < m; ++r) {
            if (basis[r] < art_base) continue;
            for (std::size_t c = 0; c <= width; ++c) t.at(m, c) -= t.at(r, c);
        }
        // The phase-1 objective is bounded below by zero, so a failed ratio
        // test can only mean a roundoff-dusted reduced cost; the objective
        // check below still decides feasibility correctly in that case.
        iterate(t, basis, width, result.pivots);
        if (-t.at(m, width) > kFeasibilityTol) {
            result.status = SimplexResult::Status::infeasible;
            return result;
        }
        // Drive surviving artificials out of the basis.  Their basic values
        // are dust below the feasibility tolerance, so snap them to zero
        // first: pivoting must not divide that dust into something large.
        // Pivot on the row's largest real coefficient for conditioning; a
        // row with no usable coefficient is a redundant combination of the
        // others and is neutralized so later pivots cannot stir it.
        for (std::size_t r = 0; r < m; ++r) {
            if (basis[r] < art_base) continue;
            t.at(r, width) = 0.0;
            std::size_t best_col = art_base;
            double best_mag = kStrongPivotTol;
            for (std::size_t c = 0; c < art_base; ++c) {
                const double mag = std::abs(t.at(r, c));
                if (mag > best_mag) {
                    best_mag = mag;
                    best_col = c;
                }
            }
            if (best_col < art_base) {
                pivot(t, r, best_col);
                basis[r] = best_col;
                ++result.pivots;
            } else {
                for (std::size_t c = 0; c < art_base; ++c) t.at(r, c) = 0.0;
            }
        }
    }

    // Phase 2 with the real costs; artificial columns stay out of play.
    for (std::size_t c = 0; c <= width; ++c) t.at(m, c) = 0.0;
    for (std::size_t j = 0; j < n; ++j) t.at(m, j) = lp.objective[j];
    for (std::size_t r = 0; r < m; ++r) {
        const double cost = basis[r] < n ? lp.objective[basis[r]] : 0.0;
        if (cost == 0.0) continue;
        for (std::size_t c = 0; c <= width; ++c) t.at(m, c) -= cost * t.at(r, c);
    }
    if (!iterate(t, basis, art_base, result.pivots)) {
        result.status = SimplexResult::Status::unbounded;
        return result;
    }

    result.solution.assign(n, 0.0);
    for (std::size_t r = 0; r < m; ++r) {
        if (basis[r] < n) result.solution[basis[r]] = t.at(r, width);
    }
    for (std::size_t j = 0; j < n; ++j) {
        double x = result.solution[j] + lower[j];
        // Snap away pivot dust so downstream feasibility checks see exact
        // bounds.
        if (std::abs(x - lower[j]) < 1e-11) x = lower[j];
        if (upper[j] != kInf && std::abs(x - upper[j]) < 1e-11) x = upper[j];
        result.solution[j] = x;
        result.objective += lp.objective[j] * x;
    }
    result.status = SimplexResult::Status::optimal;
    return result;
}

namespace {

// Positions of the coding matrix's non-zero entries, the only weights the
// optimizer may move; everything else is pinned at zero.
struct WeightVars {
    std::vector<int> index;   ///< P*Q -> variable id or -1
    std::vector<std::pair<int, int>> position; ///< variable id -> (p, q)

    WeightVars(const CodingMatrix& m) : index(static_cast<std::size_t>(m.class_count()) * m.length(), -1) {
        for (int p = 0; p < m.class_count(); ++p) {
            for (int q = 0; q < m.length(); ++q) {
                if (m.at(p, q) != 0) {
                    index[static_cast<std::size_t>(p) * m.length() + q] =
                        static_cast<int>(position.size());
                    position.emplace_back(p, q);
                }
            }
        }
    }

    int at(int p, int q, int length) const {
        return index[static_cast<std::size_t>(p) * length + q];
    }
    int count() const { return static_cast<int>(position.size()); }
};

void check_problem(const LossTensor& tensor, const std::vector<int>& labels,
                   const CodingMatrix& m) {
    if (tensor.class_count() != m.class_count() || tensor.length() != m.length()) {
        throw ConfigError("loss tensor is for " + std::to_string(tensor.class_count()) + "x" +
                          std::to_string(tensor.length()) + ", coding matrix is " +
                          std::to_string(m.class_count()) + "x" + std::to_string(m.length()));
    }
    if (labels.size() != tensor.examples()) {
        throw DataError("tensor has " + std::to_string(tensor.examples()) + " examples, got " +
                        std::to_string(labels.size()) + " labels");
    }
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] < 1 || labels[i] > m.class_count()) {
            throw DataError("label " + std::to_string(labels[i]) + " of example " +
                            std::to_string(i + 1) + " is outside 1.." +
                            std::to_string(m.class_count()));
        }
    }
    const ValidityReport report = validate(m);
    if (!report.ok()) {
        throw ConfigError("invalid coding matrix: " + report.to_string());
    }
}

// The per-class unit row sums, shared by both formulations.
void add_row_sum_constraints(LinearProgram& lp, const WeightVars& vars, const CodingMatrix& m) {
    for (int p = 0; p < m.class_count(); ++p) {
        std::vector<double> row(static_cast<std::size_t>(lp.variables), 0.0);
        for (int q = 0; q < m.length(); ++q) {
            const int v = vars.at(p, q, m.length());
            if (v >= 0) row[static_cast<std::size_t>(v)] = 1.0;
        }
        lp.eq_coeffs.push_back(std::move(row));
        lp.eq_bounds.push_back(1.0);
    }
}

WeightMatrix weights_from_solution(const std::vector<double>& solution, const WeightVars& vars,
                                   const CodingMatrix& m) {
    Matrix values(static_cast<std::size_t>(m.class_count()), static_cast<std::size_t>(m.length()));
    for (int v = 0; v < vars.count(); ++v) {
        const auto [p, q] = vars.position[static_cast<std::size_t>(v)];
        values(static_cast<std::size_t>(p), static_cast<std::size_t>(q)) =
            std::clamp(solution[static_cast<std::size_t>(v)], 0.0, 1.0);
    }
    return WeightMatrix(std::move(values));
}

} // namespace

double risk_of(const WeightMatrix& weights, const LossTensor& tensor,
               const std::vector<int>& labels) {
    if (labels.size() != tensor.examples()) {
        throw DataError("tensor has " + std::to_string(tensor.examples()) + " examples, got " +
                        std::to_string(labels.size()) + " labels");
    }
    const Matrix scores = class_losses(tensor, weights);
    double risk = 0.0;
    for (std::size_t i = 0; i < tensor.examples(); ++i) {
        const auto truth = static_cast<std::size_t>(labels[i]) - 1;
        double worst = 0.0;
        for (int p = 0; p < tensor.class_count(); ++p) {
            worst = std::max(worst, scores(i, truth) - scores(i, static_cast<std::size_t>(p)));
        }
        risk += worst;
    }
    return risk;
}

OwSolution solve_ow_full(const LossTensor& tensor, const std::vector<int>& labels,
                         const CodingMatrix& m) {
    check_problem(tensor, labels, m);
    const WeightVars vars(m);
    const auto n = tensor.examples();

    LinearProgram lp;
    lp.variables = vars.count() + static_cast<int>(n);
    lp.objective.assign(static_cast<std::size_t>(lp.variables), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        lp.objective[static_cast<std::size_t>(vars.count()) + i] = 1.0;
    }

    // One constraint per (example, rival class): the true class's weighted
    // loss may exceed the rival's by at most the example's slack.
    for (std::size_t i = 0; i < n; ++i) {
        const int truth = labels[i] - 1;
        for (int p = 0; p < m.class_count(); ++p) {
            std::vector<double> row(static_cast<std::size_t>(lp.variables), 0.0);
            for (int q = 0; q < m.length(); ++q) {
                const int tv = vars.at(truth, q, m.length());
                if (tv >= 0) row[static_cast<std::size_t>(tv)] += tensor.at(i, truth, q);
                const int rv = vars.at(p, q, m.length());
                if (rv >= 0) row[static_cast<std::size_t>(rv)] -= tensor.at(i, p, q);
            }
            row[static_cast<std::size_t>(vars.count()) + i] = -1.0;
            lp.ineq_coeffs.push_back(std::move(row));
            lp.ineq_bounds.push_back(0.0);
        }
    }
    add_row_sum_constraints(lp, vars, m);

    const SimplexResult solved = simplex_solve(lp);
    if (solved.status != SimplexResult::Status::optimal) {
        throw NumericError("weight optimization: the full program must be feasible and bounded, "
                           "solver reported otherwise (internal inconsistency)");
    }

    OwSolution solution;
    solution.weights = weights_from_solution(solved.solution, vars, m);
    solution.slacks.assign(solved.solution.begin() + vars.count(), solved.solution.end());
    solution.iterations = solved.pivots;
    solution.objective = risk_of(solution.weights, tensor, labels);
    if (std::abs(solution.objective - solved.objective) > 1e-6) {
        throw NumericError("weight optimization: hinge risk " + std::to_string(solution.objective) +
                           " disagrees with the program objective " +
                           std::to_string(solved.objective));
    }
    return solution;
}

ConstraintSelector most_violated_selector(const LossTensor& tensor,
                                          const std::vector<int>& labels,
                                          const WeightMatrix& weights) {
    const Matrix scores = class_losses(tensor, weights);
    ConstraintSelector selector;
    selector.picks.reserve(tensor.examples());
    for (std::size_t i = 0; i < tensor.examples(); ++i) {
        const auto truth = static_cast<std::size_t>(labels[i]) - 1;
        int pick = 0;
        double best = scores(i, truth) - scores(i, 0);
        for (int p = 1; p < tensor.class_count(); ++p) {
            const double gap = scores(i, truth) - scores(i, static_cast<std::size_t>(p));
            if (gap > best) {
                best = gap;
                pick = p;
            }
        }
        selector.picks.push_back(pick + 1);
    }
    return selector;
}

OwSolution solve_ow_cpa(const LossTensor& tensor, const std::vector<int>& labels,
                        const CodingMatrix& m, const CpaOptions& options,
                        std::vector<CpaStep>* trace) {
    check_problem(tensor, labels, m);
    if (options.epsilon < 0.0) {
        throw ConfigError("epsilon must be non-negative, got " + std::to_string(options.epsilon));
    }
    if (options.max_iterations < 1) {
        throw ConfigError("iteration cap must be positive, got " +
                          std::to_string(options.max_iterations));
    }
    const WeightVars vars(m);
    const auto n = tensor.examples();
    const std::size_t xi = static_cast<std::size_t>(vars.count()); // single slack variable

    OwSolution current;
    current.weights = WeightMatrix::uniform(m);
    current.slacks = {0.0};

    // Master program: minimize the one slack subject to the row sums and the
    // aggregated constraints collected so far.
    LinearProgram master;
    master.variables = vars.count() + 1;
    master.objective.assign(static_cast<std::size_t>(master.variables), 0.0);
    master.objective[xi] = 1.0;
    add_row_sum_constraints(master, vars, m);

    std::vector<ConstraintSelector> working_set;
    for (;;) {
        const Matrix scores = class_losses(tensor, current.weights);
        ConstraintSelector selector;
        selector.picks.reserve(n);
        double violation = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const auto truth = static_cast<std::size_t>(labels[i]) - 1;
            int pick = 0;
            double best = scores(i, truth) - scores(i, 0);
            for (int p = 1; p < tensor.class_count(); ++p) {
                const double gap = scores(i, truth) - scores(i, static_cast<std::size_t>(p));
                if (gap > best) {
                    best = gap;
                    pick = p;
                }
            }
            selector.picks.push_back(pick + 1);
            violation += best; // >= 0: the true class itself contributes 0
        }
        if (trace) {
            trace->push_back({static_cast<int>(working_set.size()), current.slacks[0], violation});
        }

        // The aggregated constraint for `selector` is already enforced, so
        // no cut can improve the master program further.
        if (std::find(working_set.begin(), working_set.end(), selector) != working_set.end()) {
            break;
        }
        // The true risk meets the master bound up to epsilon.
        if (violation <= current.slacks[0] + options.epsilon) break;

        if (current.iterations >= options.max_iterations) {
            current.objective = risk_of(current.weights, tensor, labels);
            throw CpaIterationError("weight optimization: no convergence within " +
                                        std::to_string(options.max_iterations) +
                                        " cutting planes (best risk " +
                                        std::to_string(current.objective) + ")",
                                    current);
        }

        working_set.push_back(selector);
        std::vector<double> row(static_cast<std::size_t>(master.variables), 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const int truth = labels[i] - 1;
            const int rival = selector.picks[i] - 1;
            for (int q = 0; q < m.length(); ++q) {
                const int tv = vars.at(truth, q, m.length());
                if (tv >= 0) row[static_cast<std::size_t>(tv)] += tensor.at(i, truth, q);
                const int rv = vars.at(rival, q, m.length());
                if (rv >= 0) row[static_cast<std::size_t>(rv)] -= tensor.at(i, rival, q);
            }
        }
        row[xi] = -1.0;
        master.ineq_coeffs.push_back(std::move(row));
        master.ineq_bounds.push_back(0.0);

        const SimplexResult solved = simplex_solve(master);
        if (solved.status != SimplexResult::Status::optimal) {
            throw NumericError("weight optimization: the master program must be feasible and "
                               "bounded, solver reported otherwise (internal inconsistency)");
        }
        current.weights = weights_from_solution(solved.solution, vars, m);
        current.slacks[0] = solved.solution[xi];
        ++current.iterations;
    }

    current.objective = risk_of(current.weights, tensor, labels);
    return current;
}

} // namespace wolc
