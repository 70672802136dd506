#ifndef WOLC_OWOPT_HPP
#define WOLC_OWOPT_HPP

#include <vector>

#include "wolc/decoding.hpp"
#include "wolc/error.hpp"

namespace wolc {

/// Linear program in the form
///   minimize    c . x
///   subject to  ineq_coeffs . x <= ineq_bounds
///               eq_coeffs   . x == eq_bounds
///               lower <= x <= upper   (per variable; upper may be +inf)
/// Empty bound vectors default to lower = 0 and upper = +inf throughout.
struct LinearProgram {
    int variables = 0;
    std::vector<double> objective;
    std::vector<std::vector<double>> ineq_coeffs;
    std::vector<double> ineq_bounds;
    std::vector<std::vector<double>> eq_coeffs;
    std::vector<double> eq_bounds;
    std::vector<double> lower;
    std::vector<double> upper;
};

struct SimplexResult {
    enum class Status { optimal, infeasible, unbounded };
    Status status = Status::optimal;
    std::vector<double> solution;
    double objective = 0.0;
    int pivots = 0;
};

/// Dense two-phase simplex using Bland's smallest-index rule throughout, so
/// the pivot sequence (and therefore the returned vertex) is deterministic
/// and cycling is impossible.  Throws NumericError when the tableau degrades
/// (no admissible pivot above 1e-12 where one is required).
SimplexResult simplex_solve(const LinearProgram& lp);

/// Per-example choice of one rival class, the building block of the
/// aggregated constraints used by the cutting-plane solver.  picks[i] is a
/// 1-based class index.
struct ConstraintSelector {
    std::vector<int> picks;

    bool operator==(const ConstraintSelector& other) const = default;
};

/// Result of a weight optimization: the weight matrix, its hinge risk
/// (sum over examples of the worst loss gap, clamped at zero), the slack
/// values of the final linear program, and the iteration count (simplex
/// pivots for the one-shot solver, cutting planes for the incremental one).
struct OwSolution {
    WeightMatrix weights;
    double objective = 0.0;
    std::vector<double> slacks;
    int iterations = 0;
};

/// Raised when the cutting-plane loop hits its iteration cap; carries the
/// best weights found so far.
class CpaIterationError : public NumericError {
public:
    CpaIterationError(const std::string& message, OwSolution best)
        : NumericError(message), best_so_far(std::move(best)) {}

    OwSolution best_so_far;
};

/// Hinge risk of a weight matrix over the tensor:
///   sum_i max(0, max_p (w_{y_i} . u_{i,y_i} - w_p . u_{i,p})).
double risk_of(const WeightMatrix& weights, const LossTensor& tensor,
               const std::vector<int>& labels);

/// One-shot weight optimization: solves the full hinge formulation with one
/// slack per example and one constraint per (example, class) pair.  Exact
/// but sized n*P constraints, so intended for small problems and as the
/// reference for the cutting-plane solver.
OwSolution solve_ow_full(const LossTensor& tensor, const std::vector<int>& labels,
                         const CodingMatrix& m);

/// The selector whose aggregated constraint is most violated by `weights`:
/// picks[i] = argmax_p (w_{y_i} . u_{i,y_i} - w_p . u_{i,p}), smallest class
/// index on ties.
ConstraintSelector most_violated_selector(const LossTensor& tensor,
                                          const std::vector<int>& labels,
                                          const WeightMatrix& weights);

struct CpaOptions {
    /// Stop once the true risk exceeds the master-problem slack by at most
    /// this amount; the returned risk is then within epsilon of the optimum.
    double epsilon = 1e-4;
    int max_iterations = 1000;
};

/// Trace of one cutting-plane iteration, for diagnostics and tests.
struct CpaStep {
    int working_set = 0;  ///< constraints after this iteration
    double slack = 0.0;   ///< master objective (lower bound on the optimum)
    double risk = 0.0;    ///< true risk of the weights entering the iteration
};

/// Cutting-plane weight optimization.  Starts from uniform weights with an
/// empty working set; each iteration adds the currently most violated
/// aggregated constraint and re-solves a master program whose size depends
/// only on the working set, never on the example count.  Stops when the new
/// selector is already in the working set or the risk is within epsilon of
/// the master bound.  Throws CpaIterationError past max_iterations.
OwSolution solve_ow_cpa(const LossTensor& tensor, const std::vector<int>& labels,
                        const CodingMatrix& m, const CpaOptions& options = {},
                        std::vector<CpaStep>* trace = nullptr);

} // namespace wolc

#endif // WOLC_OWOPT_HPP
