#ifndef WOLC_LEARNERS_HPP
#define WOLC_LEARNERS_HPP

#include <cstdint>
#include <optional>
#include <span>
#include <variant>
#include <vector>

#include "wolc/coding.hpp"
#include "wolc/dataset.hpp"
#include "wolc/matrix.hpp"

namespace wolc {

/// Two-class training problem carved out of a multiclass dataset by one
/// coding column: only examples of classes coded non-zero are kept, with the
/// coded sign as target.
struct BinaryProblem {
    Matrix features;
    std::vector<int> targets; ///< +1 / -1 per kept example
    ColumnSpec source;        ///< the column that induced the problem
};

/// Builds the two-class problem for `column`.  Throws ConfigError when the
/// column size does not match, and DataError when every kept example has the
/// same sign (an untrainable dichotomy).
BinaryProblem induce_binary_problem(const Dataset& ds, const ColumnSpec& column);

/// Axis-aligned decision stump: predicts `polarity` when the feature value
/// is <= threshold and -polarity otherwise.  A threshold of -infinity makes
/// the stump constant.
struct Stump {
    int feature = 0;
    double threshold = 0.0;
    int polarity = 1; ///< +1 or -1
    double alpha = 0.0;

    int predict(std::span<const double> x) const {
        return x[static_cast<std::size_t>(feature)] <= threshold ? polarity : -polarity;
    }
};

/// Weighted vote of decision stumps produced by boosting.
struct StumpEnsemble {
    std::vector<Stump> stumps;

    /// Normalized vote sum(alpha_t h_t(x)) / sum(alpha_t), in [-1, +1].
    /// An empty ensemble abstains with margin 0.
    double margin(std::span<const double> x) const;
};

/// Discrete-boosting trainer over decision stumps.
///
/// Each round picks the stump with the lowest weighted error over all
/// features, all midpoints between consecutive distinct feature values plus
/// a constant split, and both polarities; ties resolve to the lowest feature
/// index, then the smaller threshold (constant split first), then positive
/// polarity.  Round weight is alpha = 0.5*ln((1-err)/err).  A round with
/// zero error keeps its stump with the alpha computed at err = 1e-10 and
/// training stops; a round whose best error reaches 0.5 stops without
/// keeping the stump.
StumpEnsemble train_adaboost(const BinaryProblem& problem, int rounds);

/// Normalized ensemble output in [-1, +1] for one example.
double predict_margin(const StumpEnsemble& ensemble, std::span<const double> x);

/// Result of Lloyd's clustering: cluster_count() may be lower than requested
/// when the data has too few distinct points or a cluster could not be
/// refilled after emptying.  objective_history records the sum of squared
/// distances after every assignment step (non-increasing).
struct KMeansResult {
    Matrix centroids;
    std::vector<int> assignments;
    std::vector<double> objective_history;

    int cluster_count() const { return static_cast<int>(centroids.rows()); }
};

/// Deterministic Lloyd's algorithm.  Initial centroids are the first k
/// pairwise-distinct points of a seeded permutation; assignment ties go to
/// the lowest centroid index; an emptied cluster is re-seeded with the point
/// farthest from its centroid (dropped when every point already coincides
/// with its centroid).  Stops when assignments repeat or after 300 sweeps.
KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed);

/// One clustering region of a layered dichotomizer: a local booster where
/// the region held both target signs during training, or a fixed sign where
/// it was pure.
struct Region {
    std::vector<double> centroid;
    std::optional<StumpEnsemble> ensemble; ///< engaged iff the region was mixed
    int fixed_sign = 0;                    ///< +1 / -1 for pure regions
};

/// Piecewise dichotomizer: the input is routed to the nearest region
/// centroid and scored by that region's payload.
struct ClusteringDichotomizer {
    std::vector<Region> regions;

    double margin(std::span<const double> x) const;
};

/// Clusters the problem's examples into up to `regions` groups and trains a
/// local booster in every group that contains both signs; pure groups keep
/// their sign as a constant answer.  This is the escalation used when a
/// plain booster keeps reproducing an existing coding column: the per-region
/// split can realize dichotomies a single stump ensemble cannot.
ClusteringDichotomizer train_layered_dichotomizer(const BinaryProblem& problem, int regions,
                                                  int rounds, std::uint64_t seed);

/// Margin in [-1, +1] from the host region (nearest centroid, ties to the
/// lowest region index).
double predict_layered(const ClusteringDichotomizer& dichotomizer, std::span<const double> x);

/// Any trained two-class scorer usable as one coding column's dichotomizer.
using Dichotomizer = std::variant<StumpEnsemble, ClusteringDichotomizer>;

double dichotomizer_margin(const Dichotomizer& d, std::span<const double> x);

} // namespace wolc

#endif // WOLC_LEARNERS_HPP
