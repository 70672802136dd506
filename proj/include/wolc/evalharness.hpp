#ifndef WOLC_EVALHARNESS_HPP
#define WOLC_EVALHARNESS_HPP

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <string>
#include <vector>

#include "wolc/dataset.hpp"
#include "wolc/wolc.hpp"

namespace wolc {

/// One benchmark experiment: a dataset, a method name from the registry, and
/// the cross-validation protocol.
struct RunSpec {
    std::string dataset_path;
    std::string dataset_name; ///< report label; file stem when empty
    LoadOptions load;
    std::string method; ///< "<coding>-<decoder>", e.g. "wolc-ow", "1vsall-hd"
    WolcConfig learner;
    int repeats = 10;
    int folds = 10;
    std::uint64_t seed = 42;
    /// false: per-fold scaling fitted on the training split and applied to
    /// both splits; true: one scaling fitted on the full dataset up front.
    bool global_normalization = false;
    /// Parameters of the "random" coding methods.
    int random_code_length = 10;
    double random_zero_prob = 0.5;
};

/// Results of one experiment.  Accuracies are fractions in [0, 1];
/// mean_accuracy and stddev summarize the per-repeat means (sample standard
/// deviation, zero for a single repeat).  wall_seconds is execution metadata
/// and deliberately excluded from the serialized report so that identical
/// specs produce identical bytes.
struct RunReport {
    std::string dataset_name;
    std::string method;
    int repeats = 0;
    int folds = 0;
    std::uint64_t seed = 0;
    bool global_normalization = false;
    Matrix cell_accuracy;    ///< repeats x folds
    Matrix cell_code_length; ///< repeats x folds
    double mean_accuracy = 0.0;
    double stddev = 0.0;
    double mean_code_length = 0.0;
    double wall_seconds = 0.0;

    bool operator==(const RunReport& other) const;
};

/// A trained classifier as the harness consumes it: a batch predictor over
/// already-normalized features plus the realized code length.
struct TrainedPredictor {
    std::function<std::vector<int>(const Matrix&)> predict_batch;
    double code_length = 0.0;
};

/// Builds a predictor from one training split.  `fold_seed` is unique per
/// (repeat, fold) cell and already derived from the run seed.
using MethodFn =
    std::function<TrainedPredictor(const Dataset& train, const RunSpec& spec, std::uint64_t fold_seed)>;

/// Adds or replaces a method.  The built-in grid registers every coding in
/// {1vsall, 1vs1, random, wolc} against every decoder in {hd, lb, lw, ow}.
void register_method(const std::string& name, MethodFn method);

/// Names of all registered methods, sorted.
std::vector<std::string> registered_methods();

/// Runs the full repeats x folds protocol.  Fold plans are reshuffled per
/// repeat with seed XOR repeat index.  `jobs` > 1 trains independent cells
/// concurrently; results are identical to the sequential run because every
/// cell derives its randomness from its own (repeat, fold) seed.
RunReport run_benchmark(const RunSpec& spec, int jobs = 1);

/// Cross-dataset comparison: per dataset, methods are ranked by mean
/// accuracy (rank 1 is best, ties share the average of the positions they
/// occupy), and ranks are averaged over datasets.
struct RankTable {
    std::vector<std::string> methods;
    std::vector<std::string> datasets;
    Matrix mean_accuracy; ///< methods x datasets
    Matrix ranks;         ///< methods x datasets
    std::vector<double> average_rank;
};

/// Requires exactly one report per (dataset, method) cell; order follows
/// first appearance in `reports`.
RankTable compare_grid(const std::vector<RunReport>& reports);

enum class ReportFormat {
    text,    ///< human-readable summary table
    records, ///< line-delimited key=value, full precision, parseable
};

/// Deterministic serialization of a report (byte-identical for equal
/// reports; wall_seconds is not written).
void emit_report(std::ostream& out, const RunReport& report, ReportFormat format);

/// Parses what emit_report(..., records) wrote.
RunReport parse_report(std::istream& in, const std::string& origin);

/// Human-readable rank table; deterministic.
void emit_rank_table(std::ostream& out, const RankTable& table);

} // namespace wolc

#endif // WOLC_EVALHARNESS_HPP
