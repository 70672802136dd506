#ifndef WOLC_WOLC_HPP
#define WOLC_WOLC_HPP

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "wolc/coding.hpp"
#include "wolc/dataset.hpp"
#include "wolc/decoding.hpp"
#include "wolc/learners.hpp"
#include "wolc/owopt.hpp"

namespace wolc {

/// Knobs of the incremental trainer.  The defaults are the recommended
/// operating point; max_iterations = 0 selects the adaptive cap of three
/// times the class count.
struct WolcConfig {
    int search_paths = 3;     ///< class pairs targeted per iteration
    int patience = 3;         ///< non-improving iterations tolerated
    double eta = 0.01;        ///< relative risk-drop threshold for "improving"
    int max_iterations = 0;   ///< outer-loop cap; 0 means 3 * class count
    int cluster_regions = 2;  ///< regions for layered dichotomizers
    int boost_rounds = 40;    ///< stump-boosting rounds per dichotomizer
    LossKind loss = LossKind::linear;
    double epsilon_cpa = 1e-4; ///< cutting-plane convergence margin
    std::uint64_t seed = 42;
};

/// One class pair targeted during an iteration; `stubborn` marks pairs whose
/// plain column already existed in the coding matrix up to sign, which is
/// what escalates training to a layered dichotomizer.
struct PairChoice {
    int first = 0;
    int second = 0;
    bool stubborn = false;

    bool operator==(const PairChoice&) const = default;
};

/// What the trainer saw at one outer iteration: the optimized risk of the
/// evaluated state, its code length, the patience counter after the
/// improvement test, and the pairs appended afterwards (empty when the
/// iteration ended the loop).
struct IterationRecord {
    int iteration = 0;
    double risk = 0.0;
    int code_length = 0;
    int patience = 0;
    std::vector<PairChoice> pairs;

    bool operator==(const IterationRecord&) const = default;
};

/// A complete trained classifier: coding matrix, one dichotomizer per
/// column, the optimized decoding weights, and per-class column accuracies
/// on the training data (used by empirical weighting and diagnostics).
struct EnsembleModel {
    CodingMatrix coding;
    std::vector<Dichotomizer> dichotomizers;
    WeightMatrix weights;
    Matrix accuracy;
    int feature_count = 0;
    std::vector<long long> label_values; ///< dense label -> original value
    LossKind loss = LossKind::linear;
    double training_risk = 0.0;
    std::vector<IterationRecord> history;
};

/// Builds the starting model: the given coding matrix (one-vs-all when null)
/// with one boosted dichotomizer per column, uniform weights, and training
/// accuracies filled in.  Throws when the matrix fails validation, does not
/// match the dataset's class count, or induces a one-sided binary problem.
EnsembleModel initialize(const Dataset& ds, const WolcConfig& config,
                         const CodingMatrix* initial_coding = nullptr);

/// Relative-improvement bookkeeping for the outer loop.  The first observed
/// risk always counts as improving; afterwards a risk J improves on the
/// previous J' when (J' - J) / J exceeds eta.
class PatienceTracker {
public:
    PatienceTracker(double eta, int limit) : eta_(eta), limit_(limit) {}

    /// Feeds the next risk; returns whether it improved, resetting the
    /// counter on improvement and incrementing it otherwise.
    bool observe(double risk) {
        const bool improving = (previous_ - risk) / risk > eta_;
        if (improving) {
            counter_ = 0;
        } else {
            ++counter_;
        }
        previous_ = risk;
        return improving;
    }

    int counter() const { return counter_; }
    bool exhausted() const { return counter_ >= limit_; }

private:
    double eta_ = 0.0;
    int limit_ = 0;
    int counter_ = 0;
    double previous_ = std::numeric_limits<double>::infinity();
};

/// Trains the full pipeline: starting from the one-vs-all model, each
/// iteration re-optimizes the decoding weights, snapshots the state when the
/// hinge risk improved by more than eta relatively, and otherwise burns
/// patience; then the highest-risk class pairs are targeted with new
/// columns - boosted dichotomizers for fresh pairs, layered ones for
/// stubborn pairs.  Stops on zero risk, exhausted patience, the iteration
/// cap, or no remaining pair risk, and returns the best snapshot (appended
/// but never re-evaluated columns are discarded).
EnsembleModel train_wolc(const Dataset& ds, const WolcConfig& config);

/// Same loop, seeded with a caller-provided coding matrix instead of
/// one-vs-all.
EnsembleModel train_wolc_from(const Dataset& ds, const WolcConfig& config,
                              const CodingMatrix& initial_coding);

/// Dichotomizer outputs for one example, in coding-column order.
TestCodeword evaluate_codeword(const EnsembleModel& model, std::span<const double> x);

/// Decoding rules available at prediction time.
enum class DecoderKind {
    hd,           ///< Hamming distance on the signs of the outputs
    lb,           ///< unweighted loss sum
    lw_empirical, ///< losses weighted by training accuracy
    ow,           ///< losses weighted by the optimized matrix
};

/// Name <-> value mapping for CLI and report use ("hd", "lb", "lw", "ow").
DecoderKind decoder_from_name(const std::string& name);
std::string decoder_name(DecoderKind decoder);

/// Predicts the dense (1-based) class label of one example.
int predict(const EnsembleModel& model, std::span<const double> x, DecoderKind decoder);

/// Predicts dense labels for every row of the matrix.
std::vector<int> predict_all(const EnsembleModel& model, const Matrix& features,
                             DecoderKind decoder);

/// Versioned text serialization; load_model round-trips save_model exactly.
void save_model(std::ostream& out, const EnsembleModel& model);
EnsembleModel load_model(std::istream& in, const std::string& origin);

/// History records as one line per iteration (risk printed with full
/// precision so the file is a faithful trace).
void write_history(std::ostream& out, const std::vector<IterationRecord>& history);

} // namespace wolc

#endif // WOLC_WOLC_HPP
