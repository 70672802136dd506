#ifndef WOLC_DATASET_HPP
#define WOLC_DATASET_HPP

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "wolc/matrix.hpp"

namespace wolc {

/// In-memory classification dataset.
///
/// Labels are stored densified to 1..class_count in the order of the sorted
/// original values; label_values maps each dense label back to the value
/// found in the input file (label_values[k-1] is the original for dense k).
struct Dataset {
    Matrix features;                     ///< n x d feature matrix
    std::vector<int> labels;             ///< n dense labels in 1..class_count
    std::vector<long long> label_values; ///< original label per dense label
    int class_count = 0;
    int feature_count = 0;

    std::size_t size() const { return labels.size(); }
};

/// Input file layouts understood by load_dataset().
enum class DataFormat {
    delimited,    ///< one example per line: d numeric fields plus a label field
    sparse_index, ///< one example per line: label then index:value pairs (1-based)
};

struct LoadOptions {
    DataFormat format = DataFormat::delimited;
    /// Label field position for delimited input: -1 selects the last field.
    int label_column = -1;
    /// Field separator; '\0' auto-detects comma, semicolon or whitespace.
    char delimiter = '\0';
};

/// Reads a dataset from disk.  Lines that are empty or start with '#' are
/// skipped.  Throws DataError with row/column context on ragged rows,
/// non-numeric fields, empty fields, non-integer labels, or an empty file.
Dataset load_dataset(const std::string& path, const LoadOptions& options = {});

/// Same as load_dataset() but reading from an already-open stream;
/// `origin` names the source in error messages.
Dataset load_dataset(std::istream& in, const LoadOptions& options, const std::string& origin);

/// Per-feature affine rescaling fitted on one dataset and applicable to
/// another (train statistics applied to test data).  Constant features map
/// to 0.  Values outside the fitted range are mapped by the same affine rule
/// and are not clamped.
struct UnitRangeStats {
    std::vector<double> minimum;
    std::vector<double> span; ///< max - min; 0 marks a constant feature

    static UnitRangeStats fit(const Dataset& ds);
    Dataset apply(const Dataset& ds) const;
};

/// Rescales every feature of `ds` into [0, 1]; constant features become 0.
/// Applying the function twice gives the same bytes as applying it once.
Dataset normalize_unit_range(const Dataset& ds);

/// Assignment of every example to one of `fold_count` cross-validation folds,
/// stratified so that for each class the per-fold counts differ by at most
/// one.
struct FoldPlan {
    int fold_count = 0;
    std::vector<int> assignments; ///< fold index in 0..fold_count-1 per example
    std::uint64_t seed = 0;

    std::vector<std::size_t> test_indices(int fold) const;
    std::vector<std::size_t> train_indices(int fold) const;
};

/// Deterministic stratified fold assignment.  Throws ConfigError when
/// fold_count < 2 or fold_count > number of examples.
FoldPlan stratified_folds(const Dataset& ds, int fold_count, std::uint64_t seed);

/// Copies the selected rows into a new dataset (class_count and the label
/// mapping are preserved even if a class is absent from the subset).
Dataset subset(const Dataset& ds, const std::vector<std::size_t>& rows);

} // namespace wolc

#endif // WOLC_DATASET_HPP
