#ifndef WOLC_CODING_HPP
#define WOLC_CODING_HPP

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

namespace wolc {

/// One column of a ternary coding matrix: entry per class in {-1, 0, +1}.
/// +1 assigns the class to the positive meta-class of the dichotomy, -1 to
/// the negative one, and 0 leaves the class out.
struct ColumnSpec {
    std::vector<std::int8_t> entries;

    int classes() const { return static_cast<int>(entries.size()); }
};

/// Ternary coding matrix: class_count rows (one codeword per class) by
/// length columns (one per dichotomizer).
class CodingMatrix {
public:
    CodingMatrix() = default;
    CodingMatrix(int class_count, int length)
        : class_count_(class_count), length_(length),
          entries_(static_cast<std::size_t>(class_count) * length, 0) {}

    int class_count() const { return class_count_; }
    int length() const { return length_; }

    std::int8_t at(int row, int col) const {
        return entries_[static_cast<std::size_t>(row) * length_ + col];
    }
    std::int8_t& at(int row, int col) {
        return entries_[static_cast<std::size_t>(row) * length_ + col];
    }

    /// Codeword of class `row` (row is 0-based; class k has row k-1).
    std::span<const std::int8_t> row(int r) const {
        return {entries_.data() + static_cast<std::size_t>(r) * length_,
                static_cast<std::size_t>(length_)};
    }

    ColumnSpec column(int c) const;

    bool operator==(const CodingMatrix& other) const = default;

private:
    int class_count_ = 0;
    int length_ = 0;
    std::vector<std::int8_t> entries_;
};

/// One-per-class coding: column q has +1 for class q+1 and -1 elsewhere.
CodingMatrix make_one_vs_all(int class_count);

/// All-pairs coding: one column per unordered class pair (i, j), i < j, in
/// lexicographic order; +1 for i, -1 for j, 0 elsewhere.
CodingMatrix make_one_vs_one(int class_count);

/// Random ternary coding of the requested length.  Each entry is drawn 0
/// with probability zero_prob, otherwise +1/-1 with equal probability.
/// Columns that lack a positive or a negative entry, or that repeat an
/// earlier column up to sign, are re-drawn; after 100 * length failed draws
/// a ConfigError explains that the request cannot be satisfied.  The result
/// always passes validate().
CodingMatrix make_random_ternary(int class_count, int length, double zero_prob,
                                 std::uint64_t seed);

/// A single invariant violation found by validate().
struct ValidityIssue {
    enum class Kind {
        duplicate_rows,          ///< rows `first` and `second` are identical
        column_missing_positive, ///< column `first` has no +1 entry
        column_missing_negative, ///< column `first` has no -1 entry
        zero_row,                ///< row `first` is entirely zero
    };
    Kind kind;
    int first = 0;  ///< 1-based row or column index
    int second = 0; ///< 1-based second row for duplicate_rows

    std::string message() const;
};

struct ValidityReport {
    std::vector<ValidityIssue> issues;

    bool ok() const { return issues.empty(); }
    std::string to_string() const;
};

/// Checks the decoding-side invariants: all rows pairwise distinct, no
/// all-zero row, and every column carrying at least one +1 and one -1.
/// Lists every violation rather than stopping at the first.
ValidityReport validate(const CodingMatrix& m);

/// Returns a copy of `m` with `column` appended.  The column must have one
/// entry per class and at least one +1 and one -1.  Duplicate columns are
/// allowed here: re-learning an already-coded dichotomy is a legitimate step
/// for the incremental trainer, which pairs the copy with fresh weights.
CodingMatrix append_column(const CodingMatrix& m, const ColumnSpec& column);

/// The canonical column separating classes i and j (1-based): +1 at
/// min(i, j), -1 at max(i, j), 0 elsewhere.
ColumnSpec pair_column(int i, int j, int class_count);

/// True when the two columns encode the same dichotomy, i.e. are equal
/// entry-wise or equal after flipping every sign of one of them.
bool same_bipartition(std::span<const std::int8_t> a, std::span<const std::int8_t> b);

/// True when some column of `m` equals `column` up to sign.
bool contains_column(const CodingMatrix& m, const ColumnSpec& column);

/// Text form: header "classes length" then one row per line with entries
/// separated by single spaces.
void write_coding(std::ostream& out, const CodingMatrix& m);
CodingMatrix read_coding(std::istream& in, const std::string& origin);

} // namespace wolc

#endif // WOLC_CODING_HPP
