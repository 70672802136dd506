#ifndef WOLC_DECODING_HPP
#define WOLC_DECODING_HPP

#include <iosfwd>
#include <span>
#include <vector>

#include "wolc/coding.hpp"
#include "wolc/matrix.hpp"

namespace wolc {

/// Vector of dichotomizer outputs for one example, one value per coding
/// column, each in [-1, +1].
using TestCodeword = std::vector<double>;

/// Per-column loss applied to the agreement value x_q * m_{p,q}.
enum class LossKind {
    linear,      ///< l(theta) = -theta
    exponential, ///< l(theta) = exp(-theta)
};

double column_loss(LossKind kind, double agreement);

/// Per-class decoding weights: one row per class, non-negative, zero exactly
/// where the coding matrix is zero, each row summing to one.
class WeightMatrix {
public:
    WeightMatrix() = default;
    explicit WeightMatrix(Matrix values) : values_(std::move(values)) {}

    /// Equal weight on every non-zero coding entry of each row.
    static WeightMatrix uniform(const CodingMatrix& m);

    const Matrix& values() const { return values_; }
    Matrix& values() { return values_; }
    double at(int row, int col) const {
        return values_(static_cast<std::size_t>(row), static_cast<std::size_t>(col));
    }

    /// Checks the coupling invariants against `m` within `tolerance`:
    /// matching shape, entries in [0, 1], zero exactly where m is zero, and
    /// unit row sums.  Returns an empty string when feasible, otherwise a
    /// description of the first violation.
    std::string feasibility_issue(const CodingMatrix& m, double tolerance = 1e-9) const;

    bool operator==(const WeightMatrix& other) const = default;

private:
    Matrix values_;
};

/// Weights proportional to per-class dichotomizer accuracy: row p of the
/// result is accuracy(p, q) over the columns with non-zero coding, rescaled
/// to sum to one; a row with zero total accuracy falls back to uniform.
WeightMatrix empirical_weights(const CodingMatrix& m, const Matrix& accuracy);

/// Losses of every (example, class, column) triple, rescaled by the largest
/// absolute loss so that entries lie in [-1, 1] (exponential losses stay
/// positive).  A tensor whose raw losses are all zero is kept as-is with
/// scale() == 0.
class LossTensor {
public:
    LossTensor() = default;
    LossTensor(std::size_t examples, int class_count, int length);

    std::size_t examples() const { return examples_; }
    int class_count() const { return class_count_; }
    int length() const { return length_; }
    double scale() const { return scale_; }

    double at(std::size_t i, int p, int q) const {
        return values_[(i * class_count_ + static_cast<std::size_t>(p)) * length_ +
                       static_cast<std::size_t>(q)];
    }
    double& at(std::size_t i, int p, int q) {
        return values_[(i * class_count_ + static_cast<std::size_t>(p)) * length_ +
                       static_cast<std::size_t>(q)];
    }

    /// Loss row u_{i,p} (length() values).
    std::span<const double> row(std::size_t i, int p) const {
        return {values_.data() + (i * class_count_ + static_cast<std::size_t>(p)) * length_,
                static_cast<std::size_t>(length_)};
    }

    void set_scale(double scale) { scale_ = scale; }

private:
    std::size_t examples_ = 0;
    int class_count_ = 0;
    int length_ = 0;
    double scale_ = 0.0;
    std::vector<double> values_;
};

/// Builds the normalized loss tensor for a batch of codewords.
LossTensor build_loss_tensor(const std::vector<TestCodeword>& codewords,
                             const CodingMatrix& m, LossKind kind);

/// Weighted per-class losses: entry (i, p) is w_p . u_{i,p}.
Matrix class_losses(const LossTensor& tensor, const WeightMatrix& weights);

/// Hamming-distance decoding: class minimizing
/// sum_q (1 - sign(x_q) * m_{p,q}) / 2 with sign(0) taken as +1, so zero
/// coding entries contribute 1/2.  Ties resolve to the smallest class.
/// Returns a 1-based class label.
int hd_decode(const TestCodeword& x, const CodingMatrix& m);

/// Loss-based decoding: class minimizing sum_q l(x_q * m_{p,q}).
int lb_decode(const TestCodeword& x, const CodingMatrix& m, LossKind kind);

/// Loss-weighted decoding: class minimizing sum_q w_{p,q} * l(x_q * m_{p,q}).
int lw_decode(const TestCodeword& x, const CodingMatrix& m, const WeightMatrix& weights,
              LossKind kind);

/// Decoding with an optimized weight matrix; the decision rule is the
/// loss-weighted one, the difference is where the weights come from.
int ow_decode(const TestCodeword& x, const CodingMatrix& m, const WeightMatrix& weights,
              LossKind kind);

/// What a pair-risk matrix accumulates.
enum class RiskKind {
    confusion,     ///< entry (i, j): count of class-i examples decoded as j
    training_risk, ///< entry (i, j): summed loss-gap mass of i decoded as j
};

/// Directed class-pair risk: square class_count x class_count matrix with a
/// zero diagonal.  Entry (i, j) measures how badly class i is drawn toward
/// class j under the given weights.
struct PairRiskMatrix {
    Matrix risk;
    RiskKind kind = RiskKind::confusion;
};

PairRiskMatrix pair_risk_matrix(const LossTensor& tensor, const std::vector<int>& labels,
                                const WeightMatrix& weights, RiskKind kind);

/// One unordered class pair with its symmetrized risk eps(i,j) + eps(j,i).
struct ConfusingPair {
    int first = 0;  ///< 1-based, first < second
    int second = 0;
    double risk = 0.0;
};

/// The up-to-`count` highest-risk unordered pairs, sorted by descending
/// risk; ties resolve to the lexicographically smaller pair.  Pairs with
/// zero risk are never returned, so the result may be shorter than `count`.
std::vector<ConfusingPair> top_confusing_pairs(const PairRiskMatrix& risks, int count);

/// Debug exports: one record per line, 9 significant digits.
void write_loss_tensor(std::ostream& out, const LossTensor& tensor);
void write_pair_risk(std::ostream& out, const PairRiskMatrix& risks);

} // namespace wolc

#endif // WOLC_DECODING_HPP
