#include "wolc/decoding.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>

#include "wolc/error.hpp"

namespace wolc {

double column_loss(LossKind kind, double agreement) {
    switch (kind) {
    case LossKind::linear: return -agreement;
    case LossKind::exponential: return std::exp(-agreement);
    }
    throw ConfigError("unknown loss kind");
}

WeightMatrix WeightMatrix::uniform(const CodingMatrix& m) {
    Matrix values(static_cast<std::size_t>(m.class_count()), static_cast<std::size_t>(m.length()));
    for (int p = 0; p < m.class_count(); ++p) {
        int nonzero = 0;
        for (int q = 0; q < m.length(); ++q) nonzero += m.at(p, q) != 0;
        if (nonzero == 0) {
            throw ConfigError("row " + std::to_string(p + 1) +
                              " of the coding matrix is entirely zero; weights are undefined");
        }
        for (int q = 0; q < m.length(); ++q) {
            if (m.at(p, q) != 0) {
                values(static_cast<std::size_t>(p), static_cast<std::size_t>(q)) =
                    1.0 / static_cast<double>(nonzero);
            }
        }
    }
    return WeightMatrix(std::move(values));
}

std::string WeightMatrix::feasibility_issue(const CodingMatrix& m, double tolerance) const {
    if (values_.rows() != static_cast<std::size_t>(m.class_count()) ||
        values_.cols() != static_cast<std::size_t>(m.length())) {
        return "weight matrix is " + std::to_string(values_.rows()) + "x" +
               std::to_string(values_.cols()) + ", coding matrix is " +
               std::to_string(m.class_count()) + "x" + std::to_string(m.length());
    }
    for (int p = 0; p < m.class_count(); ++p) {
        double row_sum = 0.0;
        for (int q = 0; q < m.length(); ++q) {
            const double w = at(p, q);
            if (m.at(p, q) == 0 && w != 0.0) {
                return "weight (" + std::to_string(p + 1) + ", " + std::to_string(q + 1) +
                       ") must be zero where the coding entry is zero";
            }
            if (w < -tolerance || w > 1.0 + tolerance) {
                return "weight (" + std::to_string(p + 1) + ", " + std::to_string(q + 1) +
                       ") = " + std::to_string(w) + " lies outside [0, 1]";
            }
            row_sum += w;
        }
        if (std::abs(row_sum - 1.0) > tolerance) {
            return "row " + std::to_string(p + 1) + " sums to " + std::to_string(row_sum) +
                   ", expected 1";
        }
    }
    return {};
}

WeightMatrix empirical_weights(const CodingMatrix& m, const Matrix& accuracy) {
    if (accuracy.rows() != static_cast<std::size_t>(m.class_count()) ||
        accuracy.cols() != static_cast<std::size_t>(m.length())) {
        throw ConfigError("accuracy matrix is " + std::to_string(accuracy.rows()) + "x" +
                          std::to_string(accuracy.cols()) + ", coding matrix is " +
                          std::to_string(m.class_count()) + "x" + std::to_string(m.length()));
    }
    Matrix values(accuracy.rows(), accuracy.cols());
    for (int p = 0; p < m.class_count(); ++p) {
        double total = 0.0;
        int nonzero = 0;
        for (int q = 0; q < m.length(); ++q) {
            if (m.at(p, q) == 0) continue;
            const double a = accuracy(static_cast<std::size_t>(p), static_cast<std::size_t>(q));
            if (a < 0.0) {
                throw ConfigError("accuracy (" + std::to_string(p + 1) + ", " +
                                  std::to_string(q + 1) + ") is negative");
            }
            total += a;
            ++nonzero;
        }
        if (nonzero == 0) {
            throw ConfigError("row " + std::to_string(p + 1) +
                              " of the coding matrix is entirely zero; weights are undefined");
        }
        for (int q = 0; q < m.length(); ++q) {
            if (m.at(p, q) == 0) continue;
            values(static_cast<std::size_t>(p), static_cast<std::size_t>(q)) =
                total > 0.0
                    ? accuracy(static_cast<std::size_t>(p), static_cast<std::size_t>(q)) / total
                    : 1.0 / static_cast<double>(nonzero);
        }
    }
    return WeightMatrix(std::move(values));
}

LossTensor::LossTensor(std::size_t examples, int class_count, int length)
    : examples_(examples), class_count_(class_count), length_(length),
      values_(examples * static_cast<std::size_t>(class_count) * static_cast<std::size_t>(length),
              0.0) {}

LossTensor build_loss_tensor(const std::vector<TestCodeword>& codewords,
                             const CodingMatrix& m, LossKind kind) {
    for (std::size_t i = 0; i < codewords.size(); ++i) {
        if (codewords[i].size() != static_cast<std::size_t>(m.length())) {
            throw DataError("codeword " + std::to_string(i + 1) + " has " +
                            std::to_string(codewords[i].size()) + " outputs, coding matrix has " +
                            std::to_string(m.length()) + " columns");
        }
    }
    LossTensor tensor(codewords.size(), m.class_count(), m.length());
    double largest = 0.0;
    for (std::size_t i = 0; i < codewords.size(); ++i) {
        for (int p = 0; p < m.class_count(); ++p) {
            for (int q = 0; q < m.length(); ++q) {
                const double value =
                    column_loss(kind, codewords[i][static_cast<std::size_t>(q)] * m.at(p, q));
                tensor.at(i, p, q) = value;
                largest = std::max(largest, std::abs(value));
            }
        }
    }
    if (largest > 0.0) {
        for (std::size_t i = 0; i < codewords.size(); ++i) {
            for (int p = 0; p < m.class_count(); ++p) {
                for (int q = 0; q < m.length(); ++q) tensor.at(i, p, q) /= largest;
            }
        }
    }
    tensor.set_scale(largest);
    return tensor;
}

Matrix class_losses(const LossTensor& tensor, const WeightMatrix& weights) {
    Matrix out(tensor.examples(), static_cast<std::size_t>(tensor.class_count()));
    for (std::size_t i = 0; i < tensor.examples(); ++i) {
        for (int p = 0; p < tensor.class_count(); ++p) {
            double sum = 0.0;
            for (int q = 0; q < tensor.length(); ++q) {
                sum += weights.at(p, q) * tensor.at(i, p, q);
            }
            out(i, static_cast<std::size_t>(p)) = sum;
        }
    }
    return out;
}

namespace {

void check_codeword(const TestCodeword& x, const CodingMatrix& m) {
    if (x.size() != static_cast<std::size_t>(m.length())) {
        throw DataError("codeword has " + std::to_string(x.size()) +
                        " outputs, coding matrix has " + std::to_string(m.length()) + " columns");
    }
}

// Index of the smallest score, lowest index on ties; returns a 1-based class.
int argmin_class(const std::vector<double>& scores) {
    int best = 0;
    for (std::size_t p = 1; p < scores.size(); ++p) {
        if (scores[p] < scores[static_cast<std::size_t>(best)]) best = static_cast<int>(p);
    }
    return best + 1;
}

} // namespace

int hd_decode(const TestCodeword& x, const CodingMatrix& m) {
    check_codeword(x, m);
    std::vector<double> distance(static_cast<std::size_t>(m.class_count()), 0.0);
    for (int p = 0; p < m.class_count(); ++p) {
        for (int q = 0; q < m.length(); ++q) {
            const double s = x[static_cast<std::size_t>(q)] >= 0.0 ? 1.0 : -1.0;
            distance[static_cast<std::size_t>(p)] += (1.0 - s * m.at(p, q)) / 2.0;
        }
    }
    return argmin_class(distance);
}

int lb_decode(const TestCodeword& x, const CodingMatrix& m, LossKind kind) {
    check_codeword(x, m);
    std::vector<double> score(static_cast<std::size_t>(m.class_count()), 0.0);
    for (int p = 0; p < m.class_count(); ++p) {
        for (int q = 0; q < m.length(); ++q) {
            score[static_cast<std::size_t>(p)] +=
                column_loss(kind, x[static_cast<std::size_t>(q)] * m.at(p, q));
        }
    }
    return argmin_class(score);
}

int lw_decode(const TestCodeword& x, const CodingMatrix& m, const WeightMatrix& weights,
              LossKind kind) {
    check_codeword(x, m);
    const std::string issue = weights.feasibility_issue(m);
    if (!issue.empty()) throw ConfigError("infeasible weight matrix: " + issue);
    std::vector<double> score(static_cast<std::size_t>(m.class_count()), 0.0);
    for (int p = 0; p < m.class_count(); ++p) {
        for (int q = 0; q < m.length(); ++q) {
            score[static_cast<std::size_t>(p)] +=
                weights.at(p, q) * column_loss(kind, x[static_cast<std::size_t>(q)] * m.at(p, q));
        }
    }
    return argmin_class(score);
}

int ow_decode(const TestCodeword& x, const CodingMatrix& m, const WeightMatrix& weights,
              LossKind kind) {
    // Same decision rule as loss-weighted decoding; the weights are expected
    // to come from the optimizer rather than from per-column accuracies.
    return lw_decode(x, m, weights, kind);
}

PairRiskMatrix pair_risk_matrix(const LossTensor& tensor, const std::vector<int>& labels,
                                const WeightMatrix& weights, RiskKind kind) {
    if (labels.size() != tensor.examples()) {
        throw DataError("tensor has " + std::to_string(tensor.examples()) + " examples, got " +
                        std::to_string(labels.size()) + " labels");
    }
    const int classes = tensor.class_count();
    const Matrix scores = class_losses(tensor, weights);

    PairRiskMatrix out;
    out.kind = kind;
    out.risk = Matrix(static_cast<std::size_t>(classes), static_cast<std::size_t>(classes));

    for (std::size_t k = 0; k < tensor.examples(); ++k) {
        const int truth = labels[k];
        if (truth < 1 || truth > classes) {
            throw DataError("label " + std::to_string(truth) + " of example " +
                            std::to_string(k + 1) + " is outside 1.." + std::to_string(classes));
        }
        if (kind == RiskKind::confusion) {
            int predicted = 0;
            for (int p = 1; p < classes; ++p) {
                if (scores(k, static_cast<std::size_t>(p)) <
                    scores(k, static_cast<std::size_t>(predicted))) {
                    predicted = p;
                }
            }
            if (predicted + 1 != truth) {
                out.risk(static_cast<std::size_t>(truth) - 1, static_cast<std::size_t>(predicted)) +=
                    1.0;
            }
        } else {
            // A class j collects risk only when it strictly undercuts every
            // other class's weighted loss; the mass is the gap to the true
            // class's loss.
            for (int j = 0; j < classes; ++j) {
                if (j + 1 == truth) continue;
                double rival_min = std::numeric_limits<double>::infinity();
                for (int p = 0; p < classes; ++p) {
                    if (p != j) {
                        rival_min = std::min(rival_min, scores(k, static_cast<std::size_t>(p)));
                    }
                }
                if (rival_min - scores(k, static_cast<std::size_t>(j)) > 0.0) {
                    out.risk(static_cast<std::size_t>(truth) - 1, static_cast<std::size_t>(j)) +=
                        scores(k, static_cast<std::size_t>(truth) - 1) -
                        scores(k, static_cast<std::size_t>(j));
                }
            }
        }
    }
    return out;
}

std::vector<ConfusingPair> top_confusing_pairs(const PairRiskMatrix& risks, int count) {
    if (count < 0) throw ConfigError("pair count must be non-negative, got " + std::to_string(count));
    const auto classes = risks.risk.rows();
    std::vector<ConfusingPair> pairs;
    for (std::size_t i = 0; i < classes; ++i) {
        for (std::size_t j = i + 1; j < classes; ++j) {
            const double risk = risks.risk(i, j) + risks.risk(j, i);
            if (risk > 0.0) {
                pairs.push_back({static_cast<int>(i) + 1, static_cast<int>(j) + 1, risk});
            }
        }
    }
    std::sort(pairs.begin(), pairs.end(), [](const ConfusingPair& a, const ConfusingPair& b) {
        if (a.risk != b.risk) return a.risk > b.risk;
        if (a.first != b.first) return a.first < b.first;
        return a.second < b.second;
    });
    if (pairs.size() > static_cast<std::size_t>(count)) pairs.resize(static_cast<std::size_t>(count));
    return pairs;
}

namespace {

std::string nine_digits(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.9g", value);
    return buffer;
}

} // namespace

void write_loss_tensor(std::ostream& out, const LossTensor& tensor) {
    out << "examples " << tensor.examples() << " classes " << tensor.class_count() << " length "
        << tensor.length() << " scale " << nine_digits(tensor.scale()) << '\n';
    for (std::size_t i = 0; i < tensor.examples(); ++i) {
        for (int p = 0; p < tensor.class_count(); ++p) {
            for (int q = 0; q < tensor.length(); ++q) {
                out << i + 1 << ' ' << p + 1 << ' ' << q + 1 << ' '
                    << nine_digits(tensor.at(i, p, q)) << '\n';
            }
        }
    }
}

void write_pair_risk(std::ostream& out, const PairRiskMatrix& risks) {
    out << "classes " << risks.risk.rows() << " kind "
        << (risks.kind == RiskKind::confusion ? "confusion" : "training-risk") << '\n';
    for (std::size_t i = 0; i < risks.risk.rows(); ++i) {
        for (std::size_t j = 0; j < risks.risk.cols(); ++j) {
            if (risks.risk(i, j) != 0.0) {
                out << i + 1 << ' ' << j + 1 << ' ' << nine_digits(risks.risk(i, j)) << '\n';
            }
        }
    }
}

} // namespace wolc
