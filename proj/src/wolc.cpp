#include "wolc/wolc.hpp"

#include <algorithm>
#include <cmath>

#include "wolc/error.hpp"
#include "wolc/rng.hpp"

namespace wolc {

namespace {

void check_config(const WolcConfig& config) {
    if (config.search_paths < 1) {
        throw ConfigError("search paths must be positive, got " +
                          std::to_string(config.search_paths));
    }
    if (config.patience < 1) {
        throw ConfigError("patience must be positive, got " + std::to_string(config.patience));
    }
    if (config.eta < 0.0) {
        throw ConfigError("eta must be non-negative, got " + std::to_string(config.eta));
    }
    if (config.max_iterations < 0) {
        throw ConfigError("iteration cap must be non-negative, got " +
                          std::to_string(config.max_iterations));
    }
    if (config.cluster_regions < 1) {
        throw ConfigError("cluster regions must be positive, got " +
                          std::to_string(config.cluster_regions));
    }
    if (config.boost_rounds < 1) {
        throw ConfigError("boost rounds must be positive, got " +
                          std::to_string(config.boost_rounds));
    }
    if (config.epsilon_cpa < 0.0) {
        throw ConfigError("epsilon must be non-negative, got " +
                          std::to_string(config.epsilon_cpa));
    }
}

std::vector<TestCodeword> training_codewords(const EnsembleModel& model, const Dataset& ds) {
    std::vector<TestCodeword> codewords(ds.size());
    for (std::size_t i = 0; i < ds.size(); ++i) {
        codewords[i] = evaluate_codeword(model, ds.features.row(i));
    }
    return codewords;
}

// Fraction of class-p training examples whose column-q output sign matches
// the coding entry; rows coded zero stay at 0 (they are never consulted).
Matrix training_accuracy(const EnsembleModel& model, const Dataset& ds,
                         const std::vector<TestCodeword>& codewords) {
    const int classes = model.coding.class_count();
    const int length = model.coding.length();
    Matrix accuracy(static_cast<std::size_t>(classes), static_cast<std::size_t>(length));
    std::vector<std::size_t> class_size(static_cast<std::size_t>(classes), 0);
    for (std::size_t i = 0; i < ds.size(); ++i) {
        const auto p = static_cast<std::size_t>(ds.labels[i]) - 1;
        ++class_size[p];
        for (int q = 0; q < length; ++q) {
            const int coded = model.coding.at(static_cast<int>(p), q);
            if (coded == 0) continue;
            const double sign = codewords[i][static_cast<std::size_t>(q)] >= 0.0 ? 1.0 : -1.0;
            if (sign == static_cast<double>(coded)) {
                accuracy(p, static_cast<std::size_t>(q)) += 1.0;
            }
        }
    }
    for (std::size_t p = 0; p < static_cast<std::size_t>(classes); ++p) {
        if (class_size[p] == 0) continue;
        for (std::size_t q = 0; q < static_cast<std::size_t>(length); ++q) {
            accuracy(p, q) /= static_cast<double>(class_size[p]);
        }
    }
    return accuracy;
}

// Extends the weight matrix with zero-weighted columns for freshly appended
// coding columns; feasibility (zero pattern, row sums) is preserved because
// the new entries carry no weight until the next optimization pass.
WeightMatrix zero_extend(const WeightMatrix& weights, int new_length) {
    Matrix values(weights.values().rows(), static_cast<std::size_t>(new_length));
    for (std::size_t p = 0; p < weights.values().rows(); ++p) {
        for (std::size_t q = 0; q < weights.values().cols(); ++q) {
            values(p, q) = weights.values()(p, q);
        }
    }
    return WeightMatrix(std::move(values));
}

} // namespace

EnsembleModel initialize(const Dataset& ds, const WolcConfig& config,
                         const CodingMatrix* initial_coding) {
    check_config(config);
    if (ds.class_count < 2) {
        throw DataError("training needs at least 2 classes, got " +
                        std::to_string(ds.class_count));
    }

    EnsembleModel model;
    model.coding = initial_coding ? *initial_coding : make_one_vs_all(ds.class_count);
    if (model.coding.class_count() != ds.class_count) {
        throw ConfigError("coding matrix has " + std::to_string(model.coding.class_count()) +
                          " rows, dataset has " + std::to_string(ds.class_count) + " classes");
    }
    const ValidityReport report = validate(model.coding);
    if (!report.ok()) {
        throw ConfigError("invalid coding matrix: " + report.to_string());
    }

    model.feature_count = ds.feature_count;
    model.label_values = ds.label_values;
    model.loss = config.loss;
    for (int q = 0; q < model.coding.length(); ++q) {
        try {
            model.dichotomizers.emplace_back(
                train_adaboost(induce_binary_problem(ds, model.coding.column(q)),
                               config.boost_rounds));
        } catch (const Error& e) {
            throw DataError("column " + std::to_string(q + 1) + ": " + e.what());
        }
    }
    model.weights = WeightMatrix::uniform(model.coding);
    model.accuracy = training_accuracy(model, ds, training_codewords(model, ds));
    return model;
}

namespace {

EnsembleModel train_loop(const Dataset& ds, const WolcConfig& config,
                         const CodingMatrix* initial_coding) {
    EnsembleModel model = initialize(ds, config, initial_coding);
    const int cap = config.max_iterations > 0 ? config.max_iterations : 3 * ds.class_count;

    EnsembleModel best = model;
    PatienceTracker tracker(config.eta, config.patience);
    std::vector<IterationRecord> history;

    CpaOptions cpa;
    cpa.epsilon = config.epsilon_cpa;

    for (int t = 0; t < cap; ++t) {
        // Evaluate the current column set and re-optimize its weights.
        const std::vector<TestCodeword> codewords = training_codewords(model, ds);
        const LossTensor tensor = build_loss_tensor(codewords, model.coding, config.loss);
        const OwSolution solution = solve_ow_cpa(tensor, ds.labels, model.coding, cpa);
        model.weights = solution.weights;
        model.training_risk = solution.objective;

        IterationRecord record;
        record.iteration = t;
        record.risk = solution.objective;
        record.code_length = model.coding.length();

        if (solution.objective <= 1e-12) {
            // Perfect separation: nothing left to optimize.
            best = model;
            history.push_back(record);
            break;
        }
        if (tracker.observe(solution.objective)) {
            best = model;
        }
        record.patience = tracker.counter();
        if (tracker.exhausted() || t + 1 == cap) {
            history.push_back(record);
            break;
        }

        // Target the class pairs carrying the most hinge-risk mass.
        const PairRiskMatrix risks =
            pair_risk_matrix(tensor, ds.labels, model.weights, RiskKind::training_risk);
        const std::vector<ConfusingPair> pairs =
            top_confusing_pairs(risks, config.search_paths);
        if (pairs.empty()) {
            history.push_back(record);
            break;
        }

        for (std::size_t k = 0; k < pairs.size(); ++k) {
            const ColumnSpec column = pair_column(pairs[k].first, pairs[k].second, ds.class_count);
            const bool stubborn = contains_column(model.coding, column);
            record.pairs.push_back({pairs[k].first, pairs[k].second, stubborn});

            const BinaryProblem problem = induce_binary_problem(ds, column);
            if (stubborn) {
                // The plain dichotomy is already coded and still leaks risk:
                // split the pair's examples into regions and boost locally.
                model.dichotomizers.emplace_back(train_layered_dichotomizer(
                    problem, config.cluster_regions, config.boost_rounds,
                    derive_seed(config.seed, static_cast<std::uint64_t>(t), k)));
            } else {
                model.dichotomizers.emplace_back(train_adaboost(problem, config.boost_rounds));
            }
            model.coding = append_column(model.coding, column);
        }
        model.weights = zero_extend(model.weights, model.coding.length());
        history.push_back(record);
    }

    best.accuracy = training_accuracy(best, ds, training_codewords(best, ds));
    best.history = std::move(history);
    return best;
}

} // namespace

EnsembleModel train_wolc(const Dataset& ds, const WolcConfig& config) {
    return train_loop(ds, config, nullptr);
}

EnsembleModel train_wolc_from(const Dataset& ds, const WolcConfig& config,
                              const CodingMatrix& initial_coding) {
    return train_loop(ds, config, &initial_coding);
}

TestCodeword evaluate_codeword(const EnsembleModel& model, std::span<const double> x) {
    if (x.size() != static_cast<std::size_t>(model.feature_count)) {
        throw DataError("example has " + std::to_string(x.size()) + " features, model expects " +
                        std::to_string(model.feature_count));
    }
    TestCodeword codeword;
    codeword.reserve(model.dichotomizers.size());
    for (const Dichotomizer& d : model.dichotomizers) {
        codeword.push_back(dichotomizer_margin(d, x));
    }
    return codeword;
}

DecoderKind decoder_from_name(const std::string& name) {
    if (name == "hd") return DecoderKind::hd;
    if (name == "lb") return DecoderKind::lb;
    if (name == "lw") return DecoderKind::lw_empirical;
    if (name == "ow") return DecoderKind::ow;
    throw ConfigError("unknown decoder '" + name + "' (expected hd, lb, lw or ow)");
}

std::string decoder_name(DecoderKind decoder) {
    switch (decoder) {
    case DecoderKind::hd: return "hd";
    case DecoderKind::lb: return "lb";
    case DecoderKind::lw_empirical: return "lw";
    case DecoderKind::ow: return "ow";
    }
    throw ConfigError("unknown decoder value");
}

int predict(const EnsembleModel& model, std::span<const double> x, DecoderKind decoder) {
    const TestCodeword codeword = evaluate_codeword(model, x);
    switch (decoder) {
    case DecoderKind::hd: return hd_decode(codeword, model.coding);
    case DecoderKind::lb: return lb_decode(codeword, model.coding, model.loss);
    case DecoderKind::lw_empirical:
        return lw_decode(codeword, model.coding, empirical_weights(model.coding, model.accuracy),
                         model.loss);
    case DecoderKind::ow: return ow_decode(codeword, model.coding, model.weights, model.loss);
    }
    throw ConfigError("unknown decoder value");
}

std::vector<int> predict_all(const EnsembleModel& model, const Matrix& features,
                             DecoderKind decoder) {
    // The empirical weights are identical across examples; hoist them so a
    // batch prediction does not rebuild the matrix per row.
    WeightMatrix weights;
    if (decoder == DecoderKind::lw_empirical) {
        weights = empirical_weights(model.coding, model.accuracy);
    } else if (decoder == DecoderKind::ow) {
        weights = model.weights;
    }

    std::vector<int> labels;
    labels.reserve(features.rows());
    for (std::size_t i = 0; i < features.rows(); ++i) {
        const TestCodeword codeword = evaluate_codeword(model, features.row(i));
        switch (decoder) {
        case DecoderKind::hd: labels.push_back(hd_decode(codeword, model.coding)); break;
        case DecoderKind::lb: labels.push_back(lb_decode(codeword, model.coding, model.loss)); break;
        case DecoderKind::lw_empirical:
        case DecoderKind::ow:
            labels.push_back(lw_decode(codeword, model.coding, weights, model.loss));
            break;
        }
    }
    return labels;
}

} // namespace wolc
