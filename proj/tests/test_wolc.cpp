#include <doctest.h>

#include <cmath>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "wolc/error.hpp"
#include "wolc/wolc.hpp"

using namespace wolc;

namespace {

Dataset blobs_dataset() {
    // Three well-separated groups on one feature; every one-vs-all column is
    // boostable to zero training error.
    Dataset ds;
    ds.class_count = 3;
    ds.feature_count = 1;
    ds.label_values = {1, 2, 3};
    const double centers[3] = {0.0, 5.0, 10.0};
    ds.features = Matrix(12, 1);
    for (int c = 0; c < 3; ++c) {
        for (int i = 0; i < 4; ++i) {
            ds.features(static_cast<std::size_t>(c * 4 + i), 0) = centers[c] + 0.1 * i;
            ds.labels.push_back(c + 1);
        }
    }
    return ds;
}

Dataset segments_dataset() {
    // Twelve unit segments along one axis with the class cycling 1,2,3,...
    // Every two-class split needs many cuts, so a low boosting budget leaves
    // all margins away from saturation and the optimized hinge risk strictly
    // positive - the regime where the outer loop actually has work to do.
    Dataset ds;
    ds.class_count = 3;
    ds.feature_count = 1;
    ds.label_values = {1, 2, 3};
    std::vector<double> xs;
    for (int s = 0; s < 12; ++s) {
        for (int i = 0; i < 3; ++i) {
            xs.push_back(s + 0.25 * i);
            ds.labels.push_back(s % 3 + 1);
        }
    }
    ds.features = Matrix(xs.size(), 1);
    for (std::size_t i = 0; i < xs.size(); ++i) ds.features(i, 0) = xs[i];
    return ds;
}

Dataset load_iris() {
    const std::string dir = WOLC_DATA_DIR;
    return load_dataset(dir + "/iris.data");
}

int layered_count(const EnsembleModel& model) {
    int count = 0;
    for (const Dichotomizer& d : model.dichotomizers) {
        count += std::holds_alternative<ClusteringDichotomizer>(d) ? 1 : 0;
    }
    return count;
}

std::string serialized(const EnsembleModel& model) {
    std::ostringstream out;
    save_model(out, model);
    return out.str();
}

// Replays the history against the coding the loop must have been holding:
// evaluated lengths advance by the appended pairs, stubborn flags agree with
// whether the pair's column was already present, patience counters follow
// the tracker, risks never rise beyond the cutting-plane slack, and the
// returned snapshot is a prefix of the final column stack.
void check_history(const EnsembleModel& model, const Dataset& ds, const WolcConfig& config,
                   const CodingMatrix& initial) {
    REQUIRE_FALSE(model.history.empty());
    CodingMatrix coding = initial;
    PatienceTracker tracker(config.eta, config.patience);
    const double slack = config.epsilon_cpa * static_cast<double>(ds.size()) + 1e-6;

    for (std::size_t t = 0; t < model.history.size(); ++t) {
        const IterationRecord& record = model.history[t];
        CHECK(record.iteration == static_cast<int>(t));
        CHECK(record.code_length == coding.length());
        if (t + 1 < model.history.size()) {
            CHECK(model.history[t + 1].risk <= record.risk + slack);
        }

        if (record.risk <= 1e-12) {
            // Zero-risk exit: recorded before the tracker sees the value.
            CHECK(record.patience == 0);
            CHECK(record.pairs.empty());
            CHECK(t + 1 == model.history.size());
            break;
        }
        tracker.observe(record.risk);
        CHECK(record.patience == tracker.counter());
        if (record.pairs.empty()) CHECK(t + 1 == model.history.size());

        for (const PairChoice& pair : record.pairs) {
            CHECK(pair.first >= 1);
            CHECK(pair.first < pair.second);
            CHECK(pair.second <= ds.class_count);
            const ColumnSpec column = pair_column(pair.first, pair.second, ds.class_count);
            CHECK(pair.stubborn == contains_column(coding, column));
            coding = append_column(coding, column);
        }
    }

    // The model is a snapshot of some evaluated state: its columns are a
    // prefix of everything ever stacked up, with matching dichotomizer and
    // weight shapes.
    CHECK(model.coding.length() <= coding.length());
    CHECK(model.coding.length() >= initial.length());
    for (int q = 0; q < model.coding.length(); ++q) {
        CHECK(model.coding.column(q).entries == coding.column(q).entries);
    }
    CHECK(model.dichotomizers.size() == static_cast<std::size_t>(model.coding.length()));
    CHECK(model.weights.values().cols() == static_cast<std::size_t>(model.coding.length()));
    CHECK(model.weights.feasibility_issue(model.coding).empty());
    CHECK(model.accuracy.cols() == static_cast<std::size_t>(model.coding.length()));
}

} // namespace

TEST_CASE("patience tracker rates the first risk as improving") {
    PatienceTracker tracker(0.1, 2);
    CHECK(tracker.observe(10.0));
    CHECK(tracker.counter() == 0);
    CHECK_FALSE(tracker.exhausted());
}

TEST_CASE("patience tracker needs a relative drop beyond eta") {
    PatienceTracker tracker(0.1, 2);
    tracker.observe(10.0);

    // (10 - 9.5) / 9.5 is about 0.053: a real drop, but not enough.
    CHECK_FALSE(tracker.observe(9.5));
    CHECK(tracker.counter() == 1);

    // (9.5 - 8) / 8 is about 0.19: resets the counter.
    CHECK(tracker.observe(8.0));
    CHECK(tracker.counter() == 0);

    CHECK_FALSE(tracker.observe(8.0));
    CHECK_FALSE(tracker.exhausted());
    CHECK_FALSE(tracker.observe(7.95));
    CHECK(tracker.counter() == 2);
    CHECK(tracker.exhausted());
}

TEST_CASE("patience tracker with zero eta still demands strict improvement") {
    PatienceTracker tracker(0.0, 3);
    tracker.observe(5.0);
    CHECK_FALSE(tracker.observe(5.0));
    CHECK(tracker.observe(4.999));
    CHECK_FALSE(tracker.observe(5.5));
    CHECK(tracker.counter() == 1);
}

TEST_CASE("initialize builds the one-vs-all starting model") {
    const Dataset iris = load_iris();
    const WolcConfig config;
    const EnsembleModel model = initialize(iris, config);

    CHECK(model.coding == make_one_vs_all(3));
    CHECK(model.dichotomizers.size() == 3);
    CHECK(model.feature_count == 4);
    CHECK(model.label_values == iris.label_values);
    CHECK(model.loss == LossKind::linear);
    CHECK(model.history.empty());

    // One-vs-all has no zero entries, so uniform weights are flat 1/3.
    CHECK(model.weights.values().rows() == 3);
    CHECK(model.weights.values().cols() == 3);
    for (std::size_t p = 0; p < 3; ++p) {
        for (std::size_t q = 0; q < 3; ++q) {
            CHECK(model.weights.values()(p, q) == doctest::Approx(1.0 / 3.0));
        }
    }

    // Boosted stumps fit iris's one-vs-all splits well on training data.
    CHECK(model.accuracy.rows() == 3);
    CHECK(model.accuracy.cols() == 3);
    double lowest = 1.0;
    for (std::size_t p = 0; p < 3; ++p) {
        for (std::size_t q = 0; q < 3; ++q) {
            CHECK(model.accuracy(p, q) >= 0.0);
            CHECK(model.accuracy(p, q) <= 1.0);
            lowest = std::min(lowest, model.accuracy(p, q));
        }
    }
    CHECK(lowest >= 0.8);
}

TEST_CASE("initialize accepts an explicit coding matrix") {
    const Dataset iris = load_iris();
    const CodingMatrix coding = make_one_vs_one(3);
    const EnsembleModel model = initialize(iris, WolcConfig{}, &coding);

    CHECK(model.coding == coding);
    CHECK(model.dichotomizers.size() == 3);
    // Zero coding entries carry no weight; the two active entries split 1.
    for (int p = 0; p < 3; ++p) {
        for (int q = 0; q < 3; ++q) {
            const double expected = coding.at(p, q) == 0 ? 0.0 : 0.5;
            CHECK(model.weights.values()(static_cast<std::size_t>(p),
                                         static_cast<std::size_t>(q)) ==
                  doctest::Approx(expected));
        }
    }
}

TEST_CASE("initialize rejects bad configurations") {
    const Dataset ds = blobs_dataset();
    WolcConfig config;

    config.search_paths = 0;
    CHECK_THROWS_WITH_AS(initialize(ds, config), doctest::Contains("search paths"), ConfigError);
    config = WolcConfig{};
    config.patience = 0;
    CHECK_THROWS_WITH_AS(initialize(ds, config), doctest::Contains("patience"), ConfigError);
    config = WolcConfig{};
    config.eta = -0.5;
    CHECK_THROWS_WITH_AS(initialize(ds, config), doctest::Contains("eta"), ConfigError);
    config = WolcConfig{};
    config.max_iterations = -1;
    CHECK_THROWS_WITH_AS(initialize(ds, config), doctest::Contains("iteration cap"), ConfigError);
    config = WolcConfig{};
    config.cluster_regions = 0;
    CHECK_THROWS_WITH_AS(initialize(ds, config), doctest::Contains("cluster regions"),
                         ConfigError);
    config = WolcConfig{};
    config.boost_rounds = 0;
    CHECK_THROWS_WITH_AS(initialize(ds, config), doctest::Contains("boost rounds"), ConfigError);
    config = WolcConfig{};
    config.epsilon_cpa = -1e-6;
    CHECK_THROWS_WITH_AS(initialize(ds, config), doctest::Contains("epsilon"), ConfigError);
}

TEST_CASE("initialize rejects mismatched and invalid codings") {
    const Dataset ds = blobs_dataset();

    const CodingMatrix wrong_rows = make_one_vs_all(4);
    CHECK_THROWS_WITH_AS(initialize(ds, WolcConfig{}, &wrong_rows),
                         doctest::Contains("dataset has 3 classes"), ConfigError);

    CodingMatrix duplicate(3, 2);
    duplicate.at(0, 0) = 1;
    duplicate.at(1, 0) = 1;
    duplicate.at(2, 0) = -1;
    duplicate.at(0, 1) = 1;
    duplicate.at(1, 1) = 1;
    duplicate.at(2, 1) = -1;
    CHECK_THROWS_WITH_AS(initialize(ds, WolcConfig{}, &duplicate),
                         doctest::Contains("invalid coding matrix"), ConfigError);
}

TEST_CASE("initialize names the column when a split has only one class side") {
    const Dataset ds = blobs_dataset();
    std::vector<std::size_t> first_two_classes;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (ds.labels[i] != 3) first_two_classes.push_back(i);
    }
    const Dataset narrowed = subset(ds, first_two_classes);

    // Column 3 codes class 3 against the rest, but the subset has no class-3
    // examples left, so its binary problem is one-sided.
    CHECK_THROWS_WITH_AS(initialize(narrowed, WolcConfig{}),
                         doctest::Contains("column 3: binary problem is one-sided"), DataError);
}

TEST_CASE("training on separated groups stops at zero risk immediately") {
    const Dataset ds = blobs_dataset();
    const EnsembleModel model = train_wolc(ds, WolcConfig{});

    CHECK(model.training_risk <= 1e-12);
    CHECK(model.coding == make_one_vs_all(3));
    REQUIRE(model.history.size() == 1);
    CHECK(model.history[0].iteration == 0);
    CHECK(model.history[0].risk <= 1e-12);
    CHECK(model.history[0].code_length == 3);
    CHECK(model.history[0].pairs.empty());

    const std::vector<int> predicted = predict_all(model, ds.features, DecoderKind::ow);
    CHECK(predicted == ds.labels);
}

TEST_CASE("strong dichotomizers leave no hinge risk for the loop to chase") {
    // With well-fit one-vs-all columns the optimizer can always cancel the
    // remaining confusion (tied scores cost the hinge nothing), so training
    // on iris converges in the very first iteration without growing the
    // code.
    const Dataset iris = load_iris();
    const EnsembleModel model = train_wolc(iris, WolcConfig{});

    CHECK(model.training_risk <= 1e-12);
    CHECK(model.coding == make_one_vs_all(3));
    REQUIRE(model.history.size() == 1);
    CHECK(model.history[0].pairs.empty());
    check_history(model, iris, WolcConfig{}, make_one_vs_all(3));

    for (const DecoderKind decoder : {DecoderKind::hd, DecoderKind::lb,
                                      DecoderKind::lw_empirical, DecoderKind::ow}) {
        const std::vector<int> predicted = predict_all(model, iris.features, decoder);
        std::size_t hits = 0;
        for (std::size_t i = 0; i < predicted.size(); ++i) {
            if (predicted[i] == iris.labels[i]) ++hits;
        }
        CHECK(static_cast<double>(hits) / static_cast<double>(iris.size()) > 0.9);
    }
}

TEST_CASE("underfit columns drive the loop to append freshly mined pairs") {
    const Dataset ds = segments_dataset();
    WolcConfig config;
    config.boost_rounds = 4;
    config.max_iterations = 6;
    const EnsembleModel model = train_wolc(ds, config);

    // The starting risk is genuinely positive here, so at least one append
    // round happens before the stop.
    REQUIRE(model.history.size() >= 2);
    CHECK(model.history.front().risk > 1e-12);
    CHECK(model.history.front().code_length == 3);
    REQUIRE_FALSE(model.history.front().pairs.empty());

    // One-vs-all holds no plain pair columns, so the first mined pairs are
    // fresh and get ordinary boosted splits.
    for (const PairChoice& pair : model.history.front().pairs) {
        CHECK_FALSE(pair.stubborn);
    }
    CHECK(model.history.front().pairs.size() <=
          static_cast<std::size_t>(config.search_paths));
    check_history(model, ds, config, make_one_vs_all(3));
}

TEST_CASE("a pair whose plain column already exists escalates to a layered split") {
    const Dataset ds = segments_dataset();
    WolcConfig config;
    config.boost_rounds = 4;
    config.max_iterations = 6;
    const CodingMatrix initial = make_one_vs_one(3);
    const EnsembleModel model = train_wolc_from(ds, config, initial);

    // One-vs-one already codes every plain pair, so whatever the mining
    // targets must be marked stubborn and trained as a layered split.
    REQUIRE(model.history.size() >= 2);
    CHECK(model.history.front().risk > 1e-12);
    REQUIRE_FALSE(model.history.front().pairs.empty());
    for (const PairChoice& pair : model.history.front().pairs) {
        CHECK(pair.stubborn);
    }
    check_history(model, ds, config, initial);

    // The kept snapshot advanced beyond the start, so the layered columns
    // are part of the returned model.
    CHECK(model.coding.length() > initial.length());
    CHECK(layered_count(model) ==
          model.coding.length() - initial.length());

    // Region-local boosting untangles what the global stumps could not:
    // the risk collapses once the layered columns arrive.
    CHECK(model.training_risk < 0.1 * model.history.front().risk);
}

TEST_CASE("a flat risk burns patience and the best snapshot is returned") {
    const Dataset ds = segments_dataset();
    WolcConfig config;
    config.boost_rounds = 4;
    config.max_iterations = 10;
    // A single cluster region makes every layered retraining identical to
    // the plain column that is already there, so the risk cannot move.
    config.cluster_regions = 1;
    const CodingMatrix initial = make_one_vs_one(3);
    const EnsembleModel model = train_wolc_from(ds, config, initial);

    // First iteration improves (first risk always does), then the plateau
    // burns all three patience points: four records in total.
    REQUIRE(model.history.size() == 4);
    CHECK(model.history[0].patience == 0);
    CHECK(model.history[1].patience == 1);
    CHECK(model.history[2].patience == 2);
    CHECK(model.history[3].patience == 3);
    CHECK(model.history[3].pairs.empty());
    for (std::size_t t = 0; t + 1 < model.history.size(); ++t) {
        CHECK(model.history[t].risk == doctest::Approx(model.history[0].risk).epsilon(1e-3));
        CHECK_FALSE(model.history[t].pairs.empty());
    }
    check_history(model, ds, config, initial);

    // Nothing improved after the start, so the appended columns are all
    // discarded: the snapshot is the evaluated first state.
    CHECK(model.coding == initial);
    CHECK(model.dichotomizers.size() == 3);
    CHECK(layered_count(model) == 0);
    CHECK(model.training_risk == model.history[0].risk);
}

TEST_CASE("training is deterministic for a fixed configuration") {
    const Dataset ds = segments_dataset();
    WolcConfig config;
    config.boost_rounds = 4;
    config.max_iterations = 6;
    config.seed = 2024;

    const EnsembleModel first = train_wolc_from(ds, config, make_one_vs_one(3));
    const EnsembleModel second = train_wolc_from(ds, config, make_one_vs_one(3));
    CHECK(serialized(first) == serialized(second));
}

TEST_CASE("evaluate_codeword checks the feature count and orders outputs") {
    const Dataset ds = blobs_dataset();
    const EnsembleModel model = train_wolc(ds, WolcConfig{});

    const std::vector<double> x{0.15};
    const TestCodeword codeword = evaluate_codeword(model, x);
    CHECK(codeword.size() == static_cast<std::size_t>(model.coding.length()));
    for (const double value : codeword) {
        CHECK(value >= -1.0);
        CHECK(value <= 1.0);
    }

    const std::vector<double> wrong{0.15, 2.0};
    CHECK_THROWS_WITH_AS(evaluate_codeword(model, wrong),
                         doctest::Contains("example has 2 features, model expects 1"), DataError);
}

TEST_CASE("decoder names map both ways") {
    CHECK(decoder_from_name("hd") == DecoderKind::hd);
    CHECK(decoder_from_name("lb") == DecoderKind::lb);
    CHECK(decoder_from_name("lw") == DecoderKind::lw_empirical);
    CHECK(decoder_from_name("ow") == DecoderKind::ow);
    for (const DecoderKind decoder : {DecoderKind::hd, DecoderKind::lb,
                                      DecoderKind::lw_empirical, DecoderKind::ow}) {
        CHECK(decoder_from_name(decoder_name(decoder)) == decoder);
    }
    CHECK_THROWS_WITH_AS(decoder_from_name("ld"),
                         doctest::Contains("expected hd, lb, lw or ow"), ConfigError);
}

TEST_CASE("batch prediction matches one-at-a-time prediction") {
    const Dataset iris = load_iris();
    WolcConfig config;
    config.max_iterations = 3;
    const EnsembleModel model = train_wolc(iris, config);

    for (const DecoderKind decoder : {DecoderKind::hd, DecoderKind::lb,
                                      DecoderKind::lw_empirical, DecoderKind::ow}) {
        const std::vector<int> batch = predict_all(model, iris.features, decoder);
        REQUIRE(batch.size() == iris.size());
        for (std::size_t i = 0; i < iris.size(); i += 7) {
            CHECK(batch[i] == predict(model, iris.features.row(i), decoder));
        }
    }
}

TEST_CASE("model serialization round-trips byte for byte") {
    const Dataset ds = segments_dataset();
    WolcConfig config;
    config.boost_rounds = 4;
    config.max_iterations = 6;
    const EnsembleModel model = train_wolc_from(ds, config, make_one_vs_one(3));
    REQUIRE(layered_count(model) > 0); // both dichotomizer kinds in one model

    const std::string text = serialized(model);
    std::istringstream in(text);
    const EnsembleModel loaded = load_model(in, "buffer");

    CHECK(loaded.coding == model.coding);
    CHECK(loaded.feature_count == model.feature_count);
    CHECK(loaded.label_values == model.label_values);
    CHECK(loaded.loss == model.loss);
    CHECK(loaded.training_risk == model.training_risk);
    CHECK(loaded.weights.values() == model.weights.values());
    CHECK(loaded.accuracy == model.accuracy);
    CHECK(loaded.history.size() == model.history.size());
    CHECK(serialized(loaded) == text);

    // The loaded model predicts identically.
    for (const DecoderKind decoder : {DecoderKind::hd, DecoderKind::ow}) {
        CHECK(predict_all(loaded, ds.features, decoder) ==
              predict_all(model, ds.features, decoder));
    }
}

TEST_CASE("model loading reports malformed input precisely") {
    const Dataset ds = blobs_dataset();
    const EnsembleModel model = train_wolc(ds, WolcConfig{});
    const std::string text = serialized(model);

    {
        std::istringstream in("hello 1\n");
        CHECK_THROWS_WITH_AS(load_model(in, "buffer"),
                             doctest::Contains("expected 'wolc-model', got 'hello'"), DataError);
    }
    {
        std::istringstream in("wolc-model 2\n");
        CHECK_THROWS_WITH_AS(load_model(in, "buffer"),
                             doctest::Contains("unsupported model format version 2"), DataError);
    }
    {
        std::istringstream in(text.substr(0, text.size() / 2));
        CHECK_THROWS_WITH_AS(load_model(in, "buffer"), doctest::Contains("unexpected end"),
                             DataError);
    }
    {
        std::string bad = text;
        const auto at = bad.find("loss linear");
        REQUIRE(at != std::string::npos);
        bad.replace(at, 11, "loss square");
        std::istringstream in(bad);
        CHECK_THROWS_WITH_AS(load_model(in, "buffer"),
                             doctest::Contains("unknown loss kind 'square'"), DataError);
    }
}

TEST_CASE("history lines spell out the targeted pairs") {
    std::vector<IterationRecord> history;
    IterationRecord first;
    first.iteration = 0;
    first.risk = 2.5;
    first.code_length = 3;
    first.patience = 0;
    first.pairs = {{1, 2, false}, {1, 3, true}};
    history.push_back(first);
    IterationRecord last;
    last.iteration = 1;
    last.risk = 0.125;
    last.code_length = 5;
    last.patience = 1;
    history.push_back(last);

    std::ostringstream out;
    write_history(out, history);
    CHECK(out.str() == "t=0 risk=2.5 length=3 patience=0 pairs=1:2:plain,1:3:layered\n"
                       "t=1 risk=0.125 length=5 patience=1 pairs=-\n");
}
