#include <doctest.h>

#include <cmath>
#include <limits>
#include <set>
#include <vector>

#include "wolc/error.hpp"
#include "wolc/learners.hpp"
#include "wolc/rng.hpp"

using namespace wolc;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

BinaryProblem make_problem(const std::vector<std::vector<double>>& rows,
                           const std::vector<int>& targets) {
    BinaryProblem problem;
    problem.features = Matrix(rows.size(), rows.front().size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t f = 0; f < rows[i].size(); ++f) problem.features(i, f) = rows[i][f];
    }
    problem.targets = targets;
    return problem;
}

// Exhaustive reference search for the minimum-weighted-error stump under
// uniform weights, visiting candidates in the library's tie-break order:
// the constant split first, then features ascending, thresholds ascending,
// positive polarity before negative.  Errors are exact multiples of 1/n when
// n is a power of two, so ties are exact.
struct OracleStump {
    int feature = 0;
    double threshold = -kInf;
    int polarity = 1;
    double error = kInf;
};

OracleStump best_stump_by_brute_force(const BinaryProblem& problem) {
    const std::size_t n = problem.targets.size();
    const double w = 1.0 / static_cast<double>(n);

    OracleStump best;
    auto consider = [&](int feature, double threshold, int polarity) {
        double error = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const int prediction =
                problem.features(i, static_cast<std::size_t>(feature)) <= threshold ? polarity
                                                                                    : -polarity;
            if (prediction != problem.targets[i]) error += w;
        }
        if (error < best.error) best = {feature, threshold, polarity, error};
    };

    consider(0, -kInf, +1);
    consider(0, -kInf, -1);
    for (std::size_t f = 0; f < problem.features.cols(); ++f) {
        std::set<double> values;
        for (std::size_t i = 0; i < n; ++i) values.insert(problem.features(i, f));
        std::vector<double> sorted(values.begin(), values.end());
        for (std::size_t k = 0; k + 1 < sorted.size(); ++k) {
            const double threshold = sorted[k] + (sorted[k + 1] - sorted[k]) / 2.0;
            consider(static_cast<int>(f), threshold, +1);
            consider(static_cast<int>(f), threshold, -1);
        }
    }
    return best;
}

double training_error(const StumpEnsemble& ensemble, const BinaryProblem& problem) {
    std::size_t wrong = 0;
    for (std::size_t i = 0; i < problem.targets.size(); ++i) {
        const double m = ensemble.margin(problem.features.row(i));
        const int prediction = m >= 0.0 ? 1 : -1;
        if (prediction != problem.targets[i]) ++wrong;
    }
    return static_cast<double>(wrong) / static_cast<double>(problem.targets.size());
}

} // namespace

TEST_CASE("a stump answers its polarity at or below the threshold") {
    const Stump stump{0, 1.5, +1, 1.0};
    const std::vector<double> low{1.0};
    const std::vector<double> edge{1.5};
    const std::vector<double> high{2.0};
    CHECK(stump.predict(low) == 1);
    CHECK(stump.predict(edge) == 1);
    CHECK(stump.predict(high) == -1);

    const Stump constant{0, -kInf, -1, 1.0};
    CHECK(constant.predict(low) == 1); // always -polarity: nothing is <= -inf
    CHECK(constant.predict(high) == 1);
}

TEST_CASE("binary problems keep only the classes the column codes") {
    Dataset ds;
    ds.class_count = 3;
    ds.feature_count = 1;
    ds.features = Matrix(6, 1);
    for (int i = 0; i < 6; ++i) ds.features(static_cast<std::size_t>(i), 0) = i;
    ds.labels = {1, 2, 3, 1, 2, 3};
    ds.label_values = {1, 2, 3};

    ColumnSpec column;
    column.entries = {1, -1, 0};
    const BinaryProblem problem = induce_binary_problem(ds, column);
    CHECK(problem.targets == std::vector<int>{1, -1, 1, -1});
    CHECK(problem.features.rows() == 4);
    CHECK(problem.features(2, 0) == 3.0); // row 3 of the original survives as kept row 2
    CHECK(problem.source.entries == column.entries);

    ColumnSpec wrong_size;
    wrong_size.entries = {1, -1};
    CHECK_THROWS_AS(induce_binary_problem(ds, wrong_size), ConfigError);

    // a column whose -1 classes are absent from the data is untrainable
    Dataset two_classes = ds;
    two_classes.labels = {1, 1, 1, 1, 3, 3};
    ColumnSpec absent;
    absent.entries = {1, -1, 0};
    CHECK_THROWS_WITH_AS(induce_binary_problem(two_classes, absent),
                         doctest::Contains("one-sided"), DataError);
}

TEST_CASE("boosting a separable problem stops after one perfect stump") {
    const BinaryProblem problem =
        make_problem({{0.0}, {1.0}, {2.0}, {3.0}}, {1, 1, -1, -1});
    const StumpEnsemble ensemble = train_adaboost(problem, 40);
    REQUIRE(ensemble.stumps.size() == 1);
    const Stump& stump = ensemble.stumps.front();
    CHECK(stump.feature == 0);
    CHECK(stump.threshold == 1.5);
    CHECK(stump.polarity == 1);
    // zero-error rounds use the alpha of a 1e-10 error
    CHECK(stump.alpha == doctest::Approx(0.5 * std::log((1.0 - 1e-10) / 1e-10)).epsilon(1e-12));
    for (std::size_t i = 0; i < problem.targets.size(); ++i) {
        CHECK(ensemble.margin(problem.features.row(i)) ==
              doctest::Approx(problem.targets[i]).epsilon(1e-12));
    }
}

TEST_CASE("symmetric xor admits no stump better than chance") {
    const BinaryProblem problem =
        make_problem({{0.0, 0.0}, {1.0, 1.0}, {0.0, 1.0}, {1.0, 0.0}}, {1, 1, -1, -1});
    const StumpEnsemble ensemble = train_adaboost(problem, 40);
    CHECK(ensemble.stumps.empty());
    const std::vector<double> anywhere{0.3, 0.7};
    CHECK(ensemble.margin(anywhere) == 0.0);
}

TEST_CASE("first boosted stump matches an exhaustive search") {
    Rng rng(515);
    int nontrivial = 0;
    for (int trial = 0; trial < 60; ++trial) {
        const std::size_t n = 16; // power of two keeps uniform weights dyadic-exact
        const std::size_t d = 1 + rng.next_below(3);
        std::vector<std::vector<double>> rows(n, std::vector<double>(d));
        std::vector<int> targets(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t f = 0; f < d; ++f) {
                rows[i][f] = static_cast<double>(rng.next_below(5));
            }
            targets[i] = rng.next_below(2) == 0 ? 1 : -1;
        }
        targets[0] = 1; // both signs always present
        targets[1] = -1;

        const BinaryProblem problem = make_problem(rows, targets);
        const OracleStump oracle = best_stump_by_brute_force(problem);
        const StumpEnsemble ensemble = train_adaboost(problem, 1);

        if (oracle.error >= 0.5) {
            CHECK(ensemble.stumps.empty());
            continue;
        }
        ++nontrivial;
        REQUIRE(ensemble.stumps.size() == 1);
        const Stump& stump = ensemble.stumps.front();
        CHECK(stump.feature == oracle.feature);
        CHECK(stump.threshold == oracle.threshold);
        CHECK(stump.polarity == oracle.polarity);
        const double expected_error = oracle.error <= 1e-12 ? 1e-10 : oracle.error;
        CHECK(stump.alpha ==
              doctest::Approx(0.5 * std::log((1.0 - expected_error) / expected_error))
                  .epsilon(1e-9));
    }
    CHECK(nontrivial >= 40); // the comparison must actually exercise real picks
}

TEST_CASE("boosting drives the training error of an interleaved line down") {
    std::vector<std::vector<double>> rows;
    std::vector<int> targets;
    for (int i = 1; i <= 8; ++i) {
        rows.push_back({static_cast<double>(i)});
        targets.push_back(i % 2 == 1 ? 1 : -1);
    }
    const BinaryProblem problem = make_problem(rows, targets);

    const StumpEnsemble one = train_adaboost(problem, 1);
    const StumpEnsemble many = train_adaboost(problem, 40);
    CHECK(many.stumps.size() > one.stumps.size());
    CHECK(training_error(many, problem) < training_error(one, problem));
    CHECK(training_error(many, problem) == 0.0);
}

TEST_CASE("every kept round has positive alpha and margins stay normalized") {
    Rng rng(90210);
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 8 + rng.next_below(24);
        std::vector<std::vector<double>> rows(n, std::vector<double>(2));
        std::vector<int> targets(n);
        for (std::size_t i = 0; i < n; ++i) {
            rows[i][0] = rng.next_unit();
            rows[i][1] = rng.next_unit();
            targets[i] = rng.next_below(2) == 0 ? 1 : -1;
        }
        targets[0] = 1;
        targets[1] = -1;
        const BinaryProblem problem = make_problem(rows, targets);
        const StumpEnsemble ensemble = train_adaboost(problem, 12);
        for (const Stump& stump : ensemble.stumps) CHECK(stump.alpha > 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            const double m = ensemble.margin(problem.features.row(i));
            CHECK(m >= -1.0);
            CHECK(m <= 1.0);
        }
    }
    CHECK_THROWS_AS(train_adaboost(make_problem({{0.0}, {1.0}}, {1, -1}), 0), ConfigError);
}

TEST_CASE("single-cluster k-means recovers the mean") {
    Matrix points(4, 2);
    const double values[4][2] = {{0.0, 0.0}, {2.0, 0.0}, {0.0, 2.0}, {2.0, 2.0}};
    for (std::size_t i = 0; i < 4; ++i) {
        points(i, 0) = values[i][0];
        points(i, 1) = values[i][1];
    }
    const KMeansResult result = kmeans(points, 1, 3);
    REQUIRE(result.cluster_count() == 1);
    CHECK(result.centroids(0, 0) == 1.0);
    CHECK(result.centroids(0, 1) == 1.0);
    CHECK(result.assignments == std::vector<int>{0, 0, 0, 0});
    CHECK(result.objective_history.back() == doctest::Approx(8.0)); // 4 corners at distance^2 2
}

TEST_CASE("as many clusters as distinct points leaves zero objective") {
    Matrix points(5, 1);
    for (std::size_t i = 0; i < 5; ++i) points(i, 0) = static_cast<double>(i) * 3.0;
    const KMeansResult result = kmeans(points, 5, 11);
    CHECK(result.cluster_count() == 5);
    CHECK(result.objective_history.back() == 0.0);
    std::set<int> used(result.assignments.begin(), result.assignments.end());
    CHECK(used.size() == 5);
}

TEST_CASE("coincident points collapse the requested cluster count") {
    Matrix points(6, 2);
    for (std::size_t i = 0; i < 6; ++i) {
        points(i, 0) = 4.0;
        points(i, 1) = -1.0;
    }
    const KMeansResult result = kmeans(points, 3, 5);
    CHECK(result.cluster_count() == 1);
    CHECK(result.objective_history.back() == 0.0);
}

TEST_CASE("the clustering objective never increases") {
    Rng rng(77);
    Matrix points(40, 3);
    for (std::size_t i = 0; i < 40; ++i) {
        for (std::size_t f = 0; f < 3; ++f) points(i, f) = rng.next_unit() * 10.0;
    }
    for (const int k : {2, 3, 5}) {
        const KMeansResult result = kmeans(points, k, 123);
        REQUIRE(!result.objective_history.empty());
        for (std::size_t s = 1; s < result.objective_history.size(); ++s) {
            CHECK(result.objective_history[s] <= result.objective_history[s - 1] + 1e-9);
        }
        const KMeansResult again = kmeans(points, k, 123);
        CHECK(result.assignments == again.assignments);
        CHECK(result.centroids.storage() == again.centroids.storage());
    }
    CHECK_THROWS_AS(kmeans(points, 0, 1), ConfigError);
    CHECK_THROWS_AS(kmeans(Matrix(), 2, 1), ConfigError);
}

TEST_CASE("layered training separates pure and mixed regions") {
    // One tight pure-positive blob at the origin; one mixed blob around
    // (10, 10) that a local stump splits at x = 10.
    std::vector<std::vector<double>> rows;
    std::vector<int> targets;
    for (int i = 0; i < 6; ++i) {
        rows.push_back({0.0, 0.0});
        targets.push_back(1);
    }
    for (int i = 0; i < 3; ++i) {
        rows.push_back({9.0, 10.0});
        targets.push_back(-1);
        rows.push_back({11.0, 10.0});
        targets.push_back(1);
    }
    const BinaryProblem problem = make_problem(rows, targets);

    for (const std::uint64_t seed : {1ull, 2ull, 3ull, 99ull}) {
        const ClusteringDichotomizer d = train_layered_dichotomizer(problem, 2, 10, seed);
        REQUIRE(d.regions.size() == 2);

        int pure = 0;
        int mixed = 0;
        for (const Region& region : d.regions) {
            if (region.ensemble) {
                ++mixed;
                CHECK(region.fixed_sign == 0);
            } else {
                ++pure;
                CHECK(region.fixed_sign == 1);
            }
        }
        CHECK(pure == 1);
        CHECK(mixed == 1);

        const std::vector<double> near_origin{0.5, 0.1};
        const std::vector<double> mixed_low{9.0, 9.5};
        const std::vector<double> mixed_high{12.0, 10.0};
        CHECK(predict_layered(d, near_origin) == 1.0);
        CHECK(predict_layered(d, mixed_low) == doctest::Approx(-1.0));
        CHECK(predict_layered(d, mixed_high) == doctest::Approx(1.0));
    }

    // with three regions every group is pure and keeps a fixed sign
    const ClusteringDichotomizer three = train_layered_dichotomizer(problem, 3, 10, 7);
    REQUIRE(three.regions.size() == 3);
    for (const Region& region : three.regions) {
        CHECK_FALSE(region.ensemble.has_value());
        CHECK(region.fixed_sign != 0);
    }

    CHECK_THROWS_AS(train_layered_dichotomizer(problem, 0, 10, 1), ConfigError);
}

TEST_CASE("the dichotomizer variant routes to the right margin") {
    const BinaryProblem problem =
        make_problem({{0.0}, {1.0}, {2.0}, {3.0}}, {1, 1, -1, -1});
    const Dichotomizer plain = train_adaboost(problem, 5);
    const Dichotomizer layered = train_layered_dichotomizer(problem, 2, 5, 21);
    const std::vector<double> x{0.5};
    CHECK(dichotomizer_margin(plain, x) == doctest::Approx(1.0));
    CHECK(dichotomizer_margin(layered, x) == doctest::Approx(1.0));
}
