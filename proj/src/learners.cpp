#include "wolc/learners.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "wolc/error.hpp"
#include "wolc/rng.hpp"

namespace wolc {

BinaryProblem induce_binary_problem(const Dataset& ds, const ColumnSpec& column) {
    if (column.classes() != ds.class_count) {
        throw ConfigError("coding column has " + std::to_string(column.classes()) +
                          " entries, dataset has " + std::to_string(ds.class_count) + " classes");
    }
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        if (column.entries[static_cast<std::size_t>(ds.labels[i]) - 1] != 0) kept.push_back(i);
    }

    BinaryProblem problem;
    problem.source = column;
    problem.features = Matrix(kept.size(), ds.features.cols());
    problem.targets.reserve(kept.size());
    bool has_pos = false;
    bool has_neg = false;
    for (std::size_t i = 0; i < kept.size(); ++i) {
        const auto src = ds.features.row(kept[i]);
        std::copy(src.begin(), src.end(), problem.features.row(i).begin());
        const int target = column.entries[static_cast<std::size_t>(ds.labels[kept[i]]) - 1];
        problem.targets.push_back(target);
        has_pos = has_pos || target > 0;
        has_neg = has_neg || target < 0;
    }
    if (!has_pos || !has_neg) {
        throw DataError("binary problem is one-sided: " + std::to_string(kept.size()) +
                        " examples, all " + (has_pos ? std::string("+1") : std::string("-1")) +
                        " (the dataset lacks examples of the classes coded " +
                        (has_pos ? "-1" : "+1") + ")");
    }
    return problem;
}

double StumpEnsemble::margin(std::span<const double> x) const {
    double vote = 0.0;
    double total = 0.0;
    for (const Stump& stump : stumps) {
        vote += stump.alpha * stump.predict(x);
        total += std::abs(stump.alpha);
    }
    return total == 0.0 ? 0.0 : vote / total;
}

namespace {

// Error of the zero-weighted-error round, and the matching capped alpha.
constexpr double kZeroErrorFloor = 1e-10;

struct StumpCandidate {
    int feature = 0;
    double threshold = -std::numeric_limits<double>::infinity();
    int polarity = 1;
    double error = std::numeric_limits<double>::infinity();
};

// Considers (threshold, both polarities) for one feature position and keeps
// the strictly better candidate; the caller's visit order implements the
// tie-breaking rule.
void consider(StumpCandidate& best, int feature, double threshold, double error_pos,
              double error_neg) {
    if (error_pos < best.error) best = {feature, threshold, +1, error_pos};
    if (error_neg < best.error) best = {feature, threshold, -1, error_neg};
}

} // namespace

StumpEnsemble train_adaboost(const BinaryProblem& problem, int rounds) {
    if (rounds < 1) {
        throw ConfigError("boosting needs at least one round, got " + std::to_string(rounds));
    }
    const std::size_t n = problem.targets.size();
    const std::size_t d = problem.features.cols();

    // Sort example indices per feature once; the weighted scan per round
    // walks these orders.
    std::vector<std::vector<std::size_t>> order(d);
    for (std::size_t f = 0; f < d; ++f) {
        order[f].resize(n);
        std::iota(order[f].begin(), order[f].end(), std::size_t{0});
        std::stable_sort(order[f].begin(), order[f].end(), [&](std::size_t a, std::size_t b) {
            return problem.features(a, f) < problem.features(b, f);
        });
    }

    std::vector<double> weights(n, 1.0 / static_cast<double>(n));
    StumpEnsemble ensemble;

    for (int t = 0; t < rounds; ++t) {
        double weight_pos = 0.0;
        double weight_neg = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            (problem.targets[i] > 0 ? weight_pos : weight_neg) += weights[i];
        }

        // The constant split (threshold -inf) predicts -polarity everywhere.
        StumpCandidate best;
        consider(best, 0, -std::numeric_limits<double>::infinity(), weight_pos, weight_neg);

        for (std::size_t f = 0; f < d; ++f) {
            double below_pos = 0.0;
            double below_neg = 0.0;
            for (std::size_t k = 0; k + 1 < n; ++k) {
                const std::size_t i = order[f][k];
                (problem.targets[i] > 0 ? below_pos : below_neg) += weights[i];
                const double here = problem.features(i, f);
                const double next = problem.features(order[f][k + 1], f);
                if (here == next) continue;
                const double threshold = here + (next - here) / 2.0;
                // polarity +1 misclassifies negatives below and positives above
                const double error_pos = std::max(0.0, below_neg + (weight_pos - below_pos));
                const double error_neg = std::max(0.0, below_pos + (weight_neg - below_neg));
                consider(best, static_cast<int>(f), threshold, error_pos, error_neg);
            }
        }

        if (best.error >= 0.5) break; // nothing better than chance: stop without this stump

        // Prefix sums can leave dust where the split is actually perfect.
        const bool perfect = best.error <= 1e-12;
        const double error = perfect ? kZeroErrorFloor : best.error;
        const double alpha = 0.5 * std::log((1.0 - error) / error);
        ensemble.stumps.push_back({best.feature, best.threshold, best.polarity, alpha});
        if (perfect) break;

        Stump& stump = ensemble.stumps.back();
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            const int h = stump.predict(problem.features.row(i));
            weights[i] *= std::exp(-alpha * problem.targets[i] * h);
            total += weights[i];
        }
        for (double& w : weights) w /= total;
    }
    return ensemble;
}

double predict_margin(const StumpEnsemble& ensemble, std::span<const double> x) {
    return ensemble.margin(x);
}

KMeansResult kmeans(const Matrix& points, int k, std::uint64_t seed) {
    const std::size_t n = points.rows();
    const std::size_t d = points.cols();
    if (n == 0) throw ConfigError("clustering needs at least one point");
    if (k < 1) throw ConfigError("cluster count must be positive, got " + std::to_string(k));

    // Seed centroids with the first k pairwise-distinct points of a random
    // permutation; fewer distinct points than k lowers the cluster count.
    Rng rng(seed);
    const std::vector<std::size_t> perm = rng.permutation(n);
    std::vector<std::size_t> picked;
    for (const std::size_t i : perm) {
        bool duplicate = false;
        for (const std::size_t j : picked) {
            if (squared_distance(points.row(i), points.row(j)) == 0.0) {
                duplicate = true;
                break;
            }
        }
        if (!duplicate) {
            picked.push_back(i);
            if (picked.size() == static_cast<std::size_t>(k)) break;
        }
    }
    std::sort(picked.begin(), picked.end()); // stable region numbering

    KMeansResult result;
    result.centroids = Matrix(picked.size(), d);
    for (std::size_t c = 0; c < picked.size(); ++c) {
        const auto src = points.row(picked[c]);
        std::copy(src.begin(), src.end(), result.centroids.row(c).begin());
    }
    result.assignments.assign(n, 0);

    constexpr int kMaxSweeps = 300;
    for (int sweep = 0; sweep < kMaxSweeps; ++sweep) {
        // Assignment step; ties go to the lowest centroid index.
        bool changed = sweep == 0;
        double objective = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            int nearest = 0;
            double nearest_d = squared_distance(points.row(i), result.centroids.row(0));
            for (std::size_t c = 1; c < result.centroids.rows(); ++c) {
                const double dist = squared_distance(points.row(i), result.centroids.row(c));
                if (dist < nearest_d) {
                    nearest_d = dist;
                    nearest = static_cast<int>(c);
                }
            }
            if (result.assignments[i] != nearest) {
                result.assignments[i] = nearest;
                changed = true;
            }
            objective += nearest_d;
        }
        result.objective_history.push_back(objective);
        if (!changed) break;

        // Update step.
        Matrix sums(result.centroids.rows(), d);
        std::vector<std::size_t> counts(result.centroids.rows(), 0);
        for (std::size_t i = 0; i < n; ++i) {
            const auto c = static_cast<std::size_t>(result.assignments[i]);
            ++counts[c];
            for (std::size_t f = 0; f < d; ++f) sums(c, f) += points(i, f);
        }
        std::vector<std::size_t> empty;
        for (std::size_t c = 0; c < counts.size(); ++c) {
            if (counts[c] == 0) {
                empty.push_back(c);
                continue;
            }
            for (std::size_t f = 0; f < d; ++f) {
                result.centroids(c, f) = sums(c, f) / static_cast<double>(counts[c]);
            }
        }

        // Re-seed emptied clusters with the point farthest from its current
        // centroid; when everything sits on a centroid already, drop them.
        std::vector<std::size_t> dropped;
        for (const std::size_t c : empty) {
            std::size_t farthest = 0;
            double farthest_d = -1.0;
            for (std::size_t i = 0; i < n; ++i) {
                const auto home = static_cast<std::size_t>(result.assignments[i]);
                const double dist = squared_distance(points.row(i), result.centroids.row(home));
                if (dist > farthest_d) {
                    farthest_d = dist;
                    farthest = i;
                }
            }
            if (farthest_d <= 0.0) {
                dropped.push_back(c);
                continue;
            }
            const auto src = points.row(farthest);
            std::copy(src.begin(), src.end(), result.centroids.row(c).begin());
            result.assignments[farthest] = static_cast<int>(c);
        }
        if (!dropped.empty()) {
            Matrix kept(result.centroids.rows() - dropped.size(), d);
            std::vector<int> remap(result.centroids.rows(), -1);
            std::size_t next = 0;
            for (std::size_t c = 0; c < result.centroids.rows(); ++c) {
                if (std::find(dropped.begin(), dropped.end(), c) != dropped.end()) continue;
                const auto src = result.centroids.row(c);
                std::copy(src.begin(), src.end(), kept.row(next).begin());
                remap[c] = static_cast<int>(next++);
            }
            result.centroids = kept;
            for (int& a : result.assignments) a = remap[static_cast<std::size_t>(a)];
        }
    }
    return result;
}

double ClusteringDichotomizer::margin(std::span<const double> x) const {
    std::size_t host = 0;
    double host_d = std::numeric_limits<double>::infinity();
    for (std::size_t r = 0; r < regions.size(); ++r) {
        const double dist = squared_distance(x, regions[r].centroid);
        if (dist < host_d) {
            host_d = dist;
            host = r;
        }
    }
    const Region& region = regions[host];
    return region.ensemble ? region.ensemble->margin(x) : static_cast<double>(region.fixed_sign);
}

ClusteringDichotomizer train_layered_dichotomizer(const BinaryProblem& problem, int regions,
                                                  int rounds, std::uint64_t seed) {
    if (regions < 1) {
        throw ConfigError("layered training needs at least one region, got " +
                          std::to_string(regions));
    }
    const KMeansResult clusters = kmeans(problem.features, regions, seed);

    ClusteringDichotomizer dichotomizer;
    for (int c = 0; c < clusters.cluster_count(); ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < problem.targets.size(); ++i) {
            if (clusters.assignments[i] == c) members.push_back(i);
        }

        Region region;
        const auto centroid = clusters.centroids.row(static_cast<std::size_t>(c));
        region.centroid.assign(centroid.begin(), centroid.end());

        bool has_pos = false;
        bool has_neg = false;
        for (const std::size_t i : members) {
            (problem.targets[i] > 0 ? has_pos : has_neg) = true;
        }
        if (has_pos && has_neg) {
            BinaryProblem local;
            local.source = problem.source;
            local.features = Matrix(members.size(), problem.features.cols());
            local.targets.reserve(members.size());
            for (std::size_t i = 0; i < members.size(); ++i) {
                const auto src = problem.features.row(members[i]);
                std::copy(src.begin(), src.end(), local.features.row(i).begin());
                local.targets.push_back(problem.targets[members[i]]);
            }
            region.ensemble = train_adaboost(local, rounds);
        } else {
            region.fixed_sign = has_pos ? 1 : -1;
        }
        dichotomizer.regions.push_back(std::move(region));
    }
    return dichotomizer;
}

double predict_layered(const ClusteringDichotomizer& dichotomizer, std::span<const double> x) {
    return dichotomizer.margin(x);
}

double dichotomizer_margin(const Dichotomizer& d, std::span<const double> x) {
    return std::visit([&](const auto& impl) { return impl.margin(x); }, d);
}

} // namespace wolc
