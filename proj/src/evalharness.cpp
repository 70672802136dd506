#include "wolc/evalharness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "wolc/error.hpp"
#include "wolc/owopt.hpp"
#include "wolc/rng.hpp"

namespace wolc {

bool RunReport::operator==(const RunReport& other) const {
    // wall_seconds is execution metadata, not experiment content.
    return dataset_name == other.dataset_name && method == other.method &&
           repeats == other.repeats && folds == other.folds && seed == other.seed &&
           global_normalization == other.global_normalization &&
           cell_accuracy == other.cell_accuracy && cell_code_length == other.cell_code_length &&
           mean_accuracy == other.mean_accuracy && stddev == other.stddev &&
           mean_code_length == other.mean_code_length;
}

namespace {

std::string full_precision(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

std::string two_decimals(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.2f", value);
    return buffer;
}

MethodFn make_builtin(const std::string& coding, DecoderKind decoder) {
    return [coding, decoder](const Dataset& train, const RunSpec& spec,
                             std::uint64_t fold_seed) -> TrainedPredictor {
        WolcConfig config = spec.learner;
        config.seed = fold_seed;

        EnsembleModel model;
        if (coding == "wolc") {
            model = train_wolc(train, config);
        } else {
            CodingMatrix m;
            if (coding == "1vsall") {
                m = make_one_vs_all(train.class_count);
            } else if (coding == "1vs1") {
                m = make_one_vs_one(train.class_count);
            } else {
                m = make_random_ternary(train.class_count, spec.random_code_length,
                                        spec.random_zero_prob, fold_seed);
            }
            model = initialize(train, config, &m);
            if (decoder == DecoderKind::ow) {
                // A fixed coding still gets optimized weights; only the
                // column set stays put.
                std::vector<TestCodeword> codewords(train.size());
                for (std::size_t i = 0; i < train.size(); ++i) {
                    codewords[i] = evaluate_codeword(model, train.features.row(i));
                }
                const LossTensor tensor = build_loss_tensor(codewords, model.coding, config.loss);
                CpaOptions options;
                options.epsilon = config.epsilon_cpa;
                model.weights = solve_ow_cpa(tensor, train.labels, model.coding, options).weights;
            }
        }

        auto shared = std::make_shared<EnsembleModel>(std::move(model));
        TrainedPredictor predictor;
        predictor.code_length = static_cast<double>(shared->coding.length());
        predictor.predict_batch = [shared, decoder](const Matrix& features) {
            return predict_all(*shared, features, decoder);
        };
        return predictor;
    };
}

std::map<std::string, MethodFn>& registry() {
    static std::map<std::string, MethodFn> methods = [] {
        std::map<std::string, MethodFn> m;
        for (const char* coding : {"1vsall", "1vs1", "random", "wolc"}) {
            for (const char* decoder : {"hd", "lb", "lw", "ow"}) {
                m[std::string(coding) + "-" + decoder] =
                    make_builtin(coding, decoder_from_name(decoder));
            }
        }
        return m;
    }();
    return methods;
}

std::string path_stem(const std::string& path) {
    const std::size_t slash = path.find_last_of("/\\");
    std::string name = slash == std::string::npos ? path : path.substr(slash + 1);
    const std::size_t dot = name.find_last_of('.');
    if (dot != std::string::npos && dot > 0) name = name.substr(0, dot);
    return name;
}

} // namespace

void register_method(const std::string& name, MethodFn method) {
    if (name.empty()) throw ConfigError("method name must not be empty");
    registry()[name] = std::move(method);
}

std::vector<std::string> registered_methods() {
    std::vector<std::string> names;
    for (const auto& [name, fn] : registry()) names.push_back(name);
    return names;
}

RunReport run_benchmark(const RunSpec& spec, int jobs) {
    if (spec.repeats < 1) {
        throw ConfigError("repeats must be positive, got " + std::to_string(spec.repeats));
    }
    if (spec.folds < 2) {
        throw ConfigError("folds must be at least 2, got " + std::to_string(spec.folds));
    }
    if (jobs < 1) throw ConfigError("jobs must be positive, got " + std::to_string(jobs));

    const auto found = registry().find(spec.method);
    if (found == registry().end()) {
        std::string known;
        for (const std::string& name : registered_methods()) {
            if (!known.empty()) known += ", ";
            known += name;
        }
        throw ConfigError("unknown method '" + spec.method + "' (known: " + known + ")");
    }
    const MethodFn method = found->second;

    const auto started = std::chrono::steady_clock::now();
    Dataset ds = load_dataset(spec.dataset_path, spec.load);
    if (spec.global_normalization) ds = normalize_unit_range(ds);

    std::vector<FoldPlan> plans;
    plans.reserve(static_cast<std::size_t>(spec.repeats));
    for (int r = 0; r < spec.repeats; ++r) {
        plans.push_back(
            stratified_folds(ds, spec.folds, spec.seed ^ static_cast<std::uint64_t>(r)));
    }

    RunReport report;
    report.dataset_name = spec.dataset_name.empty() ? path_stem(spec.dataset_path) : spec.dataset_name;
    report.method = spec.method;
    report.repeats = spec.repeats;
    report.folds = spec.folds;
    report.seed = spec.seed;
    report.global_normalization = spec.global_normalization;
    report.cell_accuracy = Matrix(static_cast<std::size_t>(spec.repeats),
                                  static_cast<std::size_t>(spec.folds));
    report.cell_code_length = Matrix(static_cast<std::size_t>(spec.repeats),
                                     static_cast<std::size_t>(spec.folds));

    const auto run_cell = [&](int r, int f) {
        const std::vector<std::size_t> train_rows = plans[static_cast<std::size_t>(r)].train_indices(f);
        const std::vector<std::size_t> test_rows = plans[static_cast<std::size_t>(r)].test_indices(f);
        Dataset train = subset(ds, train_rows);
        Dataset test = subset(ds, test_rows);
        if (!spec.global_normalization) {
            const UnitRangeStats stats = UnitRangeStats::fit(train);
            train = stats.apply(train);
            test = stats.apply(test);
        }
        const TrainedPredictor predictor =
            method(train, spec, derive_seed(spec.seed, static_cast<std::uint64_t>(r),
                                            static_cast<std::uint64_t>(f)));
        const std::vector<int> predicted = predictor.predict_batch(test.features);
        std::size_t correct = 0;
        for (std::size_t i = 0; i < predicted.size(); ++i) {
            correct += predicted[i] == test.labels[i];
        }
        report.cell_accuracy(static_cast<std::size_t>(r), static_cast<std::size_t>(f)) =
            test.labels.empty() ? 0.0
                                : static_cast<double>(correct) /
                                      static_cast<double>(test.labels.size());
        report.cell_code_length(static_cast<std::size_t>(r), static_cast<std::size_t>(f)) =
            predictor.code_length;
    };

    const int cells = spec.repeats * spec.folds;
    if (jobs == 1) {
        for (int cell = 0; cell < cells; ++cell) run_cell(cell / spec.folds, cell % spec.folds);
    } else {
        // Cells are independent and each derives its own seed, so any
        // schedule produces the sequential result.
        std::atomic<int> next{0};
        std::exception_ptr failure;
        std::mutex failure_lock;
        const int workers = std::min(jobs, cells);
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) {
            pool.emplace_back([&] {
                for (;;) {
                    const int cell = next.fetch_add(1);
                    if (cell >= cells) return;
                    try {
                        run_cell(cell / spec.folds, cell % spec.folds);
                    } catch (...) {
                        const std::lock_guard<std::mutex> guard(failure_lock);
                        if (!failure) failure = std::current_exception();
                        return;
                    }
                }
            });
        }
        for (std::thread& worker : pool) worker.join();
        if (failure) std::rethrow_exception(failure);
    }

    std::vector<double> repeat_means(static_cast<std::size_t>(spec.repeats), 0.0);
    double length_total = 0.0;
    for (int r = 0; r < spec.repeats; ++r) {
        double total = 0.0;
        for (int f = 0; f < spec.folds; ++f) {
            total += report.cell_accuracy(static_cast<std::size_t>(r), static_cast<std::size_t>(f));
            length_total +=
                report.cell_code_length(static_cast<std::size_t>(r), static_cast<std::size_t>(f));
        }
        repeat_means[static_cast<std::size_t>(r)] = total / spec.folds;
    }
    report.mean_accuracy =
        std::accumulate(repeat_means.begin(), repeat_means.end(), 0.0) / spec.repeats;
    if (spec.repeats > 1) {
        double squares = 0.0;
        for (const double m : repeat_means) {
            squares += (m - report.mean_accuracy) * (m - report.mean_accuracy);
        }
        report.stddev = std::sqrt(squares / (spec.repeats - 1));
    }
    report.mean_code_length = length_total / cells;
    report.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return report;
}

RankTable compare_grid(const std::vector<RunReport>& reports) {
    if (reports.empty()) throw ConfigError("no reports to compare");

    RankTable table;
    for (const RunReport& report : reports) {
        if (std::find(table.methods.begin(), table.methods.end(), report.method) ==
            table.methods.end()) {
            table.methods.push_back(report.method);
        }
        if (std::find(table.datasets.begin(), table.datasets.end(), report.dataset_name) ==
            table.datasets.end()) {
            table.datasets.push_back(report.dataset_name);
        }
    }

    const std::size_t methods = table.methods.size();
    const std::size_t datasets = table.datasets.size();
    table.mean_accuracy = Matrix(methods, datasets);
    table.ranks = Matrix(methods, datasets);
    Matrix seen(methods, datasets);

    for (const RunReport& report : reports) {
        const auto m = static_cast<std::size_t>(
            std::find(table.methods.begin(), table.methods.end(), report.method) -
            table.methods.begin());
        const auto d = static_cast<std::size_t>(
            std::find(table.datasets.begin(), table.datasets.end(), report.dataset_name) -
            table.datasets.begin());
        if (seen(m, d) != 0.0) {
            throw ConfigError("duplicate report for method '" + report.method + "' on dataset '" +
                              report.dataset_name + "'");
        }
        seen(m, d) = 1.0;
        table.mean_accuracy(m, d) = report.mean_accuracy;
    }
    for (std::size_t m = 0; m < methods; ++m) {
        for (std::size_t d = 0; d < datasets; ++d) {
            if (seen(m, d) == 0.0) {
                throw ConfigError("missing report for method '" + table.methods[m] +
                                  "' on dataset '" + table.datasets[d] + "'");
            }
        }
    }

    // Rank 1 is the highest accuracy; a tie group shares the average of the
    // positions it covers.
    for (std::size_t d = 0; d < datasets; ++d) {
        std::vector<std::size_t> order(methods);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            return table.mean_accuracy(a, d) > table.mean_accuracy(b, d);
        });
        std::size_t i = 0;
        while (i < methods) {
            std::size_t j = i;
            while (j + 1 < methods &&
                   table.mean_accuracy(order[j + 1], d) == table.mean_accuracy(order[i], d)) {
                ++j;
            }
            const double shared = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
            for (std::size_t k = i; k <= j; ++k) table.ranks(order[k], d) = shared;
            i = j + 1;
        }
    }

    table.average_rank.assign(methods, 0.0);
    for (std::size_t m = 0; m < methods; ++m) {
        double total = 0.0;
        for (std::size_t d = 0; d < datasets; ++d) total += table.ranks(m, d);
        table.average_rank[m] = total / static_cast<double>(datasets);
    }
    return table;
}

void emit_report(std::ostream& out, const RunReport& report, ReportFormat format) {
    if (report.cell_accuracy.rows() != static_cast<std::size_t>(report.repeats) ||
        report.cell_accuracy.cols() != static_cast<std::size_t>(report.folds) ||
        report.repeats < 1 || report.folds < 1) {
        throw ConfigError("report for '" + report.method + "' on '" + report.dataset_name +
                          "' has no cell grid to emit");
    }
    if (format == ReportFormat::text) {
        out << "dataset: " << report.dataset_name << '\n';
        out << "method: " << report.method << '\n';
        out << "protocol: " << report.repeats << " repeats of " << report.folds
            << "-fold cross-validation, seed " << report.seed << ", "
            << (report.global_normalization ? "global" : "fold") << " normalization\n";
        out << "accuracy: " << two_decimals(report.mean_accuracy * 100.0) << " ("
            << two_decimals(report.stddev * 100.0) << ")\n";
        out << "code length: " << two_decimals(report.mean_code_length) << '\n';
        return;
    }
    out << "report=run\n";
    out << "dataset=" << report.dataset_name << '\n';
    out << "method=" << report.method << '\n';
    out << "repeats=" << report.repeats << '\n';
    out << "folds=" << report.folds << '\n';
    out << "seed=" << report.seed << '\n';
    out << "normalization=" << (report.global_normalization ? "global" : "fold") << '\n';
    out << "mean=" << full_precision(report.mean_accuracy) << '\n';
    out << "stddev=" << full_precision(report.stddev) << '\n';
    out << "code-length=" << full_precision(report.mean_code_length) << '\n';
    for (int r = 0; r < report.repeats; ++r) {
        for (int f = 0; f < report.folds; ++f) {
            out << "cell." << r << '.' << f << '='
                << full_precision(
                       report.cell_accuracy(static_cast<std::size_t>(r), static_cast<std::size_t>(f)))
                << ','
                << full_precision(report.cell_code_length(static_cast<std::size_t>(r),
                                                          static_cast<std::size_t>(f)))
                << '\n';
        }
    }
    out << "end=run\n";
}

RunReport parse_report(std::istream& in, const std::string& origin) {
    std::map<std::string, std::string> keys;
    std::vector<std::tuple<int, int, double, double>> cells;
    std::string line;
    std::size_t line_no = 0;
    bool started = false;
    bool finished = false;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const std::size_t equals = line.find('=');
        if (equals == std::string::npos) {
            throw DataError(origin + ":" + std::to_string(line_no) + ": expected key=value, got '" +
                            line + "'");
        }
        const std::string key = line.substr(0, equals);
        const std::string value = line.substr(equals + 1);
        if (!started) {
            if (key != "report" || value != "run") {
                throw DataError(origin + ":" + std::to_string(line_no) +
                                ": expected 'report=run' header");
            }
            started = true;
            continue;
        }
        if (key == "end") {
            finished = true;
            break;
        }
        if (key.rfind("cell.", 0) == 0) {
            int r = 0;
            int f = 0;
            double accuracy = 0.0;
            double length = 0.0;
            if (std::sscanf(line.c_str(), "cell.%d.%d=%lf,%lf", &r, &f, &accuracy, &length) != 4) {
                throw DataError(origin + ":" + std::to_string(line_no) + ": malformed cell record");
            }
            cells.emplace_back(r, f, accuracy, length);
            continue;
        }
        if (keys.count(key)) {
            throw DataError(origin + ":" + std::to_string(line_no) + ": duplicate key '" + key + "'");
        }
        keys[key] = value;
    }
    if (!started) throw DataError(origin + ": empty report");
    if (!finished) throw DataError(origin + ": truncated report (no end marker)");

    const auto require = [&](const char* key) -> std::string {
        const auto found = keys.find(key);
        if (found == keys.end()) {
            throw DataError(origin + ": missing key '" + std::string(key) + "'");
        }
        return found->second;
    };

    RunReport report;
    report.dataset_name = require("dataset");
    report.method = require("method");
    report.repeats = std::stoi(require("repeats"));
    report.folds = std::stoi(require("folds"));
    report.seed = std::stoull(require("seed"));
    const std::string normalization = require("normalization");
    if (normalization != "fold" && normalization != "global") {
        throw DataError(origin + ": normalization must be 'fold' or 'global'");
    }
    report.global_normalization = normalization == "global";
    report.mean_accuracy = std::strtod(require("mean").c_str(), nullptr);
    report.stddev = std::strtod(require("stddev").c_str(), nullptr);
    report.mean_code_length = std::strtod(require("code-length").c_str(), nullptr);

    if (report.repeats < 1 || report.folds < 1) {
        throw DataError(origin + ": invalid protocol size");
    }
    report.cell_accuracy =
        Matrix(static_cast<std::size_t>(report.repeats), static_cast<std::size_t>(report.folds));
    report.cell_code_length =
        Matrix(static_cast<std::size_t>(report.repeats), static_cast<std::size_t>(report.folds));
    if (cells.size() != static_cast<std::size_t>(report.repeats * report.folds)) {
        throw DataError(origin + ": expected " + std::to_string(report.repeats * report.folds) +
                        " cells, got " + std::to_string(cells.size()));
    }
    for (const auto& [r, f, accuracy, length] : cells) {
        if (r < 0 || r >= report.repeats || f < 0 || f >= report.folds) {
            throw DataError(origin + ": cell (" + std::to_string(r) + ", " + std::to_string(f) +
                            ") outside the protocol grid");
        }
        report.cell_accuracy(static_cast<std::size_t>(r), static_cast<std::size_t>(f)) = accuracy;
        report.cell_code_length(static_cast<std::size_t>(r), static_cast<std::size_t>(f)) = length;
    }
    return report;
}

void emit_rank_table(std::ostream& out, const RankTable& table) {
    std::size_t width = 8;
    for (const std::string& method : table.methods) width = std::max(width, method.size() + 2);

    out << std::string(width, ' ');
    for (const std::string& dataset : table.datasets) out << ' ' << dataset;
    out << " | avg-rank\n";
    for (std::size_t m = 0; m < table.methods.size(); ++m) {
        out << table.methods[m] << std::string(width - table.methods[m].size(), ' ');
        for (std::size_t d = 0; d < table.datasets.size(); ++d) {
            out << ' ' << two_decimals(table.mean_accuracy(m, d) * 100.0) << '('
                << two_decimals(table.ranks(m, d)) << ')';
        }
        out << " | " << two_decimals(table.average_rank[m]) << '\n';
    }
}

} // namespace wolc
