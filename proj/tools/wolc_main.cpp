#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "wolc/coding.hpp"
#include "wolc/dataset.hpp"
#include "wolc/error.hpp"
#include "wolc/evalharness.hpp"
#include "wolc/owopt.hpp"
#include "wolc/wolc.hpp"

namespace {

// Everything the tool writes goes through here so that a failed write is an
// error, never a silent truncation, and every output gets written atomically
// enough for scripting (write, flush, check).
void write_file(const std::string& path, const std::function<void(std::ostream&)>& fill) {
    std::ofstream out(path);
    if (!out) throw wolc::Error("cannot open output file: " + path);
    fill(out);
    out.flush();
    if (!out) throw wolc::Error("failed while writing: " + path);
}

// The resolved option values of one subcommand, written next to each output
// so a run can be reproduced from its artifacts alone.
void write_config_echo(CLI::App* sub, const std::string& output_path) {
    const std::string text = sub->config_to_str(true, false);
    write_file(output_path + ".config", [&](std::ostream& out) { out << text; });
}

wolc::LoadOptions load_options(const std::string& format, int label_column) {
    wolc::LoadOptions options;
    if (format == "delimited") {
        options.format = wolc::DataFormat::delimited;
    } else if (format == "sparse") {
        options.format = wolc::DataFormat::sparse_index;
    } else {
        throw wolc::ConfigError("unknown data format '" + format +
                                "' (expected delimited or sparse)");
    }
    options.label_column = label_column;
    return options;
}

wolc::LossKind loss_from_name(const std::string& name) {
    if (name == "linear") return wolc::LossKind::linear;
    if (name == "exponential") return wolc::LossKind::exponential;
    throw wolc::ConfigError("unknown loss '" + name + "' (expected linear or exponential)");
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> items;
    std::string current;
    for (const char ch : text) {
        if (ch == ',') {
            if (!current.empty()) items.push_back(current);
            current.clear();
        } else {
            current += ch;
        }
    }
    if (!current.empty()) items.push_back(current);
    return items;
}

struct LearnerFlags {
    int search_paths = 3;
    int patience = 3;
    double eta = 0.01;
    int max_iterations = 0;
    int cluster_regions = 2;
    int boost_rounds = 40;
    std::string loss = "linear";
    double epsilon_cpa = 1e-4;

    void attach(CLI::App* sub) {
        sub->add_option("--search-paths", search_paths,
                        "Class pairs targeted per training iteration")
            ->capture_default_str();
        sub->add_option("--patience", patience, "Non-improving iterations tolerated")
            ->capture_default_str();
        sub->add_option("--eta", eta, "Relative risk-drop threshold for an improvement")
            ->capture_default_str();
        sub->add_option("--max-iterations", max_iterations,
                        "Outer-loop cap (0 = three times the class count)")
            ->capture_default_str();
        sub->add_option("--cluster-regions", cluster_regions,
                        "Regions for layered dichotomizers")
            ->capture_default_str();
        sub->add_option("--boost-rounds", boost_rounds, "Stump-boosting rounds per dichotomizer")
            ->capture_default_str();
        sub->add_option("--loss", loss, "Column loss: linear or exponential")
            ->capture_default_str();
        sub->add_option("--epsilon-cpa", epsilon_cpa, "Cutting-plane convergence margin")
            ->capture_default_str();
    }

    wolc::WolcConfig to_config(std::uint64_t seed) const {
        wolc::WolcConfig config;
        config.search_paths = search_paths;
        config.patience = patience;
        config.eta = eta;
        config.max_iterations = max_iterations;
        config.cluster_regions = cluster_regions;
        config.boost_rounds = boost_rounds;
        config.loss = loss_from_name(loss);
        config.epsilon_cpa = epsilon_cpa;
        config.seed = seed;
        return config;
    }
};

int run_gen_code(const std::string& method, int classes, int length, double zero_prob,
                 std::uint64_t seed, const std::string& output, CLI::App* sub) {
    wolc::CodingMatrix m;
    if (method == "1vsall") {
        m = wolc::make_one_vs_all(classes);
    } else if (method == "1vs1") {
        m = wolc::make_one_vs_one(classes);
    } else if (method == "random") {
        m = wolc::make_random_ternary(classes, length, zero_prob, seed);
    } else {
        throw wolc::ConfigError("unknown coding method '" + method +
                                "' (expected 1vsall, 1vs1 or random)");
    }
    write_file(output, [&](std::ostream& out) { wolc::write_coding(out, m); });
    write_config_echo(sub, output);
    std::cout << "wrote " << m.class_count() << "x" << m.length() << " coding matrix to " << output
              << '\n';
    return 0;
}

int run_train(const std::string& data, const std::string& format, int label_column,
              const std::string& coding_path, const LearnerFlags& flags, std::uint64_t seed,
              const std::string& output, CLI::App* sub) {
    const wolc::Dataset ds = wolc::load_dataset(data, load_options(format, label_column));
    const wolc::WolcConfig config = flags.to_config(seed);

    wolc::EnsembleModel model;
    if (coding_path.empty()) {
        model = wolc::train_wolc(ds, config);
    } else {
        std::ifstream in(coding_path);
        if (!in) throw wolc::Error("cannot open coding matrix file: " + coding_path);
        const wolc::CodingMatrix initial = wolc::read_coding(in, coding_path);
        model = wolc::train_wolc_from(ds, config, initial);
    }

    write_file(output, [&](std::ostream& out) { wolc::save_model(out, model); });
    write_file(output + ".history",
               [&](std::ostream& out) { wolc::write_history(out, model.history); });
    write_config_echo(sub, output);
    std::cout << "trained on " << ds.size() << " examples (" << ds.class_count << " classes); "
              << "final code length " << model.coding.length() << ", training risk "
              << model.training_risk << "; model written to " << output << '\n';
    return 0;
}

int run_predict(const std::string& model_path, const std::string& data, const std::string& format,
                int label_column, const std::string& decoder_name, bool scores,
                const std::string& output, CLI::App* sub) {
    std::ifstream in(model_path);
    if (!in) throw wolc::Error("cannot open model file: " + model_path);
    const wolc::EnsembleModel model = wolc::load_model(in, model_path);
    const wolc::Dataset ds = wolc::load_dataset(data, load_options(format, label_column));
    if (ds.feature_count != model.feature_count) {
        throw wolc::DataError("dataset has " + std::to_string(ds.feature_count) +
                              " features, model expects " + std::to_string(model.feature_count));
    }
    const wolc::DecoderKind decoder = wolc::decoder_from_name(decoder_name);

    // Per-class scores under the decoder's rule (distances for hd, loss sums
    // otherwise), emitted after the label when requested.
    wolc::WeightMatrix weights;
    if (decoder == wolc::DecoderKind::lw_empirical) {
        weights = wolc::empirical_weights(model.coding, model.accuracy);
    } else if (decoder == wolc::DecoderKind::ow) {
        weights = model.weights;
    }

    write_file(output, [&](std::ostream& out) {
        for (std::size_t i = 0; i < ds.size(); ++i) {
            const wolc::TestCodeword codeword =
                wolc::evaluate_codeword(model, ds.features.row(i));
            int label = 0;
            std::vector<double> class_scores(
                static_cast<std::size_t>(model.coding.class_count()), 0.0);
            for (int p = 0; p < model.coding.class_count(); ++p) {
                double score = 0.0;
                for (int q = 0; q < model.coding.length(); ++q) {
                    const double x = codeword[static_cast<std::size_t>(q)];
                    switch (decoder) {
                    case wolc::DecoderKind::hd:
                        score += (1.0 - (x >= 0.0 ? 1.0 : -1.0) * model.coding.at(p, q)) / 2.0;
                        break;
                    case wolc::DecoderKind::lb:
                        score += wolc::column_loss(model.loss, x * model.coding.at(p, q));
                        break;
                    case wolc::DecoderKind::lw_empirical:
                    case wolc::DecoderKind::ow:
                        score += weights.at(p, q) *
                                 wolc::column_loss(model.loss, x * model.coding.at(p, q));
                        break;
                    }
                }
                class_scores[static_cast<std::size_t>(p)] = score;
            }
            for (int p = 0; p < model.coding.class_count(); ++p) {
                if (class_scores[static_cast<std::size_t>(p)] <
                    class_scores[static_cast<std::size_t>(label)]) {
                    label = p;
                }
            }
            out << model.label_values[static_cast<std::size_t>(label)];
            if (scores) {
                char buffer[64];
                for (const double s : class_scores) {
                    std::snprintf(buffer, sizeof(buffer), "%.9g", s);
                    out << ' ' << buffer;
                }
            }
            out << '\n';
        }
    });
    write_config_echo(sub, output);
    std::cout << "wrote " << ds.size() << " predictions to " << output << '\n';
    return 0;
}

int run_benchmark_cmd(const std::string& data, const std::string& names,
                      const std::string& methods, const std::string& format, int label_column,
                      int repeats, int folds, const std::string& normalization,
                      int random_length, double random_zero_prob, const LearnerFlags& flags,
                      std::uint64_t seed, int jobs, const std::string& output, CLI::App* sub) {
    const std::vector<std::string> paths = split_list(data);
    const std::vector<std::string> name_list = split_list(names);
    const std::vector<std::string> method_list = split_list(methods);
    if (paths.empty()) throw wolc::ConfigError("no datasets given");
    if (method_list.empty()) throw wolc::ConfigError("no methods given");
    if (!name_list.empty() && name_list.size() != paths.size()) {
        throw wolc::ConfigError("got " + std::to_string(name_list.size()) + " names for " +
                                std::to_string(paths.size()) + " datasets");
    }
    if (normalization != "fold" && normalization != "global") {
        throw wolc::ConfigError("normalization must be 'fold' or 'global', got '" + normalization +
                                "'");
    }

    std::vector<wolc::RunReport> reports;
    for (std::size_t d = 0; d < paths.size(); ++d) {
        for (const std::string& method : method_list) {
            wolc::RunSpec spec;
            spec.dataset_path = paths[d];
            spec.dataset_name = name_list.empty() ? "" : name_list[d];
            spec.load = load_options(format, label_column);
            spec.method = method;
            spec.learner = flags.to_config(seed);
            spec.repeats = repeats;
            spec.folds = folds;
            spec.seed = seed;
            spec.global_normalization = normalization == "global";
            spec.random_code_length = random_length;
            spec.random_zero_prob = random_zero_prob;

            const wolc::RunReport report = wolc::run_benchmark(spec, jobs);
            std::cerr << report.dataset_name << " / " << report.method << ": "
                      << report.wall_seconds << "s\n";
            wolc::emit_report(std::cout, report, wolc::ReportFormat::text);
            std::cout << '\n';

            const std::string path = output + "." + report.dataset_name + "." + report.method +
                                     ".report";
            write_file(path, [&](std::ostream& out) {
                wolc::emit_report(out, report, wolc::ReportFormat::records);
            });
            reports.push_back(report);
        }
    }

    const wolc::RankTable table = wolc::compare_grid(reports);
    write_file(output + ".ranks",
               [&](std::ostream& out) { wolc::emit_rank_table(out, table); });
    wolc::emit_rank_table(std::cout, table);
    write_config_echo(sub, output);
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Ternary output-code multiclass classifiers with optimized decoding weights"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a key=value file (flags take precedence)");
    app.allow_config_extras(false);

    std::function<int()> action;

    // gen-code ------------------------------------------------------------
    auto* gen = app.add_subcommand("gen-code", "Generate a coding matrix");
    {
        auto method = std::make_shared<std::string>();
        auto classes = std::make_shared<int>(0);
        auto length = std::make_shared<int>(10);
        auto zero_prob = std::make_shared<double>(0.5);
        auto seed = std::make_shared<std::uint64_t>(42);
        auto output = std::make_shared<std::string>();
        gen->add_option("--method", *method, "Coding scheme: 1vsall, 1vs1 or random")->required();
        gen->add_option("--classes", *classes, "Number of classes")->required();
        gen->add_option("--length", *length, "Columns for random codings")->capture_default_str();
        gen->add_option("--zero-prob", *zero_prob, "Zero probability for random codings")
            ->capture_default_str();
        gen->add_option("--seed", *seed, "Random seed")->capture_default_str();
        gen->add_option("--output", *output, "Output file")->required();
        gen->callback([=, &action] {
            action = [=] {
                return run_gen_code(*method, *classes, *length, *zero_prob, *seed, *output, gen);
            };
        });
    }

    // train ---------------------------------------------------------------
    auto* train = app.add_subcommand("train", "Train a classifier");
    {
        auto data = std::make_shared<std::string>();
        auto format = std::make_shared<std::string>("delimited");
        auto label_column = std::make_shared<int>(-1);
        auto coding = std::make_shared<std::string>();
        auto flags = std::make_shared<LearnerFlags>();
        auto seed = std::make_shared<std::uint64_t>(42);
        auto output = std::make_shared<std::string>();
        train->add_option("--data", *data, "Training dataset file")->required();
        train->add_option("--format", *format, "Input layout: delimited or sparse")
            ->capture_default_str();
        train->add_option("--label-column", *label_column,
                          "Label field index for delimited input (-1 = last)")
            ->capture_default_str();
        train->add_option("--coding", *coding,
                          "Initial coding matrix file (default: one-vs-all)");
        flags->attach(train);
        train->add_option("--seed", *seed, "Random seed")->capture_default_str();
        train->add_option("--output", *output, "Model output file")->required();
        train->callback([=, &action] {
            action = [=] {
                return run_train(*data, *format, *label_column, *coding, *flags, *seed, *output,
                                 train);
            };
        });
    }

    // predict --------------------------------------------------------------
    auto* predict = app.add_subcommand("predict", "Predict with a trained model");
    {
        auto model = std::make_shared<std::string>();
        auto data = std::make_shared<std::string>();
        auto format = std::make_shared<std::string>("delimited");
        auto label_column = std::make_shared<int>(-1);
        auto decoder = std::make_shared<std::string>("ow");
        auto scores = std::make_shared<bool>(false);
        auto output = std::make_shared<std::string>();
        predict->add_option("--model", *model, "Model file from train")->required();
        predict->add_option("--data", *data, "Dataset file to predict")->required();
        predict->add_option("--format", *format, "Input layout: delimited or sparse")
            ->capture_default_str();
        predict->add_option("--label-column", *label_column,
                            "Label field index for delimited input (-1 = last)")
            ->capture_default_str();
        predict->add_option("--decoder", *decoder, "Decoder: hd, lb, lw or ow")
            ->capture_default_str();
        predict->add_flag("--scores", *scores, "Append per-class scores to each line");
        predict->add_option("--output", *output, "Predictions output file")->required();
        predict->callback([=, &action] {
            action = [=] {
                return run_predict(*model, *data, *format, *label_column, *decoder, *scores,
                                   *output, predict);
            };
        });
    }

    // benchmark --------------------------------------------------------------
    auto* bench = app.add_subcommand("benchmark", "Cross-validated method comparison");
    {
        auto data = std::make_shared<std::string>();
        auto names = std::make_shared<std::string>();
        auto methods = std::make_shared<std::string>();
        auto format = std::make_shared<std::string>("delimited");
        auto label_column = std::make_shared<int>(-1);
        auto repeats = std::make_shared<int>(10);
        auto folds = std::make_shared<int>(10);
        auto normalization = std::make_shared<std::string>("fold");
        auto random_length = std::make_shared<int>(10);
        auto random_zero_prob = std::make_shared<double>(0.5);
        auto flags = std::make_shared<LearnerFlags>();
        auto seed = std::make_shared<std::uint64_t>(42);
        auto jobs = std::make_shared<int>(1);
        auto output = std::make_shared<std::string>();
        bench->add_option("--data", *data, "Dataset file(s), comma-separated")->required();
        bench->add_option("--names", *names, "Dataset name(s) for the report, comma-separated");
        bench->add_option("--methods", *methods,
                          "Method name(s), comma-separated (e.g. wolc-ow,1vsall-hd)")
            ->required();
        bench->add_option("--format", *format, "Input layout: delimited or sparse")
            ->capture_default_str();
        bench->add_option("--label-column", *label_column,
                          "Label field index for delimited input (-1 = last)")
            ->capture_default_str();
        bench->add_option("--repeats", *repeats, "Cross-validation repeats")->capture_default_str();
        bench->add_option("--folds", *folds, "Folds per repeat")->capture_default_str();
        bench->add_option("--normalization", *normalization,
                          "Feature scaling: fold (train-fitted) or global")
            ->capture_default_str();
        bench->add_option("--random-length", *random_length, "Columns for random codings")
            ->capture_default_str();
        bench->add_option("--random-zero-prob", *random_zero_prob,
                          "Zero probability for random codings")
            ->capture_default_str();
        flags->attach(bench);
        bench->add_option("--seed", *seed, "Random seed")->capture_default_str();
        bench->add_option("--jobs", *jobs, "Concurrent fold jobs")->capture_default_str();
        bench->add_option("--output", *output, "Output path prefix")->required();
        bench->callback([=, &action] {
            action = [=] {
                return run_benchmark_cmd(*data, *names, *methods, *format, *label_column, *repeats,
                                         *folds, *normalization, *random_length, *random_zero_prob,
                                         *flags, *seed, *jobs, *output, bench);
            };
        });
    }

    CLI11_PARSE(app, argc, argv);

    try {
        return action ? action() : 1;
    } catch (const wolc::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
}
