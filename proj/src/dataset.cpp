#include "wolc/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>

#include "wolc/error.hpp"
#include "wolc/rng.hpp"

namespace wolc {

namespace {

// One raw example as parsed from the file, before label densification.
struct RawRow {
    std::vector<double> values;
    long long label = 0;
};

double parse_number(const std::string& field, const std::string& origin, std::size_t line_no,
                    std::size_t field_no) {
    if (field.empty()) {
        throw DataError(origin + ":" + std::to_string(line_no) + ": field " +
                        std::to_string(field_no) + " is empty (missing values are not supported)");
    }
    const char* begin = field.c_str();
    char* end = nullptr;
    const double value = std::strtod(begin, &end);
    if (end == begin || *end != '\0' || !std::isfinite(value)) {
        throw DataError(origin + ":" + std::to_string(line_no) + ": field " +
                        std::to_string(field_no) + " is not a finite number: '" + field + "'");
    }
    return value;
}

long long parse_label(double value, const std::string& origin, std::size_t line_no) {
    const double rounded = std::nearbyint(value);
    if (std::abs(value - rounded) > 1e-9) {
        throw DataError(origin + ":" + std::to_string(line_no) +
                        ": label must be an integer, got " + std::to_string(value));
    }
    return static_cast<long long>(rounded);
}

char detect_delimiter(const std::string& line) {
    if (line.find(',') != std::string::npos) return ',';
    if (line.find(';') != std::string::npos) return ';';
    return ' '; // any whitespace
}

std::vector<std::string> split_fields(const std::string& line, char delimiter) {
    std::vector<std::string> fields;
    if (delimiter == ' ') {
        std::istringstream ss(line);
        std::string token;
        while (ss >> token) fields.push_back(token);
        return fields;
    }
    std::string current;
    for (const char ch : line) {
        if (ch == delimiter) {
            fields.push_back(current);
            current.clear();
        } else if (!std::isspace(static_cast<unsigned char>(ch))) {
            current += ch;
        }
    }
    fields.push_back(current);
    return fields;
}

RawRow parse_delimited_row(const std::vector<std::string>& fields, int label_column,
                           const std::string& origin, std::size_t line_no) {
    const int count = static_cast<int>(fields.size());
    int label_at = label_column < 0 ? count - 1 : label_column;
    if (label_at < 0 || label_at >= count) {
        throw DataError(origin + ":" + std::to_string(line_no) + ": label column " +
                        std::to_string(label_column) + " out of range for " +
                        std::to_string(count) + " fields");
    }
    RawRow row;
    for (int f = 0; f < count; ++f) {
        const double value = parse_number(fields[f], origin, line_no, static_cast<std::size_t>(f + 1));
        if (f == label_at) {
            row.label = parse_label(value, origin, line_no);
        } else {
            row.values.push_back(value);
        }
    }
    return row;
}

RawRow parse_sparse_row(const std::vector<std::string>& fields, const std::string& origin,
                        std::size_t line_no, int& max_index) {
    if (fields.empty()) {
        throw DataError(origin + ":" + std::to_string(line_no) + ": empty example");
    }
    RawRow row;
    row.label = parse_label(parse_number(fields[0], origin, line_no, 1), origin, line_no);
    // Sparse rows keep (index, value) pairs in `values` as a flat list for
    // now; they are scattered into a dense row once the width is known.
    for (std::size_t f = 1; f < fields.size(); ++f) {
        const std::string& pair = fields[f];
        const std::size_t colon = pair.find(':');
        if (colon == std::string::npos) {
            throw DataError(origin + ":" + std::to_string(line_no) + ": field " +
                            std::to_string(f + 1) + " is not an index:value pair: '" + pair + "'");
        }
        const double index_value = parse_number(pair.substr(0, colon), origin, line_no, f + 1);
        const long long index = parse_label(index_value, origin, line_no);
        if (index < 1) {
            throw DataError(origin + ":" + std::to_string(line_no) +
                            ": feature indices are 1-based, got " + std::to_string(index));
        }
        const double value = parse_number(pair.substr(colon + 1), origin, line_no, f + 1);
        row.values.push_back(static_cast<double>(index));
        row.values.push_back(value);
        max_index = std::max(max_index, static_cast<int>(index));
    }
    return row;
}

} // namespace

Dataset load_dataset(std::istream& in, const LoadOptions& options, const std::string& origin) {
    std::vector<RawRow> rows;
    std::vector<std::size_t> row_lines;
    std::string line;
    std::size_t line_no = 0;
    std::size_t expected_fields = 0;
    std::size_t first_data_line = 0;
    char delimiter = options.delimiter;
    int sparse_max_index = 0;

    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        std::size_t start = line.find_first_not_of(" \t");
        if (start == std::string::npos || line[start] == '#') continue;

        if (delimiter == '\0') delimiter = detect_delimiter(line);
        const std::vector<std::string> fields =
            split_fields(line, options.format == DataFormat::sparse_index ? ' ' : delimiter);

        if (options.format == DataFormat::delimited) {
            if (rows.empty()) {
                expected_fields = fields.size();
                first_data_line = line_no;
                if (expected_fields < 2) {
                    throw DataError(origin + ":" + std::to_string(line_no) +
                                    ": need at least one feature and a label, got " +
                                    std::to_string(expected_fields) + " field(s)");
                }
            } else if (fields.size() != expected_fields) {
                throw DataError(origin + ":" + std::to_string(line_no) + ": expected " +
                                std::to_string(expected_fields) + " fields (as on line " +
                                std::to_string(first_data_line) + "), got " +
                                std::to_string(fields.size()));
            }
            rows.push_back(parse_delimited_row(fields, options.label_column, origin, line_no));
        } else {
            rows.push_back(parse_sparse_row(fields, origin, line_no, sparse_max_index));
        }
        row_lines.push_back(line_no);
    }

    if (rows.empty()) {
        throw DataError(origin + ": no examples found");
    }

    Dataset ds;
    if (options.format == DataFormat::delimited) {
        ds.feature_count = static_cast<int>(rows.front().values.size());
        ds.features = Matrix(rows.size(), rows.front().values.size());
        for (std::size_t i = 0; i < rows.size(); ++i) {
            std::copy(rows[i].values.begin(), rows[i].values.end(), ds.features.row(i).begin());
        }
    } else {
        if (sparse_max_index == 0) {
            throw DataError(origin + ": no feature values found in sparse input");
        }
        ds.feature_count = sparse_max_index;
        ds.features = Matrix(rows.size(), static_cast<std::size_t>(sparse_max_index));
        for (std::size_t i = 0; i < rows.size(); ++i) {
            for (std::size_t f = 0; f + 1 < rows[i].values.size(); f += 2) {
                const auto index = static_cast<std::size_t>(rows[i].values[f]);
                ds.features(i, index - 1) = rows[i].values[f + 1];
            }
        }
    }

    // Densify labels: sorted distinct original values become 1..P.
    std::map<long long, int> dense_of;
    for (const RawRow& row : rows) dense_of[row.label] = 0;
    int next = 0;
    for (auto& [value, dense] : dense_of) {
        dense = ++next;
        ds.label_values.push_back(value);
    }
    ds.class_count = next;
    ds.labels.reserve(rows.size());
    for (const RawRow& row : rows) ds.labels.push_back(dense_of[row.label]);
    return ds;
}

Dataset load_dataset(const std::string& path, const LoadOptions& options) {
    std::ifstream in(path);
    if (!in) {
        throw DataError("cannot open dataset file: " + path);
    }
    return load_dataset(in, options, path);
}

UnitRangeStats UnitRangeStats::fit(const Dataset& ds) {
    UnitRangeStats stats;
    const std::size_t d = ds.features.cols();
    stats.minimum.assign(d, 0.0);
    stats.span.assign(d, 0.0);
    for (std::size_t c = 0; c < d; ++c) {
        double lo = ds.features(0, c);
        double hi = lo;
        for (std::size_t r = 1; r < ds.features.rows(); ++r) {
            lo = std::min(lo, ds.features(r, c));
            hi = std::max(hi, ds.features(r, c));
        }
        stats.minimum[c] = lo;
        stats.span[c] = hi - lo;
    }
    return stats;
}

Dataset UnitRangeStats::apply(const Dataset& ds) const {
    if (minimum.size() != ds.features.cols()) {
        throw DataError("scaling was fitted on " + std::to_string(minimum.size()) +
                        " features, dataset has " + std::to_string(ds.features.cols()));
    }
    Dataset out = ds;
    for (std::size_t c = 0; c < ds.features.cols(); ++c) {
        for (std::size_t r = 0; r < ds.features.rows(); ++r) {
            out.features(r, c) =
                span[c] == 0.0 ? 0.0 : (ds.features(r, c) - minimum[c]) / span[c];
        }
    }
    return out;
}

Dataset normalize_unit_range(const Dataset& ds) {
    if (ds.size() == 0) throw DataError("cannot normalize an empty dataset");
    return UnitRangeStats::fit(ds).apply(ds);
}

std::vector<std::size_t> FoldPlan::test_indices(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        if (assignments[i] == fold) out.push_back(i);
    }
    return out;
}

std::vector<std::size_t> FoldPlan::train_indices(int fold) const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignments.size(); ++i) {
        if (assignments[i] != fold) out.push_back(i);
    }
    return out;
}

FoldPlan stratified_folds(const Dataset& ds, int fold_count, std::uint64_t seed) {
    const std::size_t n = ds.size();
    if (fold_count < 2) {
        throw ConfigError("fold count must be at least 2, got " + std::to_string(fold_count));
    }
    if (static_cast<std::size_t>(fold_count) > n) {
        throw ConfigError("fold count " + std::to_string(fold_count) + " exceeds the " +
                          std::to_string(n) + " available examples");
    }

    FoldPlan plan;
    plan.fold_count = fold_count;
    plan.seed = seed;
    plan.assignments.assign(n, 0);

    // Deal each class round-robin from a shuffled order.  Rotating the
    // starting fold per class spreads the remainders, which is what keeps the
    // per-class fold counts within one of each other overall.
    for (int c = 1; c <= ds.class_count; ++c) {
        std::vector<std::size_t> members;
        for (std::size_t i = 0; i < n; ++i) {
            if (ds.labels[i] == c) members.push_back(i);
        }
        Rng rng(derive_seed(seed, static_cast<std::uint64_t>(c)));
        rng.shuffle(members);
        const int start = static_cast<int>(rng.next_below(static_cast<std::uint64_t>(fold_count)));
        for (std::size_t k = 0; k < members.size(); ++k) {
            plan.assignments[members[k]] =
                static_cast<int>((start + k) % static_cast<std::size_t>(fold_count));
        }
    }
    return plan;
}

Dataset subset(const Dataset& ds, const std::vector<std::size_t>& rows) {
    Dataset out;
    out.class_count = ds.class_count;
    out.feature_count = ds.feature_count;
    out.label_values = ds.label_values;
    out.features = Matrix(rows.size(), ds.features.cols());
    out.labels.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i] >= ds.size()) {
            throw ConfigError("subset row " + std::to_string(rows[i]) + " out of range for " +
                              std::to_string(ds.size()) + " examples");
        }
        const auto src = ds.features.row(rows[i]);
        std::copy(src.begin(), src.end(), out.features.row(i).begin());
        out.labels.push_back(ds.labels[rows[i]]);
    }
    return out;
}

} // namespace wolc
