#include <cstdio>
#include <cstdlib>
#include <istream>
#include <ostream>

#include "wolc/error.hpp"
#include "wolc/wolc.hpp"

namespace wolc {

namespace {

// Shortest text form that parses back to the identical double ("-inf" and
// "inf" included, which strtod understands).
std::string full_precision(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof(buffer), "%.17g", value);
    return buffer;
}

void write_matrix(std::ostream& out, const Matrix& m) {
    for (std::size_t r = 0; r < m.rows(); ++r) {
        for (std::size_t c = 0; c < m.cols(); ++c) {
            if (c) out << ' ';
            out << full_precision(m(r, c));
        }
        out << '\n';
    }
}

void write_stumps(std::ostream& out, const StumpEnsemble& ensemble) {
    out << "stumps " << ensemble.stumps.size() << '\n';
    for (const Stump& s : ensemble.stumps) {
        out << "stump " << s.feature << ' ' << full_precision(s.threshold) << ' ' << s.polarity
            << ' ' << full_precision(s.alpha) << '\n';
    }
}

// Whitespace-token reader with line-free error context; doubles go through
// strtod so that inf/-inf and full-precision values round-trip.
class TokenReader {
public:
    TokenReader(std::istream& in, std::string origin) : in_(in), origin_(std::move(origin)) {}

    std::string next(const char* what) {
        std::string token;
        if (!(in_ >> token)) {
            throw DataError(origin_ + ": unexpected end of input, expected " + what);
        }
        return token;
    }

    void expect(const std::string& keyword) {
        const std::string token = next(keyword.c_str());
        if (token != keyword) {
            throw DataError(origin_ + ": expected '" + keyword + "', got '" + token + "'");
        }
    }

    long long next_int(const char* what) {
        const std::string token = next(what);
        char* end = nullptr;
        const long long value = std::strtoll(token.c_str(), &end, 10);
        if (end == token.c_str() || *end != '\0') {
            throw DataError(origin_ + ": expected integer " + what + ", got '" + token + "'");
        }
        return value;
    }

    double next_double(const char* what) {
        const std::string token = next(what);
        char* end = nullptr;
        const double value = std::strtod(token.c_str(), &end);
        if (end == token.c_str() || *end != '\0') {
            throw DataError(origin_ + ": expected number " + what + ", got '" + token + "'");
        }
        return value;
    }

    const std::string& origin() const { return origin_; }

private:
    std::istream& in_;
    std::string origin_;
};

Matrix read_matrix(TokenReader& reader, std::size_t rows, std::size_t cols) {
    Matrix m(rows, cols);
    for (std::size_t r = 0; r < rows; ++r) {
        for (std::size_t c = 0; c < cols; ++c) m(r, c) = reader.next_double("matrix entry");
    }
    return m;
}

// Reads `count` stump records; the caller has consumed the list header.
StumpEnsemble read_stump_list(TokenReader& reader, long long count) {
    if (count < 0) throw DataError(reader.origin() + ": negative stump count");
    StumpEnsemble ensemble;
    for (long long s = 0; s < count; ++s) {
        reader.expect("stump");
        Stump stump;
        stump.feature = static_cast<int>(reader.next_int("stump feature"));
        stump.threshold = reader.next_double("stump threshold");
        stump.polarity = static_cast<int>(reader.next_int("stump polarity"));
        stump.alpha = reader.next_double("stump alpha");
        if (stump.polarity != 1 && stump.polarity != -1) {
            throw DataError(reader.origin() + ": stump polarity must be +1 or -1");
        }
        ensemble.stumps.push_back(stump);
    }
    return ensemble;
}

} // namespace

void save_model(std::ostream& out, const EnsembleModel& model) {
    out << "wolc-model 1\n";
    out << "features " << model.feature_count << '\n';
    out << "loss " << (model.loss == LossKind::linear ? "linear" : "exponential") << '\n';
    out << "labels " << model.label_values.size();
    for (const long long value : model.label_values) out << ' ' << value;
    out << '\n';
    out << "risk " << full_precision(model.training_risk) << '\n';

    out << "coding " << model.coding.class_count() << ' ' << model.coding.length() << '\n';
    for (int r = 0; r < model.coding.class_count(); ++r) {
        for (int c = 0; c < model.coding.length(); ++c) {
            if (c) out << ' ';
            out << int(model.coding.at(r, c));
        }
        out << '\n';
    }
    out << "weights\n";
    write_matrix(out, model.weights.values());
    out << "accuracy\n";
    write_matrix(out, model.accuracy);

    out << "dichotomizers " << model.dichotomizers.size() << '\n';
    for (const Dichotomizer& d : model.dichotomizers) {
        if (const auto* ensemble = std::get_if<StumpEnsemble>(&d)) {
            write_stumps(out, *ensemble);
        } else {
            const auto& layered = std::get<ClusteringDichotomizer>(d);
            out << "layered " << layered.regions.size() << '\n';
            for (const Region& region : layered.regions) {
                out << "region";
                for (const double v : region.centroid) out << ' ' << full_precision(v);
                out << '\n';
                if (region.ensemble) {
                    write_stumps(out, *region.ensemble);
                } else {
                    out << "sign " << region.fixed_sign << '\n';
                }
            }
        }
    }

    out << "history " << model.history.size() << '\n';
    for (const IterationRecord& record : model.history) {
        out << "t " << record.iteration << " risk " << full_precision(record.risk) << " length "
            << record.code_length << " patience " << record.patience << " pairs "
            << record.pairs.size();
        for (const PairChoice& pair : record.pairs) {
            out << ' ' << pair.first << ' ' << pair.second << ' ' << (pair.stubborn ? 1 : 0);
        }
        out << '\n';
    }
}

EnsembleModel load_model(std::istream& in, const std::string& origin) {
    TokenReader reader(in, origin);
    reader.expect("wolc-model");
    const long long version = reader.next_int("format version");
    if (version != 1) {
        throw DataError(origin + ": unsupported model format version " + std::to_string(version));
    }

    EnsembleModel model;
    reader.expect("features");
    model.feature_count = static_cast<int>(reader.next_int("feature count"));
    reader.expect("loss");
    const std::string loss = reader.next("loss kind");
    if (loss == "linear") {
        model.loss = LossKind::linear;
    } else if (loss == "exponential") {
        model.loss = LossKind::exponential;
    } else {
        throw DataError(origin + ": unknown loss kind '" + loss + "'");
    }
    reader.expect("labels");
    const long long label_count = reader.next_int("label count");
    for (long long i = 0; i < label_count; ++i) {
        model.label_values.push_back(reader.next_int("label value"));
    }
    reader.expect("risk");
    model.training_risk = reader.next_double("training risk");

    reader.expect("coding");
    const long long classes = reader.next_int("class count");
    const long long length = reader.next_int("code length");
    if (classes < 2 || length < 1) {
        throw DataError(origin + ": malformed coding matrix size");
    }
    model.coding = CodingMatrix(static_cast<int>(classes), static_cast<int>(length));
    for (int r = 0; r < classes; ++r) {
        for (int c = 0; c < length; ++c) {
            const long long entry = reader.next_int("coding entry");
            if (entry < -1 || entry > 1) {
                throw DataError(origin + ": coding entries must be -1, 0 or +1");
            }
            model.coding.at(r, c) = static_cast<std::int8_t>(entry);
        }
    }

    reader.expect("weights");
    model.weights = WeightMatrix(read_matrix(reader, static_cast<std::size_t>(classes),
                                             static_cast<std::size_t>(length)));
    reader.expect("accuracy");
    model.accuracy =
        read_matrix(reader, static_cast<std::size_t>(classes), static_cast<std::size_t>(length));

    reader.expect("dichotomizers");
    const long long dichotomizers = reader.next_int("dichotomizer count");
    if (dichotomizers != length) {
        throw DataError(origin + ": " + std::to_string(dichotomizers) + " dichotomizers for " +
                        std::to_string(length) + " coding columns");
    }
    for (long long d = 0; d < dichotomizers; ++d) {
        const std::string kind = reader.next("dichotomizer kind");
        if (kind == "stumps") {
            model.dichotomizers.emplace_back(
                read_stump_list(reader, reader.next_int("stump count")));
        } else if (kind == "layered") {
            const long long regions = reader.next_int("region count");
            ClusteringDichotomizer layered;
            for (long long r = 0; r < regions; ++r) {
                reader.expect("region");
                Region region;
                for (int f = 0; f < model.feature_count; ++f) {
                    region.centroid.push_back(reader.next_double("centroid coordinate"));
                }
                const std::string payload = reader.next("region payload");
                if (payload == "stumps") {
                    region.ensemble = read_stump_list(reader, reader.next_int("stump count"));
                } else if (payload == "sign") {
                    region.fixed_sign = static_cast<int>(reader.next_int("region sign"));
                    if (region.fixed_sign != 1 && region.fixed_sign != -1) {
                        throw DataError(origin + ": region sign must be +1 or -1");
                    }
                } else {
                    throw DataError(origin + ": unknown region payload '" + payload + "'");
                }
                layered.regions.push_back(std::move(region));
            }
            model.dichotomizers.emplace_back(std::move(layered));
        } else {
            throw DataError(origin + ": unknown dichotomizer kind '" + kind + "'");
        }
    }

    reader.expect("history");
    const long long records = reader.next_int("history length");
    for (long long r = 0; r < records; ++r) {
        IterationRecord record;
        reader.expect("t");
        record.iteration = static_cast<int>(reader.next_int("iteration"));
        reader.expect("risk");
        record.risk = reader.next_double("risk");
        reader.expect("length");
        record.code_length = static_cast<int>(reader.next_int("code length"));
        reader.expect("patience");
        record.patience = static_cast<int>(reader.next_int("patience"));
        reader.expect("pairs");
        const long long pairs = reader.next_int("pair count");
        for (long long p = 0; p < pairs; ++p) {
            PairChoice pair;
            pair.first = static_cast<int>(reader.next_int("pair first"));
            pair.second = static_cast<int>(reader.next_int("pair second"));
            pair.stubborn = reader.next_int("stubborn flag") != 0;
            record.pairs.push_back(pair);
        }
        model.history.push_back(std::move(record));
    }
    return model;
}

void write_history(std::ostream& out, const std::vector<IterationRecord>& history) {
    for (const IterationRecord& record : history) {
        out << "t=" << record.iteration << " risk=" << full_precision(record.risk)
            << " length=" << record.code_length << " patience=" << record.patience << " pairs=";
        for (std::size_t p = 0; p < record.pairs.size(); ++p) {
            if (p) out << ',';
            out << record.pairs[p].first << ':' << record.pairs[p].second << ':'
                << (record.pairs[p].stubborn ? "layered" : "plain");
        }
        if (record.pairs.empty()) out << '-';
        out << '\n';
    }
}

} // namespace wolc
