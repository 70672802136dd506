#include "wolc/coding.hpp"

#include <istream>
#include <ostream>
#include <sstream>

#include "wolc/error.hpp"
#include "wolc/rng.hpp"

namespace wolc {

ColumnSpec CodingMatrix::column(int c) const {
    ColumnSpec spec;
    spec.entries.reserve(static_cast<std::size_t>(class_count_));
    for (int r = 0; r < class_count_; ++r) spec.entries.push_back(at(r, c));
    return spec;
}

CodingMatrix make_one_vs_all(int class_count) {
    if (class_count < 2) {
        throw ConfigError("one-vs-all coding needs at least 2 classes, got " +
                          std::to_string(class_count));
    }
    CodingMatrix m(class_count, class_count);
    for (int r = 0; r < class_count; ++r) {
        for (int c = 0; c < class_count; ++c) m.at(r, c) = (r == c) ? 1 : -1;
    }
    return m;
}

CodingMatrix make_one_vs_one(int class_count) {
    if (class_count < 2) {
        throw ConfigError("one-vs-one coding needs at least 2 classes, got " +
                          std::to_string(class_count));
    }
    CodingMatrix m(class_count, class_count * (class_count - 1) / 2);
    int c = 0;
    for (int i = 0; i < class_count; ++i) {
        for (int j = i + 1; j < class_count; ++j, ++c) {
            m.at(i, c) = 1;
            m.at(j, c) = -1;
        }
    }
    return m;
}

namespace {

bool column_has_both_signs(const ColumnSpec& column) {
    bool pos = false;
    bool neg = false;
    for (const std::int8_t e : column.entries) {
        pos = pos || e > 0;
        neg = neg || e < 0;
    }
    return pos && neg;
}

} // namespace

CodingMatrix make_random_ternary(int class_count, int length, double zero_prob,
                                 std::uint64_t seed) {
    if (class_count < 2) {
        throw ConfigError("random coding needs at least 2 classes, got " +
                          std::to_string(class_count));
    }
    if (length < 1) {
        throw ConfigError("random coding needs a positive length, got " + std::to_string(length));
    }
    if (zero_prob < 0.0 || zero_prob >= 1.0) {
        throw ConfigError("zero probability must lie in [0, 1), got " + std::to_string(zero_prob));
    }

    Rng rng(seed);
    const long attempts_allowed = 100L * length;
    std::string last_issue;

    // Duplicate or zero rows can survive the column-wise checks (two classes
    // zeroed out everywhere by unlucky draws, or every +/-1 column forced to
    // put some pair of classes on the same side).  Re-draw the whole matrix a
    // bounded number of times; some requests (three or more classes at length
    // one) admit no valid matrix at all and must end in an error, not a loop.
    for (int redraw = 0; redraw < 64; ++redraw) {
        CodingMatrix m(class_count, 0);
        long attempts = 0;

        while (m.length() < length) {
            ColumnSpec column;
            column.entries.resize(static_cast<std::size_t>(class_count));
            for (int r = 0; r < class_count; ++r) {
                if (rng.next_unit() < zero_prob) {
                    column.entries[r] = 0;
                } else {
                    column.entries[r] = rng.next_unit() < 0.5 ? std::int8_t{1} : std::int8_t{-1};
                }
            }
            if (column_has_both_signs(column) && !contains_column(m, column)) {
                m = append_column(m, column);
                continue;
            }
            if (++attempts >= attempts_allowed) {
                throw ConfigError(
                    "random coding: gave up after " + std::to_string(attempts_allowed) +
                    " draws with " + std::to_string(m.length()) + " of " + std::to_string(length) +
                    " columns placed; " + std::to_string(class_count) +
                    " classes admit too few distinct dichotomies at zero probability " +
                    std::to_string(zero_prob));
            }
        }

        const ValidityReport report = validate(m);
        if (report.ok()) return m;
        last_issue = report.to_string();
    }
    throw ConfigError("random coding: no valid matrix for " + std::to_string(class_count) +
                      " classes at length " + std::to_string(length) + " after 64 redraws (" +
                      last_issue + ")");
}

std::string ValidityIssue::message() const {
    std::ostringstream out;
    switch (kind) {
    case Kind::duplicate_rows:
        out << "rows " << first << " and " << second << " carry identical codewords";
        break;
    case Kind::column_missing_positive:
        out << "column " << first << " has no +1 entry";
        break;
    case Kind::column_missing_negative:
        out << "column " << first << " has no -1 entry";
        break;
    case Kind::zero_row:
        out << "row " << first << " is entirely zero";
        break;
    }
    return out.str();
}

std::string ValidityReport::to_string() const {
    std::string text;
    for (const ValidityIssue& issue : issues) {
        if (!text.empty()) text += "; ";
        text += issue.message();
    }
    return text.empty() ? "ok" : text;
}

ValidityReport validate(const CodingMatrix& m) {
    ValidityReport report;
    for (int a = 0; a < m.class_count(); ++a) {
        bool all_zero = true;
        for (int c = 0; c < m.length(); ++c) all_zero = all_zero && m.at(a, c) == 0;
        if (all_zero) {
            report.issues.push_back({ValidityIssue::Kind::zero_row, a + 1, 0});
        }
        for (int b = a + 1; b < m.class_count(); ++b) {
            bool equal = true;
            for (int c = 0; c < m.length() && equal; ++c) equal = m.at(a, c) == m.at(b, c);
            if (equal) {
                report.issues.push_back({ValidityIssue::Kind::duplicate_rows, a + 1, b + 1});
            }
        }
    }
    for (int c = 0; c < m.length(); ++c) {
        bool pos = false;
        bool neg = false;
        for (int r = 0; r < m.class_count(); ++r) {
            pos = pos || m.at(r, c) > 0;
            neg = neg || m.at(r, c) < 0;
        }
        if (!pos) report.issues.push_back({ValidityIssue::Kind::column_missing_positive, c + 1, 0});
        if (!neg) report.issues.push_back({ValidityIssue::Kind::column_missing_negative, c + 1, 0});
    }
    return report;
}

CodingMatrix append_column(const CodingMatrix& m, const ColumnSpec& column) {
    if (m.class_count() != 0 && column.classes() != m.class_count()) {
        throw ConfigError("column has " + std::to_string(column.classes()) +
                          " entries, matrix has " + std::to_string(m.class_count()) + " classes");
    }
    for (const std::int8_t e : column.entries) {
        if (e < -1 || e > 1) {
            throw ConfigError("column entries must be -1, 0 or +1, got " + std::to_string(int(e)));
        }
    }
    if (!column_has_both_signs(column)) {
        throw ConfigError("a coding column needs at least one +1 and one -1 entry");
    }
    CodingMatrix out(column.classes(), m.length() + 1);
    for (int r = 0; r < out.class_count(); ++r) {
        for (int c = 0; c < m.length(); ++c) out.at(r, c) = m.at(r, c);
        out.at(r, m.length()) = column.entries[static_cast<std::size_t>(r)];
    }
    return out;
}

ColumnSpec pair_column(int i, int j, int class_count) {
    if (i < 1 || j < 1 || i > class_count || j > class_count || i == j) {
        throw ConfigError("invalid class pair (" + std::to_string(i) + ", " + std::to_string(j) +
                          ") for " + std::to_string(class_count) + " classes");
    }
    ColumnSpec column;
    column.entries.assign(static_cast<std::size_t>(class_count), 0);
    column.entries[static_cast<std::size_t>(std::min(i, j)) - 1] = 1;
    column.entries[static_cast<std::size_t>(std::max(i, j)) - 1] = -1;
    return column;
}

bool same_bipartition(std::span<const std::int8_t> a, std::span<const std::int8_t> b) {
    if (a.size() != b.size()) return false;
    bool direct = true;
    bool flipped = true;
    for (std::size_t r = 0; r < a.size(); ++r) {
        direct = direct && a[r] == b[r];
        flipped = flipped && a[r] == -b[r];
    }
    return direct || flipped;
}

bool contains_column(const CodingMatrix& m, const ColumnSpec& column) {
    for (int c = 0; c < m.length(); ++c) {
        const ColumnSpec existing = m.column(c);
        if (same_bipartition(existing.entries, column.entries)) return true;
    }
    return false;
}

void write_coding(std::ostream& out, const CodingMatrix& m) {
    out << m.class_count() << ' ' << m.length() << '\n';
    for (int r = 0; r < m.class_count(); ++r) {
        for (int c = 0; c < m.length(); ++c) {
            if (c) out << ' ';
            out << int(m.at(r, c));
        }
        out << '\n';
    }
}

CodingMatrix read_coding(std::istream& in, const std::string& origin) {
    int classes = 0;
    int length = 0;
    if (!(in >> classes >> length) || classes < 1 || length < 0) {
        throw DataError(origin + ": malformed coding matrix header");
    }
    CodingMatrix m(classes, length);
    for (int r = 0; r < classes; ++r) {
        for (int c = 0; c < length; ++c) {
            int value = 0;
            if (!(in >> value) || value < -1 || value > 1) {
                throw DataError(origin + ": bad entry at row " + std::to_string(r + 1) +
                                ", column " + std::to_string(c + 1));
            }
            m.at(r, c) = static_cast<std::int8_t>(value);
        }
    }
    return m;
}

} // namespace wolc
