#include <doctest.h>

#include <sstream>

#include "wolc/coding.hpp"
#include "wolc/error.hpp"

using namespace wolc;

namespace {

CodingMatrix from_rows(const std::vector<std::vector<int>>& rows) {
    CodingMatrix m(static_cast<int>(rows.size()), static_cast<int>(rows.front().size()));
    for (int r = 0; r < m.class_count(); ++r) {
        for (int c = 0; c < m.length(); ++c) {
            m.at(r, c) = static_cast<std::int8_t>(rows[static_cast<std::size_t>(r)]
                                                      [static_cast<std::size_t>(c)]);
        }
    }
    return m;
}

int count_kind(const ValidityReport& report, ValidityIssue::Kind kind) {
    int count = 0;
    for (const ValidityIssue& issue : report.issues) {
        if (issue.kind == kind) ++count;
    }
    return count;
}

} // namespace

TEST_CASE("one-vs-all puts +1 on the diagonal and -1 elsewhere") {
    const CodingMatrix m = make_one_vs_all(3);
    CHECK(m == from_rows({{1, -1, -1}, {-1, 1, -1}, {-1, -1, 1}}));
    CHECK(validate(m).ok());
    CHECK_THROWS_AS(make_one_vs_all(1), ConfigError);
}

TEST_CASE("one-vs-one enumerates class pairs lexicographically") {
    const CodingMatrix m = make_one_vs_one(4);
    // pairs: (1,2) (1,3) (1,4) (2,3) (2,4) (3,4)
    CHECK(m == from_rows({{1, 1, 1, 0, 0, 0},
                          {-1, 0, 0, 1, 1, 0},
                          {0, -1, 0, -1, 0, 1},
                          {0, 0, -1, 0, -1, -1}}));
    CHECK(validate(m).ok());

    for (int p = 2; p <= 8; ++p) {
        const CodingMatrix pairs = make_one_vs_one(p);
        CHECK(pairs.length() == p * (p - 1) / 2);
        CHECK(validate(pairs).ok());
        for (int c = 0; c < pairs.length(); ++c) {
            int positives = 0;
            int negatives = 0;
            int zeros = 0;
            for (int r = 0; r < p; ++r) {
                const int e = pairs.at(r, c);
                positives += e > 0;
                negatives += e < 0;
                zeros += e == 0;
            }
            CHECK(positives == 1);
            CHECK(negatives == 1);
            CHECK(zeros == p - 2);
        }
    }
}

TEST_CASE("random ternary codings are valid, deterministic and collision-free") {
    const CodingMatrix m = make_random_ternary(5, 12, 0.4, 99);
    CHECK(m.class_count() == 5);
    CHECK(m.length() == 12);
    CHECK(validate(m).ok());
    for (int c = 0; c < m.length(); ++c) {
        for (int d = c + 1; d < m.length(); ++d) {
            CHECK_FALSE(same_bipartition(m.column(c).entries, m.column(d).entries));
        }
    }

    CHECK(m == make_random_ternary(5, 12, 0.4, 99));
    CHECK_FALSE(m == make_random_ternary(5, 12, 0.4, 100));
}

TEST_CASE("random coding rejects requests with too few distinct dichotomies") {
    // Two classes admit exactly one zero-free dichotomy up to sign.
    CHECK_THROWS_WITH_AS(make_random_ternary(2, 4, 0.0, 7), doctest::Contains("gave up"),
                         ConfigError);
    const CodingMatrix single = make_random_ternary(2, 1, 0.0, 7);
    CHECK(validate(single).ok());

    CHECK_THROWS_AS(make_random_ternary(1, 3, 0.5, 7), ConfigError);
    CHECK_THROWS_AS(make_random_ternary(3, 0, 0.5, 7), ConfigError);
    CHECK_THROWS_AS(make_random_ternary(3, 3, 1.0, 7), ConfigError);

    // A single ternary column cannot give three classes distinct nonzero
    // codewords, so no redraw can ever succeed; the request must error out
    // rather than retry forever.
    CHECK_THROWS_WITH_AS(make_random_ternary(3, 1, 0.0, 7), doctest::Contains("no valid matrix"),
                         ConfigError);
    CHECK_THROWS_AS(make_random_ternary(4, 1, 0.3, 7), ConfigError);
}

TEST_CASE("validate reports every violation with 1-based indices") {
    const CodingMatrix broken = from_rows({{1, 1}, {1, 1}, {0, 0}});
    const ValidityReport report = validate(broken);
    CHECK_FALSE(report.ok());
    CHECK(count_kind(report, ValidityIssue::Kind::duplicate_rows) == 1);
    CHECK(count_kind(report, ValidityIssue::Kind::column_missing_negative) == 2);
    CHECK(count_kind(report, ValidityIssue::Kind::zero_row) == 1);
    CHECK(report.to_string().find("rows 1 and 2") != std::string::npos);
    CHECK(report.to_string().find("row 3 is entirely zero") != std::string::npos);

    const CodingMatrix negatives = from_rows({{-1, -1}, {-1, -1}});
    CHECK(count_kind(validate(negatives), ValidityIssue::Kind::column_missing_positive) == 2);
}

TEST_CASE("pair columns are canonical regardless of argument order") {
    const ColumnSpec a = pair_column(1, 3, 4);
    const ColumnSpec b = pair_column(3, 1, 4);
    CHECK(a.entries == std::vector<std::int8_t>{1, 0, -1, 0});
    CHECK(a.entries == b.entries);
    CHECK_THROWS_AS(pair_column(2, 2, 4), ConfigError);
    CHECK_THROWS_AS(pair_column(0, 2, 4), ConfigError);
    CHECK_THROWS_AS(pair_column(1, 5, 4), ConfigError);
}

TEST_CASE("bipartition equality ignores a global sign flip") {
    const std::vector<std::int8_t> a{1, -1, 0, 1};
    const std::vector<std::int8_t> flipped{-1, 1, 0, -1};
    const std::vector<std::int8_t> other{1, -1, 0, -1};
    const std::vector<std::int8_t> shorter{1, -1, 0};
    CHECK(same_bipartition(a, a));
    CHECK(same_bipartition(a, flipped));
    CHECK_FALSE(same_bipartition(a, other));
    CHECK_FALSE(same_bipartition(a, shorter));
}

TEST_CASE("column membership and appends") {
    CodingMatrix m = make_one_vs_all(3);
    ColumnSpec column = pair_column(1, 2, 3);
    CHECK_FALSE(contains_column(m, column));
    m = append_column(m, column);
    CHECK(m.length() == 4);
    CHECK(contains_column(m, column));

    ColumnSpec flipped = column;
    for (auto& e : flipped.entries) e = static_cast<std::int8_t>(-e);
    CHECK(contains_column(m, flipped));

    // duplicates are allowed on append, invalid shapes and payloads are not
    CHECK(append_column(m, column).length() == 5);
    CHECK_THROWS_AS(append_column(m, pair_column(1, 2, 4)), ConfigError);
    ColumnSpec one_sided;
    one_sided.entries = {1, 1, 0};
    CHECK_THROWS_AS(append_column(m, one_sided), ConfigError);
    ColumnSpec out_of_range;
    out_of_range.entries = {2, -1, 0};
    CHECK_THROWS_AS(append_column(m, out_of_range), ConfigError);
}

TEST_CASE("coding matrices survive a text round-trip") {
    const CodingMatrix m = make_random_ternary(4, 7, 0.3, 2024);
    std::ostringstream out;
    write_coding(out, m);
    std::istringstream in(out.str());
    CHECK(read_coding(in, "buffer") == m);

    std::istringstream bad_header("x 3\n");
    CHECK_THROWS_WITH_AS(read_coding(bad_header, "buffer"), doctest::Contains("header"),
                         DataError);
    std::istringstream bad_entry("2 2\n1 -1\n2 1\n");
    CHECK_THROWS_WITH_AS(read_coding(bad_entry, "buffer"), doctest::Contains("row 2"), DataError);
    std::istringstream truncated("2 2\n1 -1\n");
    CHECK_THROWS_AS(read_coding(truncated, "buffer"), DataError);
}
