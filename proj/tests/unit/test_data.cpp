#include <doctest.h>

#include <sstream>

#include "helpers.hpp"
#include "hv/data.hpp"

using namespace hv;
using namespace hv::data;
using hvtest::TempDir;
using hvtest::write_file;

namespace {

// Independent calendar enumeration (own leap rule), used as the oracle for
// day counts and date sequences.
struct SimpleCal {
    int y, m, d;
    static bool leap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }
    static int mdays(int y, int m) {
        static const int t[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
        return m == 2 && leap(y) ? 29 : t[m - 1];
    }
    void advance() {
        if (++d > mdays(y, m)) {
            d = 1;
            if (++m > 12) {
                m = 1;
                ++y;
            }
        }
    }
    std::string str() const {
        char buf[16];
        std::snprintf(buf, sizeof buf, "%04d-%02d-%02d", y, m, d);
        return buf;
    }
};

std::string meta_csv(int n) {
    std::string s = "station_id,x,y\n";
    for (int i = 1; i <= n; ++i)
        s += "s" + std::to_string(i) + "," + std::to_string(i) + ".5,2.5\n";
    return s;
}

StationSeries tiny_series(const std::string& body, int n = 2) {
    TempDir dir("data");
    write_file(dir.file("series.csv"), body);
    write_file(dir.file("stations.csv"), meta_csv(n));
    return load_series(dir.file("series.csv"), dir.file("stations.csv"));
}

} // namespace

TEST_CASE("load: blank cell becomes exactly one missing entry") {
    auto s = tiny_series("date,s1,s2\n"
                         "2001-01-01,1.0,2.0\n"
                         "2001-01-02,,2.5\n"
                         "2001-01-03,1.5,3.0\n");
    int missing = 0;
    for (int t = 0; t < s.steps(); ++t)
        for (int i = 0; i < s.stations(); ++i) missing += s.is_missing(t, i);
    CHECK(missing == 1);
    CHECK(s.is_missing(1, 0));
    CHECK(s.values.at(2, 1) == 3.0);
}

TEST_CASE("load: forty years of daily rows give the enumerated day count") {
    // Oracle: enumerate 1981-01-01 .. 2020-12-31 by hand.
    SimpleCal cal{1981, 1, 1};
    std::ostringstream csv;
    csv << "date,s1,s2,s3,s4,s5,s6\n";
    long days = 0;
    while (cal.y <= 2020) {
        csv << cal.str();
        for (int i = 0; i < 6; ++i) csv << ',' << (days % 17) * 0.25 + i;
        csv << '\n';
        ++days;
        cal.advance();
    }
    CHECK(days == 14610); // enumeration oracle, frozen
    auto s = tiny_series(csv.str(), 6);
    CHECK(s.values.rows == 14610);
    CHECK(s.values.cols == 6);
}

TEST_CASE("load: series column without a metadata row is an error") {
    TempDir dir("data");
    write_file(dir.file("series.csv"), "date,s1,s2,s3,s4,s5,s6\n"
                                       "2001-01-01,1,2,3,4,5,6\n");
    write_file(dir.file("stations.csv"), meta_csv(5));
    CHECK_THROWS_AS(load_series(dir.file("series.csv"), dir.file("stations.csv")), DataError);
}

TEST_CASE("load: malformed dates and non-numeric cells name the location") {
    CHECK_THROWS_WITH_AS(tiny_series("date,s1,s2\n2001-13-01,1,2\n"),
                         doctest::Contains("malformed date"), DataError);
    CHECK_THROWS_WITH_AS(tiny_series("date,s1,s2\n2001-01-01,1,abc\n"),
                         doctest::Contains("row 2"), DataError);
    CHECK_THROWS_WITH_AS(tiny_series("date,s1,s2\n2001-01-02,1,2\n2001-01-02,1,2\n"),
                         doctest::Contains("strictly increasing"), DataError);
}

TEST_CASE("load: columns are reordered to metadata order") {
    auto s = tiny_series("date,s2,s1\n2001-01-01,20.0,10.0\n");
    CHECK(s.station_ids[0] == "s1");
    CHECK(s.values.at(0, 0) == 10.0);
    CHECK(s.values.at(0, 1) == 20.0);
}

TEST_CASE("impute: equal-weight neighbor average") {
    auto s = tiny_series("date,s1,s2\n"
                         "1999-05-01,2.0,1.0\n"
                         "2000-05-01,,1.0\n"
                         "2001-05-01,4.0,1.0\n");
    auto imputed = impute_missing(s);
    CHECK(imputed.values.at(1, 0) == doctest::Approx(3.0));
    CHECK_FALSE(imputed.any_missing());
}

TEST_CASE("impute: single-neighbor fallback uses weight 1") {
    auto s = tiny_series("date,s1,s2\n"
                         "1981-05-01,,1.0\n"
                         "1982-05-01,1.7,1.0\n");
    auto imputed = impute_missing(s);
    CHECK(imputed.values.at(0, 0) == doctest::Approx(1.7));
}

TEST_CASE("impute: a series without gaps returns bit-identical") {
    auto s = tiny_series("date,s1,s2\n"
                         "2001-01-01,1.25,2.5\n"
                         "2001-01-02,1.5,2.75\n");
    auto imputed = impute_missing(s);
    CHECK(bit_equal(imputed.values, s.values));
    CHECK(imputed.timestamps == s.timestamps);
}

TEST_CASE("impute: cell with no neighbor year is an error naming the cell") {
    auto s = tiny_series("date,s1,s2\n"
                         "2000-05-01,,1.0\n"
                         "2000-05-02,2.0,1.0\n");
    CHECK_THROWS_WITH_AS(impute_missing(s), doctest::Contains("2000-05-01"), DataError);
}

TEST_CASE("impute: Feb 29 falls back to Feb 28 in non-leap neighbor years") {
    auto s = tiny_series("date,s1,s2\n"
                         "1999-02-28,5.0,1.0\n"
                         "2000-02-29,,1.0\n"
                         "2001-02-28,7.0,1.0\n");
    auto imputed = impute_missing(s);
    CHECK(imputed.values.at(1, 0) == doctest::Approx(6.0));
}

TEST_CASE("impute: observed values are never altered") {
    Rng rng(9);
    std::ostringstream csv;
    csv << "date,s1,s2\n";
    SimpleCal cal{1999, 1, 1};
    for (int t = 0; t < 900; ++t) {
        csv << cal.str();
        for (int i = 0; i < 2; ++i) {
            if (t > 300 && t < 500 && rng.uniform() < 0.1)
                csv << ',';
            else
                csv << ',' << rng.uniform(0.0, 5.0);
        }
        csv << '\n';
        cal.advance();
    }
    auto s = tiny_series(csv.str());
    auto imputed = impute_missing(s);
    for (int t = 0; t < s.steps(); ++t)
        for (int i = 0; i < 2; ++i)
            if (!s.is_missing(t, i)) CHECK(imputed.values.at(t, i) == s.values.at(t, i));
}

namespace {
StationSeries synth_series(int T, int n = 2) {
    std::ostringstream csv;
    csv << "date";
    for (int i = 1; i <= n; ++i) csv << ",s" << i;
    csv << '\n';
    SimpleCal cal{2000, 1, 1};
    Rng rng(17);
    for (int t = 0; t < T; ++t) {
        csv << cal.str();
        for (int i = 0; i < n; ++i) csv << ',' << rng.uniform(0.0, 4.0);
        csv << '\n';
        cal.advance();
    }
    return tiny_series(csv.str(), n);
}
} // namespace

TEST_CASE("split: boundaries floor(T*0.7) and floor(T*0.8)") {
    auto s = synth_series(100);
    auto sp = chronological_split(s);
    CHECK(sp.train.steps() == 70);
    CHECK(sp.val.steps() == 10);
    CHECK(sp.test.steps() == 20);

    auto s10 = synth_series(10);
    auto sp10 = chronological_split(s10);
    CHECK(sp10.train.steps() == 7);
    CHECK(sp10.val.steps() == 1);
    CHECK(sp10.test.steps() == 2);
}

TEST_CASE("split: zero or negative fractions rejected") {
    auto s = synth_series(50);
    CHECK_THROWS_AS(chronological_split(s, {0.5, 0.5, 0.0}), DataError);
    CHECK_THROWS_AS(chronological_split(s, {1.2, -0.1, -0.1}), DataError);
    CHECK_THROWS_AS(chronological_split(s, {0.5, 0.3, 0.3}), DataError);
}

TEST_CASE("split: segments are disjoint and concatenate to the original") {
    auto s = synth_series(101); // deliberately not divisible
    auto sp = chronological_split(s);
    CHECK(sp.train.steps() + sp.val.steps() + sp.test.steps() == s.steps());
    CHECK(sp.val.timestamps.front().serial() == sp.train.timestamps.back().serial() + 1);
    CHECK(sp.test.timestamps.front().serial() == sp.val.timestamps.back().serial() + 1);
    int t = 0;
    for (const auto* seg : {&sp.train, &sp.val, &sp.test})
        for (int r = 0; r < seg->steps(); ++r, ++t)
            for (int i = 0; i < s.stations(); ++i)
                CHECK(seg->values.at(r, i) == s.values.at(t, i));
}

TEST_CASE("normalizer: two-point station and round trip") {
    auto s = tiny_series("date,s1,s2\n"
                         "2001-01-01,1.0,5.0\n"
                         "2001-01-02,3.0,9.0\n");
    auto stats = fit_normalizer(s);
    CHECK(stats.mean[0] == doctest::Approx(2.0));
    CHECK(stats.std_dev[0] == doctest::Approx(1.0)); // population std
    Matrix norm = apply_normalizer(s.values, stats);
    CHECK(norm.at(1, 0) == doctest::Approx(1.0));

    Rng rng(21);
    Matrix random = Matrix::uniform(40, 2, rng, -3.0, 12.0);
    Matrix round = invert_normalizer(apply_normalizer(random, stats), stats);
    CHECK(max_abs_diff(round, random) < 1e-12);
}

TEST_CASE("normalizer: constant station rejected; normalized stats are clean") {
    auto s = tiny_series("date,s1,s2\n"
                         "2001-01-01,2.0,1.0\n"
                         "2001-01-02,2.0,3.0\n");
    CHECK_THROWS_AS(fit_normalizer(s), DataError);

    auto big = synth_series(500, 3);
    auto stats = fit_normalizer(big);
    Matrix norm = apply_normalizer(big.values, stats);
    for (int i = 0; i < 3; ++i) {
        double mu = 0.0;
        for (int t = 0; t < norm.rows; ++t) mu += norm.at(t, i);
        mu /= norm.rows;
        double var = 0.0;
        for (int t = 0; t < norm.rows; ++t) var += (norm.at(t, i) - mu) * (norm.at(t, i) - mu);
        var /= norm.rows;
        CHECK(std::fabs(mu) < 1e-9);
        CHECK(std::fabs(std::sqrt(var) - 1.0) < 1e-9);
    }
}

TEST_CASE("normalizer: global mode shares one mean/std") {
    auto s = synth_series(60, 3);
    auto stats = fit_normalizer(s, NormMode::Global);
    CHECK(stats.mean[0] == stats.mean[2]);
    CHECK(stats.std_dev[0] == stats.std_dev[2]);
}

TEST_CASE("windows: counts and boundaries") {
    auto s = synth_series(34);
    auto ds = make_windows(s, 12, 12);
    CHECK(ds.samples == 11); // 34 - 24 + 1, enumerated by hand

    auto one = make_windows(synth_series(24), 12, 12);
    CHECK(one.samples == 1);

    CHECK_THROWS_AS(make_windows(synth_series(23), 12, 12), DataError);
}

TEST_CASE("windows: values are copied exactly and target follows input") {
    auto s = synth_series(40);
    auto ds = make_windows(s, 12, 12);
    for (int k = 0; k < ds.samples; ++k) {
        for (int t = 0; t < 12; ++t)
            for (int i = 0; i < 2; ++i) {
                CHECK(ds.input(k, t, i) == s.values.at(k + t, i));
                CHECK(ds.target(k, t, i) == s.values.at(k + 12 + t, i));
            }
    }
}

TEST_CASE("series csv round trip preserves values and gaps") {
    auto s = tiny_series("date,s1,s2\n"
                         "2001-01-01,1.25,\n"
                         "2001-01-02,1.5,2.75\n");
    TempDir dir("roundtrip");
    write_series_csv(s, dir.file("series.csv"));
    write_station_meta_csv(s, dir.file("stations.csv"));
    auto back = load_series(dir.file("series.csv"), dir.file("stations.csv"));
    CHECK(back.is_missing(0, 1));
    CHECK(back.values.at(1, 1) == doctest::Approx(2.75));
    CHECK(back.station_ids == s.station_ids);
}
