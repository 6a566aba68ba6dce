#include <cmath>
#include <sstream>

#include "doctest.h"
#include "sspred/csv_io.hpp"
#include "sspred/errors.hpp"
#include "sspred/nn_math.hpp"
#include "sspred/ssp_core.hpp"

using namespace sspred;

namespace {

Profile on_grid(Month m, const DepthSchedule& sched, nn::Rng& rng) {
    std::vector<Sample> s;
    for (double d : sched.levels()) s.push_back({d, rng.uniform(1450.0, 1550.0)});
    return Profile(m, s);
}

}  // namespace

TEST_CASE("month parse and format") {
    Month m = Month::parse("2017-01");
    CHECK(m.year() == 2017);
    CHECK(m.month_of_year() == 1);
    CHECK((m + 11).str() == "2017-12");
    CHECK((m + 12).str() == "2018-01");
    CHECK((m - 1).str() == "2016-12");
    CHECK_THROWS_AS(Month::parse("2017-13"), ValidationError);
    CHECK_THROWS_AS(Month::parse("2017/01"), ValidationError);
    CHECK_THROWS_AS(Month::parse("17-01"), ValidationError);
}

TEST_CASE("paper58 schedule") {
    DepthSchedule s = DepthSchedule::paper58();
    REQUIRE(s.size() == 58);
    CHECK(s[0] == 0.0);
    CHECK(s.last() == 1975.0);
    for (std::size_t j = 1; j < s.size(); ++j) CHECK(s[j] > s[j - 1]);
    // 3 + 17 + 14 + 16 + 7 + 1 levels; nothing between 460 and 500
    CHECK(s[2] == 10.0);
    CHECK(s[3] == 20.0);
    CHECK(s[19] == 180.0);
    CHECK(s[33] == 460.0);
    CHECK(s[34] == 500.0);
    CHECK(s[49] == 1250.0);
    CHECK(s[50] == 1300.0);
    CHECK(s[56] == 1900.0);
}

TEST_CASE("custom schedules") {
    CHECK(DepthSchedule::custom({0, 100}).size() == 2);
    CHECK_THROWS_AS(DepthSchedule::custom({100, 50}), ValidationError);
    CHECK_THROWS_AS(DepthSchedule::custom({0, -5}), ValidationError);
    CHECK_THROWS_AS(DepthSchedule::custom({0, 10, 10}), ValidationError);
    CHECK_THROWS_AS(DepthSchedule::custom({}), ValidationError);
}

TEST_CASE("profile invariants") {
    Month m = Month::parse("2020-05");
    CHECK_THROWS_AS(Profile(m, {{0, 1500}}), ValidationError);
    CHECK_THROWS_AS(Profile(m, {{0, 1500}, {0, 1501}}), ValidationError);
    CHECK_THROWS_AS(Profile(m, {{-1, 1500}, {5, 1501}}), ValidationError);
    CHECK_THROWS_AS(Profile(m, {{0, 1200}, {5, 1501}}), ValidationError);
    CHECK_THROWS_AS(Profile(m, {{0, NAN}, {5, 1501}}), ValidationError);
    CHECK_NOTHROW(Profile(m, {{0, 1200}, {5, 1501}}, SpeedBand{1000, 2000}));
}

TEST_CASE("layer_profile") {
    Month m{0};
    SUBCASE("linear midpoint") {
        Profile p(m, {{0, 1500}, {10, 1510}});
        Eigen::VectorXd v = layer_profile(p, DepthSchedule::custom({0, 5, 10}));
        CHECK(v[0] == 1500.0);
        CHECK(v[1] == doctest::Approx(1505.0).epsilon(1e-15));
        CHECK(v[2] == 1510.0);
    }
    SUBCASE("hand interpolation at 1975 m") {
        Profile p(m, {{0, 1500}, {2000, 1480}});
        Eigen::VectorXd v = layer_profile(p, DepthSchedule::paper58());
        REQUIRE(v.size() == 58);
        CHECK(v[57] == doctest::Approx(1480.25).epsilon(1e-12));
    }
    SUBCASE("identity on grid, random profiles") {
        nn::Rng rng(7);
        const auto sched = DepthSchedule::paper58();
        for (int trial = 0; trial < 20; ++trial) {
            Profile p = on_grid(m, sched, rng);
            Eigen::VectorXd v = layer_profile(p, sched);
            for (std::size_t j = 0; j < sched.size(); ++j) CHECK(v[static_cast<Eigen::Index>(j)] == p.samples()[j].speed_mps);
        }
    }
    SUBCASE("out of range unless clamped") {
        Profile p(m, {{2, 1500}, {3000, 1480}});
        CHECK_THROWS_AS(layer_profile(p, DepthSchedule::paper58()), OutOfRangeError);
        Eigen::VectorXd v = layer_profile(p, DepthSchedule::paper58(), true);
        CHECK(v[0] == 1500.0);
    }
}

TEST_CASE("assemble_series") {
    const auto sched = DepthSchedule::paper58();
    nn::Rng rng(3);
    Month start = Month::parse("2017-01");
    std::vector<Profile> profiles;
    for (int i = 0; i < 60; ++i) profiles.push_back(on_grid(start + i, sched, rng));
    LayeredSeries s = assemble_series(profiles, sched);
    CHECK(s.levels() == 58);
    CHECK(s.months() == 60);
    CHECK(s.end().str() == "2021-12");

    std::vector<Profile> one{profiles[0]};
    CHECK(assemble_series(one, sched).months() == 1);

    std::vector<Profile> gap{profiles[0], profiles[2]};
    CHECK_THROWS_AS(assemble_series(gap, sched), ChronologyError);
    std::vector<Profile> dup{profiles[0], profiles[0]};
    CHECK_THROWS_AS(assemble_series(dup, sched), ChronologyError);
}

TEST_CASE("split_train_validation") {
    const auto sched = DepthSchedule::custom({0, 10});
    Eigen::MatrixXd values(2, 60);
    for (int i = 0; i < 60; ++i) values.col(i).setConstant(1500.0 + i);
    LayeredSeries s(sched, Month::parse("2017-01"), values);

    SUBCASE("four-cycle window before 2021-01") {
        auto tv = split_train_validation(s, {12, 4, Month::parse("2021-01")});
        REQUIRE(tv.train.cols() == 48);
        CHECK(tv.train(0, 0) == 1500.0);   // column 1
        CHECK(tv.train(0, 47) == 1547.0);  // column 48
        CHECK(tv.validation[0] == 1548.0);  // column 49
    }
    SUBCASE("minimal window") {
        auto tv = split_train_validation(s, {12, 1, Month::parse("2018-01")});
        CHECK(tv.train.cols() == 12);
        CHECK(tv.train(1, 11) + 1.0 == tv.validation[1]);
    }
    SUBCASE("target beyond the end") {
        CHECK_THROWS_AS(split_train_validation(s, {12, 1, Month::parse("2022-01")}), WindowError);
        CHECK(split_train(s, {12, 1, Month::parse("2022-01")}).cols() == 12);
    }
    SUBCASE("insufficient history names the months") {
        try {
            split_train(s, {12, 2, Month::parse("2018-01")});
            FAIL("expected WindowError");
        } catch (const WindowError& e) {
            CHECK(std::string(e.what()).find("2016-01..2016-12") != std::string::npos);
        }
    }
    SUBCASE("property: nC training columns, last precedes V") {
        for (int n = 1; n <= 4; ++n) {
            for (int t = 12 * n; t < 60; t += 7) {
                auto tv = split_train_validation(s, {12, n, s.start() + t});
                CHECK(tv.train.cols() == 12 * n);
                CHECK(tv.train(0, tv.train.cols() - 1) + 1.0 == tv.validation[0]);
            }
        }
    }
}

TEST_CASE("normalization") {
    SUBCASE("endpoints") {
        Eigen::MatrixXd t(1, 2);
        t << 1500, 1510;
        Eigen::MatrixXd n = apply_norm(t, fit_norm(t));
        CHECK(n(0, 0) == 0.0);
        CHECK(n(0, 1) == 1.0);
        Eigen::VectorXd v(1);
        v << 1.0;
        CHECK(denorm(v, fit_norm(t))[0] == 1510.0);
    }
    SUBCASE("constant row") {
        Eigen::MatrixXd t(1, 3);
        t << 1480, 1480, 1480;
        NormParams p = fit_norm(t);
        Eigen::MatrixXd n = apply_norm(t, p);
        CHECK((n.array() == 0.5).all());
        CHECK(denorm(Eigen::VectorXd(n.col(0)), p)[0] == 1480.0);
    }
    SUBCASE("round trip on random matrices") {
        nn::Rng rng(11);
        for (int trial = 0; trial < 50; ++trial) {
            Eigen::MatrixXd t(6, 10);
            for (Eigen::Index j = 0; j < t.rows(); ++j)
                for (Eigen::Index i = 0; i < t.cols(); ++i) t(j, i) = rng.uniform(1400, 1600);
            t.row(2).setConstant(1490.0);
            NormParams p = fit_norm(t);
            Eigen::MatrixXd back = denorm_matrix(apply_norm(t, p), p);
            CHECK((back - t).cwiseAbs().maxCoeff() < 1e-9);
        }
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(fit_norm(Eigen::MatrixXd(0, 0)), DimensionError);
        Eigen::MatrixXd t = Eigen::MatrixXd::Constant(2, 2, 1500.0);
        CHECK_THROWS_AS(denorm(Eigen::VectorXd(Eigen::VectorXd::Zero(3)), fit_norm(t)), DimensionError);
    }
}

TEST_CASE("interpolate_full_depth") {
    SUBCASE("passthrough on grid spacing") {
        auto sched = DepthSchedule::custom({0, 5, 10});
        Eigen::VectorXd v(3);
        v << 1500, 1503, 1511;
        Profile p = interpolate_full_depth(v, sched, 5.0);
        REQUIRE(p.samples().size() == 3);
        for (int j = 0; j < 3; ++j) CHECK(p.samples()[static_cast<std::size_t>(j)].speed_mps == v[j]);
    }
    SUBCASE("midpoint") {
        Eigen::VectorXd v(2);
        v << 1500, 1510;
        Profile p = interpolate_full_depth(v, DepthSchedule::custom({0, 10}), 5.0);
        REQUIRE(p.samples().size() == 3);
        CHECK(p.samples()[1] == Sample{5.0, 1505.0});
    }
    SUBCASE("paper58 at 1 m") {
        Eigen::VectorXd v = Eigen::VectorXd::LinSpaced(58, 1540, 1480);
        Profile p = interpolate_full_depth(v, DepthSchedule::paper58(), 1.0);
        CHECK(p.samples().size() == 1975 / 1 + 1);
        CHECK(p.samples().back().depth_m == 1975.0);
    }
    SUBCASE("interpolate after layering is identity at schedule depths") {
        nn::Rng rng(5);
        const auto sched = DepthSchedule::paper58();
        for (int trial = 0; trial < 10; ++trial) {
            std::vector<Sample> raw;
            double d = 0.0;
            while (d < 2100.0) {
                raw.push_back({d, rng.uniform(1470, 1545)});
                d += rng.uniform(0.5, 40.0);
            }
            Profile p(Month{0}, raw);
            Eigen::VectorXd layered = layer_profile(p, sched);
            Profile dense = interpolate_full_depth(layered, sched, 1.0);
            for (std::size_t j = 0; j < sched.size(); ++j) {
                CHECK(dense.speed_at(sched[j]) == layered[static_cast<Eigen::Index>(j)]);
            }
        }
    }
    SUBCASE("dimension mismatch") {
        CHECK_THROWS_AS(interpolate_full_depth(Eigen::VectorXd::Zero(3), DepthSchedule::custom({0, 10}), 1.0),
                        DimensionError);
    }
}

TEST_CASE("profile csv") {
    const std::string text =
        "month,depth_m,speed_mps\n"
        "2017-01,0.000000,1540.123456\n"
        "2017-01,10.000000,1538.000001\n"
        "2017-02,0.000000,1541.000000\n"
        "2017-02,10.000000,1539.500000\n";
    SUBCASE("bit-exact round trip") {
        std::istringstream in(text);
        auto profiles = read_profiles_csv(in);
        REQUIRE(profiles.size() == 2);
        std::ostringstream out;
        write_profiles_csv(out, profiles);
        CHECK(out.str() == text);
    }
    SUBCASE("writer output re-reads to the same text") {
        nn::Rng rng(9);
        std::vector<Profile> ps;
        for (int i = 0; i < 5; ++i) {
            ps.emplace_back(Month{24000 + i}, std::vector<Sample>{{0, rng.uniform(1480, 1550)},
                                                                   {rng.uniform(1, 50), rng.uniform(1480, 1550)}});
        }
        std::ostringstream first;
        write_profiles_csv(first, ps);
        std::istringstream in(first.str());
        std::ostringstream second;
        write_profiles_csv(second, read_profiles_csv(in));
        CHECK(first.str() == second.str());
    }
    SUBCASE("errors carry line numbers") {
        std::istringstream bad("month,depth_m,speed_mps\n2017-01,0,1500\n2017-01,abc,1500\n");
        try {
            read_profiles_csv(bad);
            FAIL("expected error");
        } catch (const ValidationError& e) {
            CHECK(std::string(e.what()).find("line 3") != std::string::npos);
        }
        std::istringstream empty("");
        CHECK_THROWS_AS(read_profiles_csv(empty), ValidationError);
        std::istringstream dup(
            "month,depth_m,speed_mps\n2017-01,0,1500\n2017-01,5,1500\n2017-02,0,1500\n2017-02,5,1500\n"
            "2017-01,0,1500\n2017-01,5,1500\n");
        try {
            read_profiles_csv(dup);
            FAIL("expected error");
        } catch (const ChronologyError& e) {
            CHECK(std::string(e.what()).find("2017-01") != std::string::npos);
        }
    }
    SUBCASE("layered csv") {
        auto sched = DepthSchedule::custom({0, 5, 10});
        Eigen::VectorXd v(3);
        v << 1500.25, 1501.5, 1502.125;
        std::ostringstream out;
        write_layered_csv(out, v, sched);
        CHECK(out.str() == "layer_index,depth_m,speed_mps\n0,0.000000,1500.250000\n1,5.000000,1501.500000\n"
                           "2,10.000000,1502.125000\n");
        std::istringstream in(out.str());
        LayeredVector back = read_layered_csv(in);
        CHECK(back.speeds == v);
    }
}
