#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "sspred/csv_io.hpp"
#include "sspred/errors.hpp"
#include "sspred/evalharness.hpp"

using namespace sspred;

namespace {

Hyperparams tiny_hp() {
    Hyperparams hp;
    hp.hidden_size = 6;
    hp.epochs = 60;
    return hp;
}

HarnessConfig tiny_cfg() {
    HarnessConfig cfg;
    cfg.hp = tiny_hp();
    cfg.mlp.hidden = 6;
    cfg.mlp.epochs = 60;
    cfg.step = 5.0;
    return cfg;
}

SynthSpec coarse(SynthSpec s) {
    s.depths = {0, 20, 100, 400, 1000, 1975};
    return s;
}

}  // namespace

TEST_CASE("rmse") {
    CHECK(rmse(Eigen::Vector2d(1, 1), Eigen::Vector2d(0, 0)) == 1.0);
    CHECK(rmse(Eigen::Vector4d(3, 0, 0, 0), Eigen::Vector4d::Zero()) == 1.5);
    CHECK(rmse(Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(1, 2, 3)) == 0.0);
    CHECK_THROWS_AS(rmse(Eigen::Vector2d(1, 1), Eigen::Vector3d(0, 0, 0)), DimensionError);

    nn::Rng rng(4);
    for (int k = 0; k < 50; ++k) {
        Eigen::VectorXd a(9), b(9);
        for (int i = 0; i < 9; ++i) a[i] = rng.uniform(1450, 1550), b[i] = rng.uniform(1450, 1550);
        CHECK(rmse(a, b) == doctest::Approx(rmse(b, a)).epsilon(1e-15));
        const double off = rng.uniform(-3, 3);
        CHECK(rmse(b.array() + off, b) == doctest::Approx(std::abs(off)).epsilon(1e-9));
        CHECK(rmse(a, b) > 0.0);
    }
}

TEST_CASE("rmse_full_depth") {
    const auto sched = DepthSchedule::paper58();
    Eigen::VectorXd a(58);
    for (int j = 0; j < 58; ++j) a[j] = 1500.0 + 0.01 * sched[static_cast<std::size_t>(j)] + std::sin(j);
    CHECK(rmse_layered_full_depth(a, a, sched) == 0.0);
    CHECK(rmse_layered_full_depth(a.array() + 0.5, a, sched) == doctest::Approx(0.5).epsilon(1e-12));

    SUBCASE("matches the layered RMSE when the dense grid is the schedule") {
        const auto uniform = DepthSchedule::custom({0, 25, 50, 75, 100, 125, 150, 175, 200});
        nn::Rng rng(7);
        for (int k = 0; k < 100; ++k) {
            Eigen::VectorXd p(9), t(9);
            for (int i = 0; i < 9; ++i) p[i] = rng.uniform(1480, 1520), t[i] = rng.uniform(1480, 1520);
            CHECK(std::abs(rmse_layered_full_depth(p, t, uniform, 25.0) - rmse(p, t)) < 1e-9);
        }
    }
    SUBCASE("span mismatch") {
        Profile p(Month{}, {{0, 1500}, {100, 1501}});
        Profile q(Month{}, {{0, 1500}, {90, 1501}});
        CHECK_THROWS_AS(rmse_full_depth(p, q), ValidationError);
        Profile r(Month{}, {{5, 1500}, {100, 1501}});
        CHECK_THROWS_AS(rmse_full_depth(r, p), ValidationError);
    }
    SUBCASE("dense grid with a ragged last step") {
        Profile p(Month{}, {{0, 1500}, {10, 1500}});
        Profile q(Month{}, {{0, 1501}, {10, 1501}});
        CHECK(rmse_full_depth(p, q, 3.0) == doctest::Approx(1.0));
    }
}

TEST_CASE("pearson") {
    Eigen::VectorXd a = Eigen::VectorXd::LinSpaced(12, 0, 11);
    CHECK(pearson(a, 2.0 * a.array() + 3.0) == doctest::Approx(1.0));
    CHECK(pearson(a, -a) == doctest::Approx(-1.0));
    CHECK(pearson(a, Eigen::VectorXd::Constant(12, 1.0)) == 0.0);
    CHECK_THROWS_AS(pearson(a, Eigen::VectorXd::Zero(3)), DimensionError);
}

TEST_CASE("make_report") {
    const auto sched = DepthSchedule::custom({0, 10, 20});
    RmseReport r = make_report("mean", Eigen::Vector3d(1, 2, 3), Eigen::Vector3d(1, 2, 4), sched,
                               Month::parse("2021-10"), "n=4", 1.0);
    CHECK(r.per_depth_abs_err.size() == 3);
    CHECK(r.per_depth_abs_err[2] == std::pair<double, double>(20.0, 1.0));
    CHECK(r.aggregate_rmse > 0.0);
}

TEST_CASE("synth_generate") {
    SUBCASE("defaults") {
        const auto profiles = synth_generate(SynthSpec{});
        CHECK(profiles.size() == 60);
        CHECK(profiles.front().month().str() == "2017-01");
        CHECK(profiles.back().month().str() == "2021-12");
        CHECK(profiles.front().samples().size() == 58);
        CHECK(profiles.front().max_depth() == 1975.0);
    }
    SUBCASE("range over seeds") {
        for (std::uint64_t s = 1; s <= 20; ++s) {
            SynthSpec spec;
            spec.seed = s;
            for (const auto& p : synth_generate(spec)) {
                for (const auto& smp : p.samples()) CHECK((smp.speed_mps >= 1300 && smp.speed_mps <= 1700));
            }
        }
    }
    SUBCASE("deterministic per seed") {
        SynthSpec spec;
        spec.seed = 9;
        const auto a = synth_generate(spec);
        const auto b = synth_generate(spec);
        for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].samples() == b[i].samples());
        spec.seed = 10;
        CHECK(synth_generate(spec)[5].samples() != a[5].samples());
    }
    SUBCASE("exactly periodic without trend and noise") {
        SynthSpec spec = SynthSpec::sinusoidal_ocean(3);
        spec.months = 40;
        const auto p = synth_generate(spec);
        for (std::size_t i = 0; i + 12 < p.size(); ++i) CHECK(p[i].samples() == p[i + 12].samples());
        CHECK(p[0].samples() != p[6].samples());
    }
    SUBCASE("constant ocean") {
        const auto p = synth_generate(SynthSpec::constant_ocean());
        for (const auto& q : p) {
            for (const auto& smp : q.samples()) CHECK(smp.speed_mps == 1500.0);
        }
    }
    SUBCASE("zero amplitude, trend and noise repeats one profile") {
        SynthSpec spec;
        spec.seasonal_amplitude = 0.0;
        spec.trend_per_year = 0.0;
        spec.noise_sigma = 0.0;
        const auto p = synth_generate(spec);
        for (const auto& q : p) CHECK(q.samples() == p[0].samples());
        CHECK(p[0].samples()[0] != p[0].samples()[40]);
    }
    SUBCASE("mixed layer sits above a sound channel") {
        SynthSpec spec = SynthSpec::constant_ocean();
        spec.vertical_structure = 1.0;
        const auto p = synth_generate(spec)[0];
        CHECK(p.speed_at(0) < p.speed_at(50));
        CHECK(p.speed_at(1100) < p.speed_at(300));
        CHECK(p.speed_at(1100) < p.speed_at(1975));
    }
    SUBCASE("validation") {
        SynthSpec spec;
        spec.months = 12;
        CHECK_THROWS_AS(synth_generate(spec), ValidationError);
        spec.months = 13;
        CHECK(synth_generate(spec).size() == 13);
        spec.noise_sigma = -1;
        CHECK_THROWS_AS(synth_generate(spec), ValidationError);
        spec.noise_sigma = 0.2;
        spec.depths = {5, 10};
        CHECK_THROWS_AS(synth_generate(spec), ValidationError);
    }
}

TEST_CASE("experiments on a coarse synthetic ocean") {
    const auto sched = DepthSchedule::custom(coarse({}).depths);
    SynthSpec spec = coarse(SynthSpec{});
    const LayeredSeries series = assemble_series(synth_generate(spec), sched);
    const HarnessConfig cfg = [] {
        HarnessConfig c = tiny_cfg();
        c.poly_degree = 3;
        return c;
    }();

    SUBCASE("window ablation, one row per (target, n)") {
        auto rows = experiment_window_ablation(series, {Month::parse("2021-01")}, {2}, cfg);
        REQUIRE(rows.size() == 1);
        CHECK(rows[0].n_cycles == 2);
        CHECK(rows[0].rmse > 0.0);
        CHECK(ablation_csv(rows) == "target,n_cycles,rmse_mps\n2021-01,2," + fmt6(rows[0].rmse) + "\n");
        CHECK_THROWS_AS(experiment_window_ablation(series, {Month::parse("2021-01")}, {5}, cfg), WindowError);
    }
    SUBCASE("compare has four methods in table order") {
        const CompareTable t = experiment_compare(series, Month::parse("2021-10"), cfg);
        REQUIRE(t.rows.size() == 4);
        CHECK(t.rows[0].method == "H-LSTM");
        CHECK(t.rows[1].method == "polynomial");
        CHECK(t.rows[2].method == "mean");
        CHECK(t.rows[3].method == "BP");
        CHECK(t.row("mean").detail == "n=4 mode=same_month");
        for (const auto& r : t.rows) CHECK(r.prediction.size() == 6);
        CHECK_THROWS_AS(t.row("oracle"), ValidationError);
        const std::string csv = compare_csv(t);
        CHECK(csv.rfind("method,detail,rmse_mps\nH-LSTM,", 0) == 0);
        CHECK(compare_svg(t, sched, 5.0).find("<polyline") != std::string::npos);
    }
    SUBCASE("cycle tracking") {
        const CycleTable t = experiment_cycle_tracking(series, Month::parse("2021-01"), {1, 2}, 12, cfg);
        REQUIRE(t.traces.size() == 2);
        CHECK(t.traces[0].depth_m == 20.0);
        CHECK(t.traces[0].truth.size() == 12);
        CHECK_THROWS_AS(experiment_cycle_tracking(series, Month::parse("2021-01"), {6}, 12, cfg), OutOfRangeError);
        CHECK_THROWS_AS(experiment_cycle_tracking(series, Month::parse("2021-06"), {1}, 12, cfg), WindowError);
        std::istringstream csv(cycle_csv(t));
        std::string line;
        int lines = 0;
        while (std::getline(csv, line)) ++lines;
        CHECK(lines == 1 + 24);
    }
}

TEST_CASE("monthly experiment shape on a constant ocean") {
    SynthSpec spec = coarse(SynthSpec::constant_ocean());
    const auto sched = DepthSchedule::custom(spec.depths);
    const LayeredSeries series = assemble_series(synth_generate(spec), sched);
    HarnessConfig cfg = tiny_cfg();
    cfg.hp.epochs = 5;
    const MonthlyTable t = experiment_monthly(series, 2021, cfg);
    REQUIRE(t.rows.size() == 12);
    CHECK(t.rows[0].rolling_rmse == t.rows[0].fixed_rmse);
    for (const auto& r : t.rows) {
        CHECK(r.rolling_rmse < 0.1);
        CHECK(r.fixed_rmse < 0.1);
    }
    const std::string csv = monthly_csv(t);
    CHECK(csv.find("\nmean,") != std::string::npos);
    CHECK_THROWS_AS(experiment_monthly(series, 2022, cfg), WindowError);
}

TEST_CASE("reports") {
    CHECK(report_stem("compare", "2021-10", 7) == "compare_2021-10_7");
    SvgPlot plot{"a & b", "x", "y", false, {{"s", {0, 1, 2}, {1, 3, 2}}}};
    const std::string svg = render_svg(plot);
    CHECK(svg.rfind("<svg", 0) == 0);
    CHECK(svg.find("a &amp; b") != std::string::npos);
    CHECK(svg == render_svg(plot));
    plot.series[0].y.pop_back();
    CHECK_THROWS_AS(render_svg(plot), DimensionError);

    const auto dir = std::filesystem::temp_directory_path() / "sspred_reports";
    std::filesystem::remove_all(dir);
    auto [csv, svgp] = write_report(dir, "x_2021-01_1", "a,b\n", svg);
    CHECK(std::filesystem::exists(csv));
    CHECK(svgp.filename() == "x_2021-01_1.svg");
    std::filesystem::remove_all(dir);
}

TEST_CASE("monthly RMSE stays under three noise sigmas") {
    SynthSpec spec;
    spec.depths = {0, 10, 30, 60, 100, 200, 400, 700, 1000, 1500, 1975};
    const LayeredSeries series = assemble_series(synth_generate(spec), DepthSchedule::custom(spec.depths));
    HarnessConfig cfg;
    cfg.hp.hidden_size = 16;
    const MonthlyTable t = experiment_monthly(series, 2021, cfg);
    CHECK(t.mean_rolling < 3.0 * spec.noise_sigma);
}

TEST_CASE("polynomial baseline does better in the deep ocean than in the thermocline") {
    const auto sched = DepthSchedule::paper58();
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        SynthSpec spec;
        spec.seed = seed;
        const LayeredSeries series = assemble_series(synth_generate(spec), sched);
        const Month target = Month::parse("2021-07");
        const Eigen::VectorXd err =
            (poly_predict(series, {12, 2, target}, 8) - series.values().col(series.column_of(target))).cwiseAbs();
        double deep = 0.0, thermo = 0.0;
        int nd = 0, nt = 0;
        for (std::size_t j = 0; j < sched.size(); ++j) {
            const double e = err[static_cast<Eigen::Index>(j)];
            if (sched[j] > 900.0) deep += e, ++nd;
            if (sched[j] >= 20.0 && sched[j] <= 300.0) thermo += e, ++nt;
        }
        CHECK(deep / nd < thermo / nt);
    }
}
