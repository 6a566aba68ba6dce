#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "cli.hpp"
#include "doctest.h"
#include "sspred/checkpoint.hpp"
#include "sspred/csv_io.hpp"
#include "sspred/kvfile.hpp"

using namespace sspred;
namespace fs = std::filesystem;

namespace {

struct Run {
    int code;
    std::string out;
    std::string err;
};

Run run(std::vector<std::string> args) {
    args.insert(args.begin(), "sspred");
    std::ostringstream out, err;
    const int code = cli::run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Fresh output root per test case, exported through the environment.
struct Root {
    fs::path path;
    explicit Root(const std::string& name) : path(fs::temp_directory_path() / ("sspred_cli_" + name)) {
        fs::remove_all(path);
        fs::create_directories(path);
        setenv(cli::kOutputRootEnv, path.c_str(), 1);
    }
    ~Root() {
        fs::remove_all(path);
        unsetenv(cli::kOutputRootEnv);
    }
    std::string operator/(const std::string& p) const { return (path / p).string(); }
};

const std::vector<std::string> kTiny{"--schedule", "0,50,200,1975", "--hidden", "3", "--epochs", "4"};

std::vector<std::string> with(std::vector<std::string> a, const std::vector<std::string>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

}  // namespace

TEST_CASE("synth and ingest") {
    Root root("synth");
    Run r = run({"synth"});
    REQUIRE(r.code == 0);
    CHECK(fs::exists(root / "synth.csv"));

    r = run({"ingest", root / "synth.csv"});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("60 months, 2017-01..2021-12\n", 0) == 0);
    CHECK(r.out.find("samples per month: 58") != std::string::npos);
    CHECK(slurp(root / "ingested.csv") == slurp(root / "synth.csv"));

    SUBCASE("seed repeat gives identical bytes") {
        REQUIRE(run({"synth", "--seed", "4", "--out", root / "a.csv"}).code == 0);
        REQUIRE(run({"synth", "--seed", "4", "--out", root / "b.csv"}).code == 0);
        REQUIRE(run({"synth", "--seed", "5", "--out", root / "c.csv"}).code == 0);
        CHECK(slurp(root / "a.csv") == slurp(root / "b.csv"));
        CHECK(slurp(root / "a.csv") != slurp(root / "c.csv"));
    }
    SUBCASE("month bounds") {
        CHECK(run({"synth", "--months", "13", "--out", root / "m13.csv"}).code == 0);
        CHECK(read_profiles_csv(fs::path(root / "m13.csv")).size() == 13);
        r = run({"synth", "--months", "12"});
        CHECK(r.code == 2);
        CHECK(r.err.find("months") != std::string::npos);
    }
}

TEST_CASE("ingest errors") {
    Root root("ingest");
    std::ofstream(root / "empty.csv").close();
    Run r = run({"ingest", root / "empty.csv"});
    CHECK(r.code == 2);
    CHECK(!r.err.empty());

    std::ofstream(root / "dup.csv") << "month,depth_m,speed_mps\n2020-01,0,1500\n2020-01,10,1500\n2020-01,0,1500\n2020-01,10,1500\n";
    r = run({"ingest", root / "dup.csv"});
    CHECK(r.code == 2);
    CHECK(r.err.find("2020-01") != std::string::npos);

    std::ofstream(root / "gap.csv") << "month,depth_m,speed_mps\n2020-01,0,1500\n2020-01,10,1500\n2020-03,0,1500\n2020-03,10,1500\n";
    r = run({"ingest", root / "gap.csv"});
    CHECK(r.code == 2);
    CHECK(r.err.find("gap") != std::string::npos);

    r = run({"ingest", root / "missing.csv"});
    CHECK(r.code == 2);
}

TEST_CASE("train and predict") {
    Root root("train");
    SUBCASE("paper58 schedule writes 58 models and a manifest") {
        // Full 58-level layout with a small network so the test stays quick.
        Run r = run({"train", "--synth", "--hidden", "2", "--epochs", "1", "--target", "2021-01"});
        REQUIRE(r.code == 0);
        CHECK(fs::exists(root / "checkpoint/manifest.txt"));
        CHECK(fs::exists(root / "checkpoint/layer_057.model"));
        CHECK_FALSE(fs::exists(root / "checkpoint/layer_058.model"));
        const KeyValues kv = read_kv(fs::path(root / "checkpoint/manifest.txt"));
        CHECK(kv.at("train_start") == "2017-01");
        CHECK(kv.at("train_end") == "2020-12");
    }
    SUBCASE("single-level schedule, determinism and predictions") {
        const auto args = with({"train", "--synth", "--schedule", "0", "--hidden", "3", "--epochs", "20"}, {});
        REQUIRE(run(with(args, {"--out", root / "a"})).code == 0);
        REQUIRE(run(with(args, {"--out", root / "b", "--workers", "2"})).code == 0);
        int files = 0;
        for ([[maybe_unused]] const auto& e : fs::directory_iterator(root / "a")) ++files;
        CHECK(files == 2);
        CHECK(slurp(root / "a/layer_000.model") == slurp(root / "b/layer_000.model"));
        CHECK(slurp(root / "a/manifest.txt") == slurp(root / "b/manifest.txt"));

        // target defaults to the month after the data
        Run p = run({"predict", "--checkpoint", root / "a", "-k", "12"});
        REQUIRE(p.code == 0);
        CHECK(p.out.find("2022-01..2022-12") != std::string::npos);
        int profiles = 0;
        for (const auto& e : fs::directory_iterator(root / "predictions")) {
            profiles += e.path().filename().string().rfind("profile_", 0) == 0;
        }
        CHECK(profiles == 12);
        const auto prof = read_profiles_csv(fs::path(root / "predictions/profile_2022-03.csv"));
        CHECK(prof.size() == 1);
        CHECK(prof[0].month().str() == "2022-03");
        const auto layered = read_layered_csv(fs::path(root / "predictions/layered_2022-01.csv"));
        CHECK(layered.depths == std::vector<double>{0.0});

        const ModelBank bank = load_bank(fs::path(root / "a"));
        CHECK(fmt6(layered.speeds[0]) == fmt6(predict_one_step(bank)[0]));
        REQUIRE(run({"predict", "--checkpoint", root / "a", "-k", "1", "--out", root / "one"}).code == 0);
        CHECK(slurp(root / "one/layered_2022-01.csv") == slurp(root / "predictions/layered_2022-01.csv"));
    }
    SUBCASE("impossible window fails before training") {
        Run r = run(with({"train", "--synth", "--target", "2018-06"}, kTiny));
        CHECK(r.code == 2);
        CHECK(r.err.find("2014-06") != std::string::npos);
        CHECK_FALSE(fs::exists(root / "checkpoint"));
    }
    SUBCASE("divergence exits 3 and leaves no checkpoint") {
        Run r = run(with({"train", "--synth", "--optimizer", "sgd", "--lr", "1e300", "--clip-norm", "1e300"}, kTiny));
        CHECK(r.code == 3);
        CHECK(r.err.find("layer 0") != std::string::npos);
        CHECK_FALSE(fs::exists(root / "checkpoint"));
        CHECK_FALSE(fs::exists(root / "checkpoint.partial"));
    }
    SUBCASE("usage errors") {
        CHECK(run({}).code == 2);
        CHECK(run({"train", "--synth", "--data", "x.csv"}).code == 2);
        CHECK(run(with({"train", "--synth", "--stack-depth", "4"}, kTiny)).code == 2);
        CHECK(run({"predict", "--checkpoint", root / "nothing"}).code == 2);
        CHECK(run({"--help"}).code == 0);
    }
}

TEST_CASE("config file precedence") {
    Root root("config");
    std::ofstream(root / "run.cfg") << "# tiny run\nschedule = 0,100\nhidden = 3\nepochs = 3\nlr_overrides = 1:0.02\n";
    REQUIRE(run({"train", "--synth", "--config", root / "run.cfg", "--out", root / "file"}).code == 0);
    KeyValues kv = read_kv(fs::path(root / "file/manifest.txt"));
    CHECK(kv.at("epochs") == "3");
    CHECK(kv.at("hidden_size") == "3");
    CHECK(kv.at("lr_overrides") == "1:0.02");
    CHECK(kv.at("lr") == "0.01");

    REQUIRE(run({"train", "--synth", "--config", root / "run.cfg", "--epochs", "5", "--out", root / "flag"}).code == 0);
    kv = read_kv(fs::path(root / "flag/manifest.txt"));
    CHECK(kv.at("epochs") == "5");
    CHECK(kv.at("hidden_size") == "3");

    std::ofstream(root / "bad.cfg") << "hiden = 3\n";
    Run r = run({"train", "--synth", "--config", root / "bad.cfg"});
    CHECK(r.code == 2);
    CHECK(r.err.find("hiden") != std::string::npos);
}

TEST_CASE("evaluate") {
    Root root("evaluate");
    const std::vector<std::string> fast{"--synth", "--schedule", "0,20,100,400,1000,1975", "--hidden", "3",
                                        "--epochs", "5", "--mlp-hidden", "3", "--mlp-epochs", "5", "--poly-degree",
                                        "3"};
    SUBCASE("unknown experiment") {
        Run r = run({"evaluate", "forecast"});
        CHECK(r.code == 2);
        CHECK(r.err.find("forecast") != std::string::npos);
    }
    SUBCASE("compare writes a four-method table") {
        Run r = run(with({"evaluate", "compare", "--target", "2021-10"}, fast));
        REQUIRE(r.code == 0);
        const std::string csv = slurp(root / "reports/compare_2021-10_1.csv");
        CHECK(csv.rfind("method,detail,rmse_mps\n", 0) == 0);
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 5);
        CHECK(fs::exists(root / "reports/compare_2021-10_1.svg"));
    }
    SUBCASE("monthly has 12 rows and a mean row") {
        Run r = run(with({"evaluate", "monthly", "--year", "2021", "--epochs", "2"}, fast));
        REQUIRE(r.code == 0);
        const std::string csv = slurp(root / "reports/monthly_2021_1.csv");
        CHECK(std::count(csv.begin(), csv.end(), '\n') == 14);
        CHECK(csv.find("\nmean,") != std::string::npos);
    }
    SUBCASE("assertion failures exit 4 and name the criterion") {
        Run r = run(with({"evaluate", "cycle_tracking", "--epochs", "1", "--assert"}, fast));
        CHECK(r.code == 4);
        CHECK(r.err.find("correlation") != std::string::npos);
        CHECK(fs::exists(root / "reports/cycle_tracking_2021-01_1.csv"));
    }
    SUBCASE("bad baseline settings fail before training") {
        Run r = run(with(with({"evaluate", "compare"}, fast), {"--poly-degree", "9"}));
        CHECK(r.code == 2);
        CHECK_FALSE(fs::exists(root / "reports"));
    }
    SUBCASE("reports are byte-identical across runs") {
        REQUIRE(run(with({"evaluate", "window_ablation", "--n-values", "1,2", "--out", root / "x"}, fast)).code == 0);
        REQUIRE(run(with({"evaluate", "window_ablation", "--n-values", "1,2", "--out", root / "y"}, fast)).code == 0);
        CHECK(slurp(root / "x/window_ablation_2021-01_1.csv") == slurp(root / "y/window_ablation_2021-01_1.csv"));
        CHECK(slurp(root / "x/window_ablation_2021-01_1.svg") == slurp(root / "y/window_ablation_2021-01_1.svg"));
    }
}
