#include "cli.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "CLI11.hpp"
#include "sspred/baselines.hpp"
#include "sspred/checkpoint.hpp"
#include "sspred/csv_io.hpp"
#include "sspred/errors.hpp"
#include "sspred/evalharness.hpp"
#include "sspred/hlstm.hpp"
#include "sspred/kvfile.hpp"

namespace sspred::cli {

namespace fs = std::filesystem;

namespace {

const std::vector<std::string> kExperiments{"window_ablation", "monthly", "compare", "cycle_tracking"};

fs::path output_root() {
    const char* env = std::getenv(kOutputRootEnv);
    return env && *env ? fs::path(env) : fs::path(".");
}

struct DataOptions {
    std::string data;
    bool synth = false;
    std::uint64_t synth_seed = 1;
    int synth_months = 60;
    double synth_noise = SynthSpec{}.noise_sigma;
    double synth_trend = SynthSpec{}.trend_per_year;
    std::string schedule = "paper58";
    bool clamp = false;
};

struct RunConfig {
    DataOptions data;
    int cycle_length = 12;
    int n_cycles = 4;
    std::string target;

    Hyperparams hp;
    std::string optimizer = "adam";
    std::string lr_overrides;
    std::string epoch_overrides;
    bool retrain = false;
    double delta = 0.05;
    int max_rounds = 5;
    std::uint64_t seed = 1;

    int poly_degree = 8;
    int poly_cycles = 2;
    std::string mean_mode = "same_month";
    MlpHyper mlp;

    std::string out;
    std::string config;
};

DepthSchedule parse_schedule(const std::string& s) {
    if (s == "paper58") return DepthSchedule::paper58();
    return DepthSchedule::custom(parse_double_list(s, "schedule"));
}

template <class V>
std::map<std::size_t, V> parse_overrides(const std::string& text, const std::string& what) {
    std::map<std::size_t, V> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        const auto colon = item.find(':');
        if (colon == std::string::npos) throw ValidationError(what + ": expected layer:value, got '" + item + "'");
        const auto j = static_cast<std::size_t>(parse_u64(item.substr(0, colon), what));
        if constexpr (std::is_same_v<V, double>) {
            out[j] = parse_double(item.substr(colon + 1), what);
        } else {
            out[j] = static_cast<V>(parse_int(item.substr(colon + 1), what));
        }
    }
    return out;
}

std::vector<int> parse_int_list(const std::string& text, const std::string& what) {
    std::vector<int> out;
    for (double v : parse_double_list(text, what)) {
        if (v != std::floor(v)) throw ValidationError(what + ": expected integers");
        out.push_back(static_cast<int>(v));
    }
    return out;
}

void add_data_options(CLI::App* app, DataOptions& d) {
    app->add_option("--data", d.data, "Profile CSV (month,depth_m,speed_mps)");
    app->add_flag("--synth", d.synth, "Use the synthetic ocean instead of --data");
    app->add_option("--synth-seed", d.synth_seed, "Synthetic ocean seed");
    app->add_option("--synth-months", d.synth_months, "Synthetic ocean length in months");
    app->add_option("--synth-noise", d.synth_noise, "Synthetic white noise sigma at the surface (m/s)");
    app->add_option("--synth-trend", d.synth_trend, "Synthetic surface trend (m/s per year)");
    app->add_option("--schedule", d.schedule, "paper58 or a comma-separated list of depths");
    app->add_flag("--clamp", d.clamp, "Clamp profiles that stop short of the deepest level");
}

void add_window_options(CLI::App* app, RunConfig& c) {
    app->add_option("--cycle-length", c.cycle_length, "Months per cycle");
    app->add_option("--n-cycles", c.n_cycles, "Training cycles before the target month");
    app->add_option("--target", c.target, "Target month YYYY-MM");
}

void add_model_options(CLI::App* app, RunConfig& c) {
    app->add_option("--hidden", c.hp.hidden_size, "LSTM hidden size");
    app->add_option("--lr", c.hp.lr, "Learning rate");
    app->add_option("--epochs", c.hp.epochs, "Training epochs per layer");
    app->add_option("--stack-depth", c.hp.stack_depth, "Recurrent layers per depth model (only 1)");
    app->add_option("--optimizer", c.optimizer, "adam or sgd")->check(CLI::IsMember({"adam", "sgd"}));
    app->add_option("--clip-norm", c.hp.clip_norm, "Global gradient norm limit");
    app->add_option("--workers", c.hp.workers, "Parallel layer trainings");
    app->add_option("--lr-overrides", c.lr_overrides, "Per-layer learning rates, layer:value,...");
    app->add_option("--epoch-overrides", c.epoch_overrides, "Per-layer epochs, layer:value,...");
    app->add_flag("--retrain", c.retrain, "Retrain until the validation RMSE settles");
    app->add_option("--delta", c.delta, "Relative RMSE change that stops retraining");
    app->add_option("--max-rounds", c.max_rounds, "Retraining round limit");
    app->add_option("--seed", c.seed, "Master seed");
}

void add_baseline_options(CLI::App* app, RunConfig& c) {
    app->add_option("--poly-degree", c.poly_degree, "Polynomial baseline degree");
    app->add_option("--poly-cycles", c.poly_cycles, "Polynomial baseline window in cycles");
    app->add_option("--mean-mode", c.mean_mode, "same_month or all_months")
        ->check(CLI::IsMember({"same_month", "all_months"}));
    app->add_option("--mlp-window", c.mlp.window, "BP baseline input months");
    app->add_option("--mlp-hidden", c.mlp.hidden, "BP baseline hidden width");
    app->add_option("--mlp-epochs", c.mlp.epochs, "BP baseline epochs");
    app->add_option("--mlp-lr", c.mlp.lr, "BP baseline learning rate");
}

void finish_model_config(RunConfig& c) {
    c.hp.optimizer = c.optimizer == "sgd" ? Optimizer::sgd : Optimizer::adam;
    c.hp.lr_overrides = parse_overrides<double>(c.lr_overrides, "lr-overrides");
    c.hp.epoch_overrides = parse_overrides<int>(c.epoch_overrides, "epoch-overrides");
    c.hp.validate();
    if (!(c.delta >= 0.0)) throw ValidationError("delta must be >= 0");
    if (c.max_rounds < 1) throw ValidationError("max-rounds must be >= 1");
    if (c.cycle_length < 1 || c.n_cycles < 1) throw ValidationError("cycle length and n-cycles must be >= 1");
}

LayeredSeries load_series(const DataOptions& d) {
    const DepthSchedule sched = parse_schedule(d.schedule);
    std::vector<Profile> profiles;
    if (d.synth == !d.data.empty()) throw ValidationError("give exactly one of --data or --synth");
    if (d.synth) {
        SynthSpec spec;
        spec.seed = d.synth_seed;
        spec.months = d.synth_months;
        spec.noise_sigma = d.synth_noise;
        spec.trend_per_year = d.synth_trend;
        // Generate on the standard grid plus the schedule so every profile spans it.
        std::vector<double> depths = DepthSchedule::paper58().levels();
        depths.insert(depths.end(), sched.levels().begin(), sched.levels().end());
        std::sort(depths.begin(), depths.end());
        depths.erase(std::unique(depths.begin(), depths.end()), depths.end());
        spec.depths = std::move(depths);
        profiles = synth_generate(spec);
    } else {
        profiles = read_profiles_csv(fs::path(d.data));
    }
    return assemble_series(profiles, sched, d.clamp);
}

HarnessConfig harness_config(const RunConfig& c, double step) {
    HarnessConfig h;
    h.hp = c.hp;
    h.mlp = c.mlp;
    h.cycle_length = c.cycle_length;
    h.n_cycles = c.n_cycles;
    h.poly_degree = c.poly_degree;
    h.poly_cycles = c.poly_cycles;
    h.mean_mode = parse_mean_mode(c.mean_mode);
    h.step = step;
    h.seed = c.seed;
    h.retrain = c.retrain;
    h.retrain_delta = c.delta;
    h.retrain_max_rounds = c.max_rounds;
    return h;
}

// Config file values become option defaults, so explicit flags still win.
void apply_config(CLI::App& app, const std::vector<std::string>& args) {
    std::string path;
    std::string sub_name;
    for (std::size_t i = 1; i < args.size(); ++i) {
        const std::string& a = args[i];
        if (a == "--config" && i + 1 < args.size()) {
            path = args[i + 1];
            ++i;
        } else if (a.rfind("--config=", 0) == 0) {
            path = a.substr(9);
        } else if (sub_name.empty() && !a.empty() && a[0] != '-') {
            sub_name = a;
        }
    }
    if (path.empty()) return;
    CLI::App* sub = sub_name.empty() ? nullptr : app.get_subcommand_no_throw(sub_name);
    if (!sub) throw ValidationError("--config needs a subcommand");
    for (const auto& [key, value] : read_kv(fs::path(path))) {
        std::string name = key;
        std::replace(name.begin(), name.end(), '_', '-');
        if (name == "config") continue;
        CLI::Option* opt = sub->get_option_no_throw("--" + name);
        if (!opt) throw ValidationError(path + ": unknown key '" + key + "' for command " + sub_name);
        opt->default_val(value);
    }
}

// ---- commands --------------------------------------------------------------

int cmd_ingest(const std::string& data, const std::string& out_path, std::ostream& out) {
    const std::vector<Profile> profiles = read_profiles_csv(fs::path(data));
    for (std::size_t i = 1; i < profiles.size(); ++i) {
        if (profiles[i].month() != profiles[i - 1].month() + 1) {
            throw ChronologyError("gap between " + profiles[i - 1].month().str() + " and " +
                                  profiles[i].month().str());
        }
    }
    double lo = profiles.front().min_depth(), hi = profiles.front().max_depth();
    std::map<std::size_t, int> counts;
    for (const auto& p : profiles) {
        lo = std::min(lo, p.min_depth());
        hi = std::max(hi, p.max_depth());
        ++counts[p.samples().size()];
    }
    out << profiles.size() << " months, " << profiles.front().month().str() << ".."
        << profiles.back().month().str() << '\n';
    out << "depth span " << fmt6(lo) << ".." << fmt6(hi) << " m\n";
    if (counts.size() == 1) {
        out << "samples per month: " << counts.begin()->first << '\n';
    } else {
        out << "samples per month:\n";
        for (const auto& p : profiles) out << "  " << p.month().str() << ' ' << p.samples().size() << '\n';
    }
    const fs::path dest = out_path.empty() ? output_root() / "ingested.csv" : fs::path(out_path);
    if (dest.has_parent_path()) fs::create_directories(dest.parent_path());
    write_profiles_csv(dest, profiles);
    out << "wrote " << dest.string() << '\n';
    return kOk;
}

int cmd_synth(const SynthSpec& spec, const std::string& out_path, std::ostream& out) {
    const std::vector<Profile> profiles = synth_generate(spec);
    const fs::path dest = out_path.empty() ? output_root() / "synth.csv" : fs::path(out_path);
    if (dest.has_parent_path()) fs::create_directories(dest.parent_path());
    write_profiles_csv(dest, profiles);
    out << "wrote " << profiles.size() << " months to " << dest.string() << '\n';
    return kOk;
}

int cmd_train(RunConfig c, std::ostream& out) {
    finish_model_config(c);
    const LayeredSeries series = load_series(c.data);
    const Month target = c.target.empty() ? series.end() + 1 : Month::parse(c.target);
    const WindowSpec w{c.cycle_length, c.n_cycles, target};
    // fail fast on impossible windows
    (void)split_train(series, w);
    if (c.retrain) (void)series.column_of(target);

    const fs::path dest = c.out.empty() ? output_root() / "checkpoint" : fs::path(c.out);
    fs::path partial = dest;
    partial += ".partial";
    ModelBank bank = c.retrain ? retrain_until_stable(series, w, c.hp, c.seed, c.delta, c.max_rounds).best
                               : train_bank(series, w, c.hp, c.seed);
    try {
        fs::remove_all(partial);
        save_bank(partial, bank);
        fs::remove_all(dest);
        fs::rename(partial, dest);
    } catch (...) {
        std::error_code ec;
        fs::remove_all(partial, ec);
        throw;
    }
    out << "trained " << bank.models.size() << " layers on " << w.first_train_month().str() << ".."
        << w.last_train_month().str() << " for target " << target.str() << '\n';
    for (const LayerModel& m : bank.models) {
        out << "layer " << m.depth_index << " (" << fmt6(bank.schedule[m.depth_index]) << " m) loss "
            << exact_double(m.final_loss) << '\n';
    }
    out << "wrote " << dest.string() << '\n';
    return kOk;
}

int cmd_predict(const std::string& checkpoint, int k, double step, const std::string& out_path,
                std::ostream& out) {
    if (k < 1) throw ValidationError("k must be >= 1");
    if (!(step > 0.0)) throw ValidationError("step must be positive");
    const ModelBank bank = load_bank(fs::path(checkpoint));
    const Eigen::MatrixXd pred = predict_multi_step(bank, k);
    const fs::path dest = out_path.empty() ? output_root() / "predictions" : fs::path(out_path);
    fs::create_directories(dest);
    for (int i = 0; i < k; ++i) {
        const Month m = bank.window.target + i;
        const Eigen::VectorXd col = pred.col(i);
        write_layered_csv(dest / ("layered_" + m.str() + ".csv"), col, bank.schedule);
        write_profiles_csv(dest / ("profile_" + m.str() + ".csv"),
                           std::vector<Profile>{interpolate_full_depth(col, bank.schedule, step, m)});
    }
    out << "wrote " << k << " months " << bank.window.target.str() << ".." << (bank.window.target + (k - 1)).str()
        << " to " << dest.string() << '\n';
    return kOk;
}

struct EvalOptions {
    std::string experiment;
    int year = 0;
    std::string n_values = "1,2,3,4";
    std::string depths = "1,2,3";
    int k = 12;
    double step = 1.0;
    bool assert_criteria = false;
};

int cmd_evaluate(RunConfig c, const EvalOptions& e, std::ostream& out, std::ostream& err) {
    finish_model_config(c);
    (void)parse_mean_mode(c.mean_mode);
    if (!(e.step > 0.0)) throw ValidationError("step must be positive");
    const LayeredSeries series = load_series(c.data);
    const HarnessConfig h = harness_config(c, e.step);
    const fs::path dest = c.out.empty() ? output_root() / "reports" : fs::path(c.out);
    std::vector<std::string> violated;
    std::string csv, svg, stem;

    if (e.experiment == "window_ablation") {
        const Month target = c.target.empty() ? Month::from_ym(series.end().year(), 1) : Month::parse(c.target);
        const std::vector<int> ns = parse_int_list(e.n_values, "n-values");
        const int max_n = *std::max_element(ns.begin(), ns.end());
        (void)split_train(series, h.window(target, max_n));
        (void)series.column_of(target);
        const auto rows = experiment_window_ablation(series, {target}, ns, h);
        for (std::size_t i = 1; i < rows.size(); ++i) {
            if (rows[i].n_cycles > rows[i - 1].n_cycles && rows[i].rmse > rows[i - 1].rmse + 0.1) {
                violated.push_back("RMSE rises from n=" + std::to_string(rows[i - 1].n_cycles) + " to n=" +
                                   std::to_string(rows[i].n_cycles) + " by more than 0.1 m/s");
            }
        }
        csv = ablation_csv(rows);
        svg = ablation_svg(rows);
        stem = report_stem(e.experiment, target.str(), c.seed);
    } else if (e.experiment == "monthly") {
        const int year = e.year != 0 ? e.year : series.end().year();
        const Month jan = Month::from_ym(year, 1);
        (void)split_train(series, h.window(jan));
        (void)series.column_of(jan + 11);
        const MonthlyTable t = experiment_monthly(series, year, h);
        if (t.mean_rolling > 1.0) violated.push_back("mean monthly RMSE " + fmt6(t.mean_rolling) + " > 1.0 m/s");
        for (const auto& r : t.rows) {
            if (r.rolling_rmse > 1.5) {
                violated.push_back(r.target.str() + " RMSE " + fmt6(r.rolling_rmse) + " > 1.5 m/s");
            }
        }
        csv = monthly_csv(t);
        svg = monthly_svg(t);
        stem = report_stem(e.experiment, std::to_string(year), c.seed);
    } else if (e.experiment == "compare") {
        const Month target = c.target.empty() ? series.end() : Month::parse(c.target);
        (void)split_train(series, h.window(target));
        (void)series.column_of(target);
        (void)split_train(series, h.window(target, c.poly_cycles));
        if (c.poly_degree < 1 || static_cast<std::size_t>(c.poly_degree) + 1 > series.levels()) {
            throw ValidationError("poly-degree " + std::to_string(c.poly_degree) + " needs 1 <= degree <= " +
                                  std::to_string(series.levels() - 1) + " for this schedule");
        }
        c.mlp.validate();
        if (c.mlp.window >= h.window(target).train_months()) {
            throw WindowError("mlp-window must be shorter than the training window");
        }
        const CompareTable t = experiment_compare(series, target, h);
        if (!(t.row("H-LSTM").rmse < t.row("mean").rmse)) {
            violated.push_back("H-LSTM RMSE " + fmt6(t.row("H-LSTM").rmse) + " is not below mean RMSE " +
                               fmt6(t.row("mean").rmse));
        }
        csv = compare_csv(t);
        svg = compare_svg(t, series.schedule(), e.step);
        stem = report_stem(e.experiment, target.str(), c.seed);
    } else if (e.experiment == "cycle_tracking") {
        if (e.k < 2) throw ValidationError("k must be >= 2 for cycle tracking");
        const Month target = c.target.empty() ? series.end() - (e.k - 1) : Month::parse(c.target);
        std::vector<std::size_t> idx;
        for (int j : parse_int_list(e.depths, "depths")) {
            if (j < 0) throw ValidationError("depth indices must be >= 0");
            idx.push_back(static_cast<std::size_t>(j));
        }
        (void)split_train(series, h.window(target));
        (void)series.column_of(target + (e.k - 1));
        const CycleTable t = experiment_cycle_tracking(series, target, idx, e.k, h);
        for (const auto& tr : t.traces) {
            if (!(tr.correlation > 0.95)) {
                violated.push_back("layer " + std::to_string(tr.depth_index) + " correlation " +
                                   fmt6(tr.correlation) + " <= 0.95");
            }
        }
        csv = cycle_csv(t);
        svg = cycle_svg(t);
        stem = report_stem(e.experiment, target.str(), c.seed);
    } else {
        throw ValidationError("unknown experiment '" + e.experiment + "'");
    }

    const auto [csv_path, svg_path] = write_report(dest, stem, csv, svg);
    out << csv;
    out << "wrote " << csv_path.string() << " and " << svg_path.string() << '\n';
    if (e.assert_criteria && !violated.empty()) {
        for (const auto& v : violated) err << "assertion failed: " << v << '\n';
        return kAssertion;
    }
    return kOk;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Sound speed profile prediction with one LSTM per depth layer", "sspred"};
    app.require_subcommand(1);
    app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    app.set_help_all_flag("--help-all", "Show help for every command");

    RunConfig c;
    EvalOptions e;
    std::string ingest_data, ingest_out, checkpoint, predict_out;
    int predict_k = 1;
    double predict_step = 1.0;
    SynthSpec synth;
    std::string synth_start = synth.start.str();
    std::string synth_out;

    CLI::App* ingest = app.add_subcommand("ingest", "Validate a profile CSV and write a canonical copy");
    ingest->add_option("data", ingest_data, "Profile CSV")->required();
    ingest->add_option("--out", ingest_out, "Canonical copy path");

    CLI::App* synth_cmd = app.add_subcommand("synth", "Write a synthetic monthly profile series");
    synth_cmd->add_option("--seed", synth.seed, "Seed");
    synth_cmd->add_option("--months", synth.months, "Number of months (>= 13)");
    synth_cmd->add_option("--start", synth_start, "First month YYYY-MM");
    synth_cmd->add_option("--noise-sigma", synth.noise_sigma, "White noise sigma at the surface (m/s)");
    synth_cmd->add_option("--trend", synth.trend_per_year, "Surface trend (m/s per year)");
    synth_cmd->add_option("--seasonal-amplitude", synth.seasonal_amplitude, "Surface seasonal amplitude (m/s)");
    synth_cmd->add_option("--vertical-structure", synth.vertical_structure, "0 gives a uniform ocean");
    synth_cmd->add_option("--out", synth_out, "Output CSV");

    CLI::App* train = app.add_subcommand("train", "Train one LSTM per depth layer and write a checkpoint");
    add_data_options(train, c.data);
    add_window_options(train, c);
    add_model_options(train, c);
    train->add_option("--out", c.out, "Checkpoint directory");

    CLI::App* predict = app.add_subcommand("predict", "Roll a checkpoint forward k months");
    predict->add_option("--checkpoint", checkpoint, "Checkpoint directory")->required();
    predict->add_option("-k", predict_k, "Months to predict");
    predict->add_option("--step", predict_step, "Full-depth interpolation step (m)");
    predict->add_option("--out", predict_out, "Output directory");

    CLI::App* evaluate = app.add_subcommand("evaluate", "Run an experiment and write CSV and SVG reports");
    evaluate->add_option("experiment", e.experiment, "window_ablation, monthly, compare or cycle_tracking")
        ->required()
        ->check(CLI::IsMember(kExperiments));
    add_data_options(evaluate, c.data);
    add_window_options(evaluate, c);
    add_model_options(evaluate, c);
    add_baseline_options(evaluate, c);
    evaluate->add_option("--year", e.year, "Year for the monthly experiment");
    evaluate->add_option("--n-values", e.n_values, "Cycle counts for the window ablation");
    evaluate->add_option("--depths", e.depths, "Layer indices for cycle tracking");
    evaluate->add_option("-k", e.k, "Rollout length for cycle tracking");
    evaluate->add_option("--step", e.step, "Full-depth grid step (m)");
    evaluate->add_flag("--assert", e.assert_criteria, "Exit 4 when the experiment's acceptance checks fail");
    evaluate->add_option("--out", c.out, "Report directory");

    for (CLI::App* sub : {train, evaluate}) sub->add_option("--config", c.config, "key = value config file");

    try {
        apply_config(app, args);
        std::vector<std::string> rev(args.rbegin(), args.rend() - 1);
        app.parse(rev);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kOk;
    } catch (const CLI::ParseError& ex) {
        err << "usage error: " << ex.what() << '\n';
        for (CLI::App* sub : app.get_subcommands()) err << sub->help();
        return kValidation;
    } catch (const Error& ex) {
        err << "error: " << ex.what() << '\n';
        return kValidation;
    }

    try {
        if (ingest->parsed()) return cmd_ingest(ingest_data, ingest_out, out);
        if (synth_cmd->parsed()) {
            synth.start = Month::parse(synth_start);
            return cmd_synth(synth, synth_out, out);
        }
        if (train->parsed()) return cmd_train(c, out);
        if (predict->parsed()) return cmd_predict(checkpoint, predict_k, predict_step, predict_out, out);
        if (evaluate->parsed()) return cmd_evaluate(c, e, out, err);
    } catch (const DivergenceError& ex) {
        err << "training diverged: " << ex.what() << '\n';
        return kDivergence;
    } catch (const Error& ex) {
        err << "error: " << ex.what() << '\n';
        return kValidation;
    } catch (const std::exception& ex) {
        err << "error: " << ex.what() << '\n';
        return kFailure;
    }
    return kFailure;
}

}  // namespace sspred::cli
