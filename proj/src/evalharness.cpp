#include "sspred/evalharness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

#include "sspred/csv_io.hpp"
#include "sspred/errors.hpp"
#include "sspred/nn_math.hpp"

namespace sspred {

double rmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth) {
    if (pred.size() != truth.size()) {
        throw DimensionError("rmse: lengths differ (" + std::to_string(pred.size()) + " vs " +
                             std::to_string(truth.size()) + ")");
    }
    if (pred.size() == 0) throw DimensionError("rmse: empty vectors");
    return std::sqrt((pred - truth).squaredNorm() / static_cast<double>(pred.size()));
}

double rmse_full_depth(const Profile& pred, const Profile& truth, double step) {
    if (!(step > 0.0)) throw ValidationError("rmse_full_depth: step must be positive");
    if (pred.min_depth() != 0.0 || truth.min_depth() != 0.0 || pred.max_depth() != truth.max_depth()) {
        throw ValidationError("rmse_full_depth: profiles span different depths (0-" +
                              std::to_string(pred.max_depth()) + " m vs 0-" + std::to_string(truth.max_depth()) +
                              " m)");
    }
    const double last = pred.max_depth();
    const auto count = static_cast<std::size_t>(std::floor(last / step + 1e-9)) + 1;
    double sum = 0.0;
    std::size_t n = 0;
    for (std::size_t k = 0; k < count; ++k) {
        const double z = std::min(static_cast<double>(k) * step, last);
        const double d = pred.speed_at(z) - truth.speed_at(z);
        sum += d * d;
        ++n;
    }
    if (static_cast<double>(count - 1) * step < last) {
        const double d = pred.speed_at(last) - truth.speed_at(last);
        sum += d * d;
        ++n;
    }
    return std::sqrt(sum / static_cast<double>(n));
}

double rmse_layered_full_depth(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth, const DepthSchedule& sched,
                               double step) {
    if (pred.size() != truth.size()) throw DimensionError("rmse: layered vectors differ in length");
    return rmse_full_depth(interpolate_full_depth(pred, sched, step), interpolate_full_depth(truth, sched, step), step);
}

double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
    if (a.size() != b.size() || a.size() < 2) throw DimensionError("pearson: need two vectors of equal length >= 2");
    const Eigen::ArrayXd x = a.array() - a.mean();
    const Eigen::ArrayXd y = b.array() - b.mean();
    const double den = std::sqrt((x * x).sum() * (y * y).sum());
    return den == 0.0 ? 0.0 : (x * y).sum() / den;
}

RmseReport make_report(std::string method, const Eigen::VectorXd& pred, const Eigen::VectorXd& truth,
                       const DepthSchedule& sched, Month target, std::string window, double step) {
    RmseReport r{std::move(method), target, std::move(window), rmse_layered_full_depth(pred, truth, sched, step), {}};
    for (std::size_t j = 0; j < sched.size(); ++j) {
        const auto i = static_cast<Eigen::Index>(j);
        r.per_depth_abs_err.emplace_back(sched[j], std::abs(pred[i] - truth[i]));
    }
    return r;
}

// ---- synthetic ocean -------------------------------------------------------

void SynthSpec::validate() const {
    if (months < 13) throw ValidationError("synth: months must be >= 13, got " + std::to_string(months));
    if (cycle_length < 1) throw ValidationError("synth: cycle length must be >= 1");
    if (!(noise_sigma >= 0.0)) throw ValidationError("synth: noise sigma must be >= 0");
    const double vals[] = {channel_speed,      channel_axis_m,   channel_scale_m,  mixed_layer_m,
                           mixed_layer_gradient, vertical_structure, seasonal_amplitude, seasonal_decay_m, seasonal_lag_months_per_km,
                           trend_per_year,     trend_decay_m,     noise_sigma,      noise_floor,      anomaly_ratio,
                           anomaly_persistence, anomaly_decay_m};
    for (double v : vals) {
        if (!std::isfinite(v)) throw ValidationError("synth: parameters must be finite");
    }
    if (channel_scale_m <= 0.0 || seasonal_decay_m <= 0.0 || trend_decay_m <= 0.0 || anomaly_decay_m <= 0.0) {
        throw ValidationError("synth: length scales must be positive");
    }
    if (anomaly_persistence < 0.0 || anomaly_persistence >= 1.0) {
        throw ValidationError("synth: anomaly persistence must lie in [0, 1)");
    }
    if (noise_floor < 0.0 || anomaly_ratio < 0.0 || mixed_layer_m < 0.0) {
        throw ValidationError("synth: noise floor, anomaly ratio and mixed layer depth must be >= 0");
    }
    if (!depths.empty()) (void)DepthSchedule::custom(depths);
}

SynthSpec SynthSpec::constant_ocean(std::uint64_t seed) {
    SynthSpec s;
    s.seed = seed;
    s.vertical_structure = 0.0;
    s.seasonal_amplitude = 0.0;
    s.trend_per_year = 0.0;
    s.noise_sigma = 0.0;
    return s;
}

SynthSpec SynthSpec::sinusoidal_ocean(std::uint64_t seed) {
    SynthSpec s;
    s.seed = seed;
    s.trend_per_year = 0.0;
    s.noise_sigma = 0.0;
    return s;
}

namespace {

double munk(const SynthSpec& s, double z) {
    const double eta = 2.0 * (z - s.channel_axis_m) / s.channel_scale_m;
    return s.channel_speed * (1.0 + 0.00737 * (eta - 1.0 + std::exp(-eta)));
}

double mean_profile(const SynthSpec& s, double z) {
    if (z >= s.mixed_layer_m) return munk(s, z);
    // nearly isothermal mixed layer: speed grows slowly with pressure
    return munk(s, s.mixed_layer_m) - s.mixed_layer_gradient * (s.mixed_layer_m - z);
}

}  // namespace

std::vector<Profile> synth_generate(const SynthSpec& spec) {
    spec.validate();
    const std::vector<double> depths = spec.depths.empty() ? DepthSchedule::paper58().levels() : spec.depths;
    std::vector<double> base(depths.size()), seasonal(depths.size()), trend(depths.size()), lag(depths.size()), white(depths.size()),
        coherent(depths.size());
    for (std::size_t d = 0; d < depths.size(); ++d) {
        const double z = depths[d];
        base[d] = spec.channel_speed + spec.vertical_structure * (mean_profile(spec, z) - spec.channel_speed);
        seasonal[d] = std::exp(-z / spec.seasonal_decay_m);
        trend[d] = spec.trend_per_year * std::exp(-z / spec.trend_decay_m);
        lag[d] = spec.seasonal_lag_months_per_km * z / 1000.0;
        white[d] = spec.noise_sigma * (spec.noise_floor + (1.0 - spec.noise_floor) * seasonal[d]);
        coherent[d] = spec.noise_sigma * spec.anomaly_ratio * std::exp(-z / spec.anomaly_decay_m);
    }

    nn::Rng rng(spec.seed);
    const double rho = spec.anomaly_persistence;
    const double innovation = std::sqrt(1.0 - rho * rho);
    double anomaly = rng.normal();  // stationary start, unit variance
    const double two_pi = 2.0 * std::numbers::pi;
    const double cycle = static_cast<double>(spec.cycle_length);

    std::vector<Profile> out;
    out.reserve(static_cast<std::size_t>(spec.months));
    for (int i = 0; i < spec.months; ++i) {
        if (i > 0) anomaly = rho * anomaly + innovation * rng.normal();
        // Phase is taken modulo the cycle first so month i and i + C are bitwise equal.
        const double phase_month = static_cast<double>(i % spec.cycle_length);
        const double years = static_cast<double>(i) / 12.0;
        std::vector<Sample> samples(depths.size());
        for (std::size_t d = 0; d < depths.size(); ++d) {
            double v = base[d];
            if (spec.seasonal_amplitude != 0.0) {
                v += spec.seasonal_amplitude * seasonal[d] * std::sin(two_pi * (phase_month - lag[d]) / cycle);
            }
            if (spec.trend_per_year != 0.0) v += trend[d] * years;
            if (spec.noise_sigma > 0.0) v += coherent[d] * anomaly + white[d] * rng.normal();
            samples[d] = {depths[d], v};
        }
        out.emplace_back(spec.start + i, std::move(samples));
    }
    return out;
}

// ---- experiments -----------------------------------------------------------

WindowSpec HarnessConfig::window(Month target, int n_cycles_override) const {
    return WindowSpec{cycle_length, n_cycles_override > 0 ? n_cycles_override : n_cycles, target};
}

ModelBank harness_train(const LayeredSeries& series, const WindowSpec& w, const HarnessConfig& cfg) {
    if (cfg.retrain) {
        return retrain_until_stable(series, w, cfg.hp, cfg.seed, cfg.retrain_delta, cfg.retrain_max_rounds).best;
    }
    return train_bank(series, w, cfg.hp, cfg.seed);
}

namespace {

Eigen::VectorXd truth_at(const LayeredSeries& series, Month m) { return series.values().col(series.column_of(m)); }

}  // namespace

std::vector<AblationRow> experiment_window_ablation(const LayeredSeries& series, const std::vector<Month>& targets,
                                                    const std::vector<int>& n_values, const HarnessConfig& cfg) {
    if (targets.empty() || n_values.empty()) throw ValidationError("window ablation needs targets and n values");
    std::vector<AblationRow> rows;
    for (Month t : targets) {
        const Eigen::VectorXd truth = truth_at(series, t);
        for (int n : n_values) {
            if (n < 1) throw ValidationError("window ablation: n must be >= 1");
            const ModelBank bank = harness_train(series, cfg.window(t, n), cfg);
            const double e = rmse_layered_full_depth(predict_one_step(bank), truth, series.schedule(), cfg.step);
            rows.push_back({t, n, e});
        }
    }
    return rows;
}

MonthlyTable experiment_monthly(const LayeredSeries& series, int year, const HarnessConfig& cfg) {
    MonthlyTable t;
    t.year = year;
    const Month jan = Month::from_ym(year, 1);
    (void)series.column_of(jan + 11);  // the whole year must be observed
    const ModelBank fixed_bank = harness_train(series, cfg.window(jan), cfg);
    const Eigen::MatrixXd fixed = predict_multi_step(fixed_bank, 12);
    for (int m = 0; m < 12; ++m) {
        const Month target = jan + m;
        const Eigen::VectorXd truth = truth_at(series, target);
        const ModelBank bank = m == 0 ? fixed_bank : harness_train(series, cfg.window(target), cfg);
        MonthlyRow row{target, rmse_layered_full_depth(predict_one_step(bank), truth, series.schedule(), cfg.step),
                       rmse_layered_full_depth(fixed.col(m), truth, series.schedule(), cfg.step)};
        t.mean_rolling += row.rolling_rmse / 12.0;
        t.mean_fixed += row.fixed_rmse / 12.0;
        t.rows.push_back(row);
    }
    return t;
}

const CompareRow& CompareTable::row(const std::string& method) const {
    for (const auto& r : rows) {
        if (r.method == method) return r;
    }
    throw ValidationError("no comparison row for method '" + method + "'");
}

CompareTable experiment_compare(const LayeredSeries& series, Month target, const HarnessConfig& cfg) {
    CompareTable t;
    t.target = target;
    t.truth = truth_at(series, target);
    const auto& sched = series.schedule();
    auto add = [&](std::string method, std::string detail, Eigen::VectorXd pred) {
        const double e = rmse_layered_full_depth(pred, t.truth, sched, cfg.step);
        t.rows.push_back({std::move(method), std::move(detail), e, std::move(pred)});
    };
    const WindowSpec w = cfg.window(target);
    add("H-LSTM", "n=" + std::to_string(w.n_cycles) + " hidden=" + std::to_string(cfg.hp.hidden_size),
        predict_one_step(harness_train(series, w, cfg)));
    add("polynomial", "n=" + std::to_string(cfg.poly_cycles) + " degree=" + std::to_string(cfg.poly_degree),
        poly_predict(series, cfg.window(target, cfg.poly_cycles), cfg.poly_degree));
    add("mean", "n=" + std::to_string(w.n_cycles) + " mode=" + mean_mode_name(cfg.mean_mode),
        mean_predict(series, w, cfg.mean_mode));
    add("BP", "n=" + std::to_string(w.n_cycles) + " L=" + std::to_string(cfg.mlp.window) +
                  " H=" + std::to_string(cfg.mlp.hidden),
        mlp_train_predict(series, w, cfg.mlp, cfg.seed));
    return t;
}

CycleTable experiment_cycle_tracking(const LayeredSeries& series, Month target,
                                     const std::vector<std::size_t>& depth_indices, int k, const HarnessConfig& cfg) {
    if (k < 2) throw ValidationError("cycle tracking needs k >= 2");
    if (depth_indices.empty()) throw ValidationError("cycle tracking needs at least one depth index");
    (void)series.column_of(target + (k - 1));
    const Eigen::MatrixXd roll = predict_multi_step(harness_train(series, cfg.window(target), cfg), k);
    CycleTable t;
    t.target = target;
    const Eigen::Index c0 = series.column_of(target);
    for (std::size_t j : depth_indices) {
        if (j >= series.levels()) {
            throw OutOfRangeError("depth index " + std::to_string(j) + " outside the " +
                                  std::to_string(series.levels()) + "-level schedule");
        }
        const auto r = static_cast<Eigen::Index>(j);
        CycleTrace tr{j, series.schedule()[j], series.values().row(r).segment(c0, k).transpose(),
                      roll.row(r).transpose(), 0.0};
        tr.correlation = pearson(tr.predicted, tr.truth);
        t.traces.push_back(std::move(tr));
    }
    return t;
}

// ---- reports ---------------------------------------------------------------

std::string ablation_csv(const std::vector<AblationRow>& rows) {
    std::string s = "target,n_cycles,rmse_mps\n";
    for (const auto& r : rows) s += r.target.str() + ',' + std::to_string(r.n_cycles) + ',' + fmt6(r.rmse) + '\n';
    return s;
}

std::string monthly_csv(const MonthlyTable& t) {
    std::string s = "month,rolling_rmse_mps,fixed_rmse_mps\n";
    for (const auto& r : t.rows) s += r.target.str() + ',' + fmt6(r.rolling_rmse) + ',' + fmt6(r.fixed_rmse) + '\n';
    s += "mean," + fmt6(t.mean_rolling) + ',' + fmt6(t.mean_fixed) + '\n';
    return s;
}

std::string compare_csv(const CompareTable& t) {
    std::string s = "method,detail,rmse_mps\n";
    for (const auto& r : t.rows) s += r.method + ',' + r.detail + ',' + fmt6(r.rmse) + '\n';
    return s;
}

std::string cycle_csv(const CycleTable& t) {
    std::string s = "depth_index,depth_m,month,truth_mps,predicted_mps,correlation\n";
    for (const auto& tr : t.traces) {
        for (Eigen::Index i = 0; i < tr.truth.size(); ++i) {
            s += std::to_string(tr.depth_index) + ',' + fmt6(tr.depth_m) + ',' +
                 (t.target + static_cast<int>(i)).str() + ',' + fmt6(tr.truth[i]) + ',' + fmt6(tr.predicted[i]) +
                 ',' + fmt6(tr.correlation) + '\n';
        }
    }
    return s;
}

namespace {

std::string num(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", v);
    return buf;
}

std::string escape(const std::string& s) {
    std::string out;
    for (char c : s) {
        switch (c) {
            case '&': out += "&amp;"; break;
            case '<': out += "&lt;"; break;
            case '>': out += "&gt;"; break;
            default: out += c;
        }
    }
    return out;
}

std::string tick_label(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.4g", v);
    return buf;
}

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#17becf"};

}  // namespace

std::string render_svg(const SvgPlot& plot) {
    constexpr double W = 640, H = 420, L = 70, R = 150, T = 40, B = 50;
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& s : plot.series) {
        if (s.x.size() != s.y.size()) throw DimensionError("svg series '" + s.name + "' has mismatched x and y");
        for (std::size_t i = 0; i < s.x.size(); ++i) {
            x0 = std::min(x0, s.x[i]);
            x1 = std::max(x1, s.x[i]);
            y0 = std::min(y0, s.y[i]);
            y1 = std::max(y1, s.y[i]);
        }
    }
    if (!std::isfinite(x0)) x0 = 0, x1 = 1, y0 = 0, y1 = 1;
    if (x1 == x0) x1 = x0 + 1;
    if (y1 == y0) y0 -= 0.5, y1 += 0.5;
    const double pw = W - L - R, ph = H - T - B;
    auto px = [&](double x) { return L + (x - x0) / (x1 - x0) * pw; };
    auto py = [&](double y) {
        const double f = (y - y0) / (y1 - y0);
        return plot.invert_y ? T + f * ph : T + (1.0 - f) * ph;
    };

    std::ostringstream o;
    o << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\" viewBox=\"0 0 " << W
      << ' ' << H << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
    o << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    o << "<text x=\"" << num(L + pw / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
      << escape(plot.title) << "</text>\n";
    o << "<rect x=\"" << num(L) << "\" y=\"" << num(T) << "\" width=\"" << num(pw) << "\" height=\"" << num(ph)
      << "\" fill=\"none\" stroke=\"#444\"/>\n";
    for (int k = 0; k <= 4; ++k) {
        const double xv = x0 + (x1 - x0) * k / 4.0, yv = y0 + (y1 - y0) * k / 4.0;
        o << "<text x=\"" << num(px(xv)) << "\" y=\"" << num(T + ph + 16) << "\" text-anchor=\"middle\">"
          << tick_label(xv) << "</text>\n";
        o << "<text x=\"" << num(L - 6) << "\" y=\"" << num(py(yv) + 4) << "\" text-anchor=\"end\">"
          << tick_label(yv) << "</text>\n";
    }
    o << "<text x=\"" << num(L + pw / 2) << "\" y=\"" << num(H - 10) << "\" text-anchor=\"middle\">"
      << escape(plot.x_label) << "</text>\n";
    o << "<text x=\"16\" y=\"" << num(T + ph / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << num(T + ph / 2) << ")\">" << escape(plot.y_label) << "</text>\n";
    for (std::size_t k = 0; k < plot.series.size(); ++k) {
        const auto& s = plot.series[k];
        const char* colour = kPalette[k % std::size(kPalette)];
        o << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
        for (std::size_t i = 0; i < s.x.size(); ++i) o << (i ? " " : "") << num(px(s.x[i])) << ',' << num(py(s.y[i]));
        o << "\"/>\n";
        const double ly = T + 14.0 * static_cast<double>(k) + 8.0;
        o << "<line x1=\"" << num(W - R + 10) << "\" y1=\"" << num(ly) << "\" x2=\"" << num(W - R + 30)
          << "\" y2=\"" << num(ly) << "\" stroke=\"" << colour << "\" stroke-width=\"2\"/>\n";
        o << "<text x=\"" << num(W - R + 34) << "\" y=\"" << num(ly + 4) << "\">" << escape(s.name) << "</text>\n";
    }
    o << "</svg>\n";
    return o.str();
}

std::string ablation_svg(const std::vector<AblationRow>& rows) {
    SvgPlot p{"Window ablation", "training cycles n", "RMSE (m/s)", false, {}};
    for (const auto& r : rows) {
        const std::string name = r.target.str();
        auto it = std::find_if(p.series.begin(), p.series.end(), [&](const SvgSeries& s) { return s.name == name; });
        if (it == p.series.end()) it = p.series.insert(p.series.end(), SvgSeries{name, {}, {}});
        it->x.push_back(r.n_cycles);
        it->y.push_back(r.rmse);
    }
    return render_svg(p);
}

std::string monthly_svg(const MonthlyTable& t) {
    SvgPlot p{"Monthly RMSE " + std::to_string(t.year), "month", "RMSE (m/s)", false,
              {{"rolling origin", {}, {}}, {"fixed origin", {}, {}}}};
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        for (auto& s : p.series) s.x.push_back(static_cast<double>(i + 1));
        p.series[0].y.push_back(t.rows[i].rolling_rmse);
        p.series[1].y.push_back(t.rows[i].fixed_rmse);
    }
    return render_svg(p);
}

std::string compare_svg(const CompareTable& t, const DepthSchedule& sched, double step) {
    SvgPlot p{"Predicted profiles " + t.target.str(), "sound speed (m/s)", "depth (m)", true, {}};
    auto add = [&](const std::string& name, const Eigen::VectorXd& v) {
        const Profile prof = interpolate_full_depth(v, sched, step);
        SvgSeries s{name, {}, {}};
        for (const Sample& smp : prof.samples()) {
            s.x.push_back(smp.speed_mps);
            s.y.push_back(smp.depth_m);
        }
        p.series.push_back(std::move(s));
    };
    add("truth", t.truth);
    for (const auto& r : t.rows) add(r.method, r.prediction);
    return render_svg(p);
}

std::string cycle_svg(const CycleTable& t) {
    SvgPlot p{"Cycle tracking from " + t.target.str(), "step (months)", "sound speed (m/s)", false, {}};
    for (const auto& tr : t.traces) {
        SvgSeries truth{"truth " + tick_label(tr.depth_m) + " m", {}, {}};
        SvgSeries pred{"pred " + tick_label(tr.depth_m) + " m", {}, {}};
        for (Eigen::Index i = 0; i < tr.truth.size(); ++i) {
            truth.x.push_back(static_cast<double>(i + 1));
            truth.y.push_back(tr.truth[i]);
            pred.x.push_back(static_cast<double>(i + 1));
            pred.y.push_back(tr.predicted[i]);
        }
        p.series.push_back(std::move(truth));
        p.series.push_back(std::move(pred));
    }
    return render_svg(p);
}

std::string report_stem(const std::string& experiment, const std::string& target, std::uint64_t seed) {
    return experiment + '_' + target + '_' + std::to_string(seed);
}

std::pair<std::filesystem::path, std::filesystem::path> write_report(const std::filesystem::path& dir,
                                                                     const std::string& stem, const std::string& csv,
                                                                     const std::string& svg) {
    std::filesystem::create_directories(dir);
    const auto csv_path = dir / (stem + ".csv");
    const auto svg_path = dir / (stem + ".svg");
    for (const auto& [path, text] : {std::pair{csv_path, &csv}, std::pair{svg_path, &svg}}) {
        std::ofstream out(path, std::ios::binary | std::ios::trunc);
        if (!out) throw ValidationError("cannot write " + path.string());
        out << *text;
    }
    return {csv_path, svg_path};
}

}  // namespace sspred
