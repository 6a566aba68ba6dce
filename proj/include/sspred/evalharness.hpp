#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "sspred/baselines.hpp"
#include "sspred/hlstm.hpp"
#include "sspred/ssp_core.hpp"

namespace sspred {

// ---- metrics ---------------------------------------------------------------

/// Root mean squared elementwise difference. Throws DimensionError on length mismatch.
double rmse(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth);

/// RMSE on the common grid 0, step, 2*step, ... up to the shared maximum depth.
/// Both profiles must start at 0 m and end at the same depth.
double rmse_full_depth(const Profile& pred, const Profile& truth, double step = 1.0);

/// Full-depth RMSE of two layered vectors after interpolation onto the dense grid.
double rmse_layered_full_depth(const Eigen::VectorXd& pred, const Eigen::VectorXd& truth, const DepthSchedule& sched,
                               double step = 1.0);

/// Pearson correlation; 0 when either input has zero variance.
double pearson(const Eigen::VectorXd& a, const Eigen::VectorXd& b);

struct RmseReport {
    std::string method;
    Month target;
    std::string window;
    double aggregate_rmse = 0.0;
    std::vector<std::pair<double, double>> per_depth_abs_err;  // (depth m, |error| m/s) per layer
};

RmseReport make_report(std::string method, const Eigen::VectorXd& pred, const Eigen::VectorXd& truth,
                       const DepthSchedule& sched, Month target, std::string window, double step = 1.0);

// ---- synthetic ocean -------------------------------------------------------

/// Monthly profiles with a mixed layer over a Munk-like sound channel, a
/// 12-month cycle that fades with depth, an optional linear trend and
/// depth-scaled noise with a persistent component.
struct SynthSpec {
    std::uint64_t seed = 1;
    int months = 60;
    Month start = Month::from_ym(2017, 1);
    int cycle_length = 12;

    double channel_speed = 1500.0;     // speed at the channel axis, m/s
    double channel_axis_m = 1100.0;
    double channel_scale_m = 1100.0;   // vertical scale of the Munk profile
    double mixed_layer_m = 60.0;
    double mixed_layer_gradient = 0.017;  // m/s per m inside the mixed layer
    /// Scales the departure of the mean profile from channel_speed; 0 gives a uniform ocean.
    double vertical_structure = 1.0;

    double seasonal_amplitude = 4.0;   // m/s at the surface
    double seasonal_decay_m = 150.0;   // e-folding depth of the seasonal signal
    double seasonal_lag_months_per_km = 2.0;

    double trend_per_year = 0.3;  // m/s per year at the surface
    double trend_decay_m = 1000.0;

    /// White noise std at the surface (m/s). A persistent, vertically coherent
    /// AR(1) anomaly with std anomaly_ratio * noise_sigma rides on top, so
    /// noise_sigma = 0 switches off every stochastic part.
    double noise_sigma = 0.2;
    double noise_floor = 0.25;  // deep white noise as a fraction of noise_sigma
    double anomaly_ratio = 4.0;
    double anomaly_persistence = 0.9;
    double anomaly_decay_m = 1000.0;

    /// Sample depths of every generated profile; empty means the 58-level schedule.
    std::vector<double> depths;

    /// Throws ValidationError on months < 13, negative sigma or non-finite values.
    void validate() const;

    /// Uniform ocean: channel_speed at every depth and month.
    static SynthSpec constant_ocean(std::uint64_t seed = 1);
    /// Pure seasonal cycle without noise, trend or anomaly.
    static SynthSpec sinusoidal_ocean(std::uint64_t seed = 1);
};

std::vector<Profile> synth_generate(const SynthSpec& spec);

// ---- experiments -----------------------------------------------------------

struct HarnessConfig {
    Hyperparams hp;
    MlpHyper mlp;
    int cycle_length = 12;
    int n_cycles = 4;
    int poly_degree = 8;
    int poly_cycles = 2;
    MeanMode mean_mode = MeanMode::same_month;
    double step = 1.0;
    std::uint64_t seed = 1;
    /// Use retrain_until_stable instead of a single training run.
    bool retrain = false;
    double retrain_delta = 0.05;
    int retrain_max_rounds = 5;

    WindowSpec window(Month target, int n_cycles_override = 0) const;
};

/// H-LSTM bank for the window ending just before `target`, honouring cfg.retrain.
ModelBank harness_train(const LayeredSeries& series, const WindowSpec& w, const HarnessConfig& cfg);

struct AblationRow {
    Month target;
    int n_cycles = 0;
    double rmse = 0.0;
};

std::vector<AblationRow> experiment_window_ablation(const LayeredSeries& series, const std::vector<Month>& targets,
                                                    const std::vector<int>& n_values, const HarnessConfig& cfg);

struct MonthlyRow {
    Month target;
    double rolling_rmse = 0.0;  // retrained on the 4 cycles before each month
    double fixed_rmse = 0.0;    // one bank trained before January, rolled out autoregressively
};

struct MonthlyTable {
    int year = 0;
    std::vector<MonthlyRow> rows;
    double mean_rolling = 0.0;
    double mean_fixed = 0.0;
};

MonthlyTable experiment_monthly(const LayeredSeries& series, int year, const HarnessConfig& cfg);

struct CompareRow {
    std::string method;
    std::string detail;
    double rmse = 0.0;
    Eigen::VectorXd prediction;
};

struct CompareTable {
    Month target;
    Eigen::VectorXd truth;
    std::vector<CompareRow> rows;  // H-LSTM, polynomial, mean, BP

    const CompareRow& row(const std::string& method) const;
};

CompareTable experiment_compare(const LayeredSeries& series, Month target, const HarnessConfig& cfg);

struct CycleTrace {
    std::size_t depth_index = 0;
    double depth_m = 0.0;
    Eigen::VectorXd truth;
    Eigen::VectorXd predicted;
    double correlation = 0.0;
};

struct CycleTable {
    Month target;
    std::vector<CycleTrace> traces;
};

/// Trains on the cycles before `target` and rolls out k months from it.
CycleTable experiment_cycle_tracking(const LayeredSeries& series, Month target,
                                     const std::vector<std::size_t>& depth_indices, int k, const HarnessConfig& cfg);

// ---- reports ---------------------------------------------------------------

std::string ablation_csv(const std::vector<AblationRow>& rows);
std::string monthly_csv(const MonthlyTable& t);
std::string compare_csv(const CompareTable& t);
std::string cycle_csv(const CycleTable& t);

struct SvgSeries {
    std::string name;
    std::vector<double> x;
    std::vector<double> y;
};

struct SvgPlot {
    std::string title;
    std::string x_label;
    std::string y_label;
    bool invert_y = false;  // depth axes grow downward
    std::vector<SvgSeries> series;
};

std::string render_svg(const SvgPlot& plot);

std::string ablation_svg(const std::vector<AblationRow>& rows);
std::string monthly_svg(const MonthlyTable& t);
/// Full-depth profiles of the truth and every method, depth downward.
std::string compare_svg(const CompareTable& t, const DepthSchedule& sched, double step);
std::string cycle_svg(const CycleTable& t);

/// `<experiment>_<target>_<seed>` with target formatted YYYY-MM.
std::string report_stem(const std::string& experiment, const std::string& target, std::uint64_t seed);

/// Writes `<stem>.csv` and `<stem>.svg` under dir; returns the two paths.
std::pair<std::filesystem::path, std::filesystem::path> write_report(const std::filesystem::path& dir,
                                                                     const std::string& stem, const std::string& csv,
                                                                     const std::string& svg);

}  // namespace sspred
