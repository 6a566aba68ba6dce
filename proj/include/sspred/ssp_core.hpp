#pragma once

#include <cstddef>
#include <limits>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "sspred/month.hpp"

namespace sspred {

/// One (depth, speed) observation of a profile.
struct Sample {
    double depth_m = 0.0;
    double speed_mps = 0.0;

    bool operator==(const Sample&) const = default;
};

/// Accepted sound speed range in m/s. Profiles outside it are rejected.
struct SpeedBand {
    double lo = 1300.0;
    double hi = 1700.0;

    /// Accepts any finite speed. Used for model outputs.
    static SpeedBand any() {
        return {-std::numeric_limits<double>::max(), std::numeric_limits<double>::max()};
    }
};

/// One month's sound speed profile with strictly increasing, non-negative depths.
class Profile {
public:
    /// Throws ValidationError if any invariant is violated.
    Profile(Month month, std::vector<Sample> samples, SpeedBand band = {});

    Month month() const { return month_; }
    const std::vector<Sample>& samples() const { return samples_; }
    double min_depth() const { return samples_.front().depth_m; }
    double max_depth() const { return samples_.back().depth_m; }

    /// Linear interpolation at `depth_m`. With `clamp`, depths outside the
    /// sampled span take the nearest endpoint; otherwise they throw OutOfRangeError.
    double speed_at(double depth_m, bool clamp = false) const;

private:
    Month month_;
    std::vector<Sample> samples_;
};

class DepthSchedule {
public:
    /// The standardized 58-level grid: 0-10 m every 5 m, 10-180 m every 10 m,
    /// 180-460 m every 20 m, 500-1250 m every 50 m, 1300-1900 m every 100 m, then 1975 m.
    static DepthSchedule paper58();
    /// Throws ValidationError unless levels are non-empty, start at 0 and strictly increase.
    static DepthSchedule custom(std::vector<double> levels);

    std::size_t size() const { return levels_.size(); }
    const std::vector<double>& levels() const { return levels_; }
    double operator[](std::size_t j) const { return levels_[j]; }
    double last() const { return levels_.back(); }

    bool operator==(const DepthSchedule&) const = default;

private:
    explicit DepthSchedule(std::vector<double> levels) : levels_(std::move(levels)) {}

    std::vector<double> levels_;
};

/// J x I speed matrix: row j is schedule level j, column i is month start + i.
class LayeredSeries {
public:
    LayeredSeries(DepthSchedule schedule, Month start, Eigen::MatrixXd values);

    const DepthSchedule& schedule() const { return schedule_; }
    Month start() const { return start_; }
    Month end() const { return start_ + static_cast<int>(values_.cols()) - 1; }
    const Eigen::MatrixXd& values() const { return values_; }
    std::size_t levels() const { return static_cast<std::size_t>(values_.rows()); }
    std::size_t months() const { return static_cast<std::size_t>(values_.cols()); }

    bool contains(Month m) const { return m >= start_ && m <= end(); }
    /// Column index of `m`; throws WindowError when `m` is outside the series.
    Eigen::Index column_of(Month m) const;

private:
    DepthSchedule schedule_;
    Month start_;
    Eigen::MatrixXd values_;
};

/// Per-row min/max fitted on a training window.
struct NormParams {
    Eigen::VectorXd min;
    Eigen::VectorXd max;

    std::size_t rows() const { return static_cast<std::size_t>(min.size()); }
    bool constant_row(Eigen::Index j) const { return max[j] == min[j]; }
    double normalize(Eigen::Index j, double x) const;
    double denormalize(Eigen::Index j, double v) const;
};

/// Training window: the n cycles of length C immediately preceding `target`.
struct WindowSpec {
    int cycle_length = 12;
    int n_cycles = 4;
    Month target;

    int train_months() const { return cycle_length * n_cycles; }
    Month first_train_month() const { return target - train_months(); }
    Month last_train_month() const { return target - 1; }
};

struct TrainValidation {
    Eigen::MatrixXd train;       // J x nC
    Eigen::VectorXd validation;  // J
};

DepthSchedule build_depth_schedule_paper58();

/// Speeds at every schedule level by linear interpolation of the profile.
Eigen::VectorXd layer_profile(const Profile& p, const DepthSchedule& sched, bool clamp = false);

/// Profiles must be consecutive months with no gaps or duplicates.
LayeredSeries assemble_series(std::span<const Profile> profiles, const DepthSchedule& sched,
                              bool clamp = false);

/// Training matrix only; the target month itself need not be in the series.
Eigen::MatrixXd split_train(const LayeredSeries& s, const WindowSpec& w);
TrainValidation split_train_validation(const LayeredSeries& s, const WindowSpec& w);

NormParams fit_norm(const Eigen::MatrixXd& t);
Eigen::MatrixXd apply_norm(const Eigen::MatrixXd& t, const NormParams& p);
Eigen::VectorXd denorm(const Eigen::VectorXd& values, const NormParams& p);
Eigen::MatrixXd denorm_matrix(const Eigen::MatrixXd& values, const NormParams& p);

/// Samples at 0, step, 2*step, ... up to the last schedule level (which is
/// always included), linear between levels. The result carries `month`.
Profile interpolate_full_depth(const Eigen::VectorXd& layered, const DepthSchedule& sched,
                               double step = 1.0, Month month = {});

}  // namespace sspred
