#include "sspred/ssp_core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "sspred/errors.hpp"

namespace sspred {

namespace {

// Exact at sample depths; linear between them. Caller guarantees x is within span.
double interp_sorted(std::span<const Sample> samples, double x) {
    auto it = std::lower_bound(samples.begin(), samples.end(), x,
                               [](const Sample& s, double d) { return s.depth_m < d; });
    if (it != samples.end() && it->depth_m == x) return it->speed_mps;
    const Sample& hi = *it;
    const Sample& lo = *(it - 1);
    const double frac = (x - lo.depth_m) / (hi.depth_m - lo.depth_m);
    return lo.speed_mps + (hi.speed_mps - lo.speed_mps) * frac;
}

std::string fmt_depth(double d) {
    std::string s = std::to_string(d);
    s.erase(s.find_last_not_of('0') + 1);
    if (!s.empty() && s.back() == '.') s.pop_back();
    return s;
}

}  // namespace

Profile::Profile(Month month, std::vector<Sample> samples, SpeedBand band)
    : month_(month), samples_(std::move(samples)) {
    const std::string where = "profile " + month_.str() + ": ";
    if (samples_.size() < 2) {
        throw ValidationError(where + "needs at least 2 samples, got " + std::to_string(samples_.size()));
    }
    for (std::size_t k = 0; k < samples_.size(); ++k) {
        const Sample& s = samples_[k];
        if (!std::isfinite(s.depth_m) || s.depth_m < 0.0) {
            throw ValidationError(where + "invalid depth " + std::to_string(s.depth_m));
        }
        if (k > 0 && !(s.depth_m > samples_[k - 1].depth_m)) {
            throw ValidationError(where + "depths not strictly increasing at " + fmt_depth(s.depth_m) + " m");
        }
        if (!std::isfinite(s.speed_mps) || s.speed_mps < band.lo || s.speed_mps > band.hi) {
            throw ValidationError(where + "speed " + std::to_string(s.speed_mps) + " m/s at " +
                                  fmt_depth(s.depth_m) + " m outside accepted band");
        }
    }
}

double Profile::speed_at(double depth_m, bool clamp) const {
    if (depth_m < min_depth() || depth_m > max_depth()) {
        if (!clamp) {
            throw OutOfRangeError("profile " + month_.str() + ": depth " + fmt_depth(depth_m) +
                                  " m outside sampled span [" + fmt_depth(min_depth()) + ", " +
                                  fmt_depth(max_depth()) + "]");
        }
        return depth_m < min_depth() ? samples_.front().speed_mps : samples_.back().speed_mps;
    }
    return interp_sorted(samples_, depth_m);
}

DepthSchedule DepthSchedule::paper58() {
    std::vector<double> levels{0.0, 5.0, 10.0};
    for (int d = 20; d <= 180; d += 10) levels.push_back(d);
    for (int d = 200; d <= 460; d += 20) levels.push_back(d);
    for (int d = 500; d <= 1250; d += 50) levels.push_back(d);
    for (int d = 1300; d <= 1900; d += 100) levels.push_back(d);
    levels.push_back(1975.0);
    return DepthSchedule(std::move(levels));
}

DepthSchedule DepthSchedule::custom(std::vector<double> levels) {
    if (levels.empty()) throw ValidationError("depth schedule is empty");
    if (levels.front() != 0.0) {
        throw ValidationError("depth schedule must start at 0 m, got " + fmt_depth(levels.front()));
    }
    for (std::size_t j = 1; j < levels.size(); ++j) {
        if (!std::isfinite(levels[j]) || !(levels[j] > levels[j - 1])) {
            throw ValidationError("depth schedule not strictly increasing at level " + std::to_string(j));
        }
    }
    return DepthSchedule(std::move(levels));
}

DepthSchedule build_depth_schedule_paper58() { return DepthSchedule::paper58(); }

LayeredSeries::LayeredSeries(DepthSchedule schedule, Month start, Eigen::MatrixXd values)
    : schedule_(std::move(schedule)), start_(start), values_(std::move(values)) {
    if (static_cast<std::size_t>(values_.rows()) != schedule_.size()) {
        throw DimensionError("series has " + std::to_string(values_.rows()) + " rows but schedule has " +
                             std::to_string(schedule_.size()) + " levels");
    }
    if (values_.cols() < 1) throw DimensionError("series has no months");
    if (!values_.allFinite()) throw ValidationError("series contains non-finite speeds");
}

Eigen::Index LayeredSeries::column_of(Month m) const {
    if (!contains(m)) {
        throw WindowError("month " + m.str() + " outside series span " + start_.str() + ".." + end().str());
    }
    return m - start_;
}

double NormParams::normalize(Eigen::Index j, double x) const {
    if (constant_row(j)) return 0.5;
    return (x - min[j]) / (max[j] - min[j]);
}

double NormParams::denormalize(Eigen::Index j, double v) const {
    if (constant_row(j)) return min[j];
    return v * (max[j] - min[j]) + min[j];
}

Eigen::VectorXd layer_profile(const Profile& p, const DepthSchedule& sched, bool clamp) {
    Eigen::VectorXd out(static_cast<Eigen::Index>(sched.size()));
    for (std::size_t j = 0; j < sched.size(); ++j) {
        out[static_cast<Eigen::Index>(j)] = p.speed_at(sched[j], clamp);
    }
    return out;
}

LayeredSeries assemble_series(std::span<const Profile> profiles, const DepthSchedule& sched, bool clamp) {
    if (profiles.empty()) throw ValidationError("no profiles to assemble");
    Eigen::MatrixXd values(static_cast<Eigen::Index>(sched.size()), static_cast<Eigen::Index>(profiles.size()));
    for (std::size_t i = 0; i < profiles.size(); ++i) {
        if (i > 0) {
            const Month prev = profiles[i - 1].month();
            const Month cur = profiles[i].month();
            if (cur == prev) throw ChronologyError("duplicate month " + cur.str());
            if (cur != prev + 1) {
                throw ChronologyError("chronology break: " + prev.str() + " followed by " + cur.str());
            }
        }
        values.col(static_cast<Eigen::Index>(i)) = layer_profile(profiles[i], sched, clamp);
    }
    return LayeredSeries(sched, profiles.front().month(), std::move(values));
}

Eigen::MatrixXd split_train(const LayeredSeries& s, const WindowSpec& w) {
    if (w.cycle_length < 1 || w.n_cycles < 1) {
        throw WindowError("window needs cycle length >= 1 and cycles >= 1");
    }
    const Month first = w.first_train_month();
    const Month last = w.last_train_month();
    if (first < s.start() || last > s.end()) {
        Month miss_lo = first < s.start() ? first : s.end() + 1;
        Month miss_hi = first < s.start() ? std::min(s.start() - 1, last) : last;
        throw WindowError("training window " + first.str() + ".." + last.str() + " for target " + w.target.str() +
                          " needs missing months " + miss_lo.str() + ".." + miss_hi.str() + " (series spans " +
                          s.start().str() + ".." + s.end().str() + ")");
    }
    return s.values().middleCols(s.column_of(first), w.train_months());
}

TrainValidation split_train_validation(const LayeredSeries& s, const WindowSpec& w) {
    Eigen::MatrixXd train = split_train(s, w);
    if (!s.contains(w.target)) {
        throw WindowError("target month " + w.target.str() + " outside series span " + s.start().str() + ".." +
                          s.end().str());
    }
    return {std::move(train), s.values().col(s.column_of(w.target))};
}

NormParams fit_norm(const Eigen::MatrixXd& t) {
    if (t.rows() == 0 || t.cols() == 0) throw DimensionError("cannot fit normalization on an empty matrix");
    return {t.rowwise().minCoeff(), t.rowwise().maxCoeff()};
}

Eigen::MatrixXd apply_norm(const Eigen::MatrixXd& t, const NormParams& p) {
    if (static_cast<std::size_t>(t.rows()) != p.rows()) {
        throw DimensionError("normalization has " + std::to_string(p.rows()) + " rows, matrix has " +
                             std::to_string(t.rows()));
    }
    Eigen::MatrixXd out(t.rows(), t.cols());
    for (Eigen::Index j = 0; j < t.rows(); ++j) {
        for (Eigen::Index i = 0; i < t.cols(); ++i) out(j, i) = p.normalize(j, t(j, i));
    }
    return out;
}

Eigen::MatrixXd denorm_matrix(const Eigen::MatrixXd& values, const NormParams& p) {
    if (static_cast<std::size_t>(values.rows()) != p.rows()) {
        throw DimensionError("normalization has " + std::to_string(p.rows()) + " rows, values have " +
                             std::to_string(values.rows()));
    }
    Eigen::MatrixXd out(values.rows(), values.cols());
    for (Eigen::Index j = 0; j < values.rows(); ++j) {
        for (Eigen::Index i = 0; i < values.cols(); ++i) out(j, i) = p.denormalize(j, values(j, i));
    }
    return out;
}

Eigen::VectorXd denorm(const Eigen::VectorXd& values, const NormParams& p) {
    return denorm_matrix(values, p).col(0);
}

Profile interpolate_full_depth(const Eigen::VectorXd& layered, const DepthSchedule& sched, double step,
                               Month month) {
    if (static_cast<std::size_t>(layered.size()) != sched.size()) {
        throw DimensionError("layered vector has " + std::to_string(layered.size()) + " values, schedule has " +
                             std::to_string(sched.size()) + " levels");
    }
    if (!(step > 0.0)) throw ValidationError("interpolation step must be positive");
    std::vector<Sample> nodes(sched.size());
    for (std::size_t j = 0; j < sched.size(); ++j) nodes[j] = {sched[j], layered[static_cast<Eigen::Index>(j)]};
    if (nodes.size() == 1) {
        // Single-level schedule: a degenerate two-sample profile at depth 0.
        return Profile(month, {nodes[0], {step, nodes[0].speed_mps}}, SpeedBand::any());
    }

    const double last = sched.last();
    const auto count = static_cast<std::size_t>(std::floor(last / step + 1e-9)) + 1;
    std::vector<Sample> out;
    out.reserve(count + 1);
    for (std::size_t k = 0; k < count; ++k) {
        const double z = std::min(static_cast<double>(k) * step, last);
        out.push_back({z, interp_sorted(nodes, z)});
    }
    if (out.back().depth_m < last) out.push_back({last, nodes.back().speed_mps});
    return Profile(month, std::move(out), SpeedBand::any());
}

}  // namespace sspred
