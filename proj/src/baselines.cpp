#include "sspred/baselines.hpp"

#include <cmath>

#include "sspred/errors.hpp"
#include "sspred/nn_math.hpp"

namespace sspred {

std::string mean_mode_name(MeanMode m) { return m == MeanMode::same_month ? "same_month" : "all_months"; }

MeanMode parse_mean_mode(const std::string& s) {
    if (s == "same_month") return MeanMode::same_month;
    if (s == "all_months") return MeanMode::all_months;
    throw ValidationError("unknown mean mode '" + s + "' (expected same_month or all_months)");
}

Eigen::VectorXd mean_predict(const LayeredSeries& series, const WindowSpec& w, MeanMode mode) {
    const Eigen::MatrixXd train = split_train(series, w);
    if (mode == MeanMode::all_months) return train.rowwise().mean();
    // The window starts exactly n cycles before the target, so columns 0, C, 2C, ... share its phase.
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(train.rows());
    int count = 0;
    for (Eigen::Index i = 0; i < train.cols(); i += w.cycle_length) {
        sum += train.col(i);
        ++count;
    }
    return sum / count;
}

double PolyFit::evaluate(double depth_m) const {
    const double z = depth_m / depth_scale;
    double acc = 0.0;
    for (Eigen::Index i = coefficients.size() - 1; i >= 0; --i) acc = acc * z + coefficients[i];
    return acc;
}

Eigen::VectorXd PolyFit::evaluate(const DepthSchedule& sched) const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(sched.size()));
    for (std::size_t j = 0; j < sched.size(); ++j) out[static_cast<Eigen::Index>(j)] = evaluate(sched[j]);
    return out;
}

namespace {

double scale_of(const DepthSchedule& sched) {
    const double last = sched[sched.size() - 1];
    return last > 0.0 ? last : 1.0;
}

}  // namespace

Eigen::MatrixXd poly_design(const DepthSchedule& sched, int degree) {
    const double scale = scale_of(sched);
    Eigen::MatrixXd V(static_cast<Eigen::Index>(sched.size()), degree + 1);
    for (std::size_t j = 0; j < sched.size(); ++j) {
        const double z = sched[j] / scale;
        double p = 1.0;
        for (int i = 0; i <= degree; ++i) {
            V(static_cast<Eigen::Index>(j), i) = p;
            p *= z;
        }
    }
    return V;
}

PolyFit poly_fit(const Eigen::VectorXd& profile, const DepthSchedule& sched, int degree) {
    if (degree < 1) throw ValidationError("polynomial degree must be >= 1, got " + std::to_string(degree));
    if (static_cast<std::size_t>(profile.size()) != sched.size()) {
        throw DimensionError("profile has " + std::to_string(profile.size()) + " values for " +
                             std::to_string(sched.size()) + " levels");
    }
    if (static_cast<std::size_t>(degree) + 1 > sched.size()) {
        throw ValidationError("polynomial degree " + std::to_string(degree) + " needs at least " +
                              std::to_string(degree + 1) + " levels, schedule has " + std::to_string(sched.size()));
    }
    const Eigen::MatrixXd V = poly_design(sched, degree);
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(V);
    if (qr.rank() < degree + 1) throw ValidationError("polynomial design matrix is rank deficient");
    return PolyFit{degree, qr.solve(profile), scale_of(sched)};
}

Eigen::VectorXd poly_predict(const LayeredSeries& series, const WindowSpec& w, int degree) {
    const Eigen::VectorXd mean = split_train(series, w).rowwise().mean();
    return poly_fit(mean, series.schedule(), degree).evaluate(series.schedule());
}

void MlpHyper::validate() const {
    if (window < 1) throw ValidationError("mlp window must be >= 1");
    if (hidden < 1) throw ValidationError("mlp hidden width must be >= 1");
    if (!(lr > 0.0) || !std::isfinite(lr)) throw ValidationError("mlp learning rate must be positive");
    if (epochs < 1) throw ValidationError("mlp epochs must be >= 1");
    if (!(clip_norm > 0.0)) throw ValidationError("mlp clip norm must be positive");
}

Eigen::VectorXd MlpParams::flatten() const {
    Eigen::VectorXd flat(param_count());
    Eigen::Index k = 0;
    flat.segment(k, W1.size()) = Eigen::Map<const Eigen::VectorXd>(W1.data(), W1.size());
    k += W1.size();
    flat.segment(k, b1.size()) = b1;
    k += b1.size();
    flat.segment(k, w2.size()) = w2;
    k += w2.size();
    flat[k] = b2;
    return flat;
}

void MlpParams::unflatten(const Eigen::VectorXd& flat) {
    if (flat.size() != param_count()) throw DimensionError("mlp parameter vector has the wrong length");
    Eigen::Index k = 0;
    Eigen::Map<Eigen::VectorXd>(W1.data(), W1.size()) = flat.segment(k, W1.size());
    k += W1.size();
    b1 = flat.segment(k, b1.size());
    k += b1.size();
    w2 = flat.segment(k, w2.size());
    k += w2.size();
    b2 = flat[k];
}

void MlpParams::validate() const {
    if (W1.rows() < 1 || W1.cols() < 1 || b1.size() != W1.rows() || w2.size() != W1.rows()) {
        throw DimensionError("mlp parameter shapes are inconsistent");
    }
    if (!W1.allFinite() || !b1.allFinite() || !w2.allFinite() || !std::isfinite(b2)) {
        throw ValidationError("mlp parameters contain non-finite values");
    }
}

MlpParams MlpParams::init(Eigen::Index window, Eigen::Index hidden, std::uint64_t seed) {
    nn::Rng rng(seed);
    MlpParams p;
    p.W1.resize(hidden, window);
    p.b1 = Eigen::VectorXd::Zero(hidden);
    p.w2.resize(hidden);
    const double a1 = 1.0 / std::sqrt(static_cast<double>(window));
    const double a2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    for (Eigen::Index c = 0; c < window; ++c) {
        for (Eigen::Index r = 0; r < hidden; ++r) p.W1(r, c) = rng.uniform(-a1, a1);
    }
    for (Eigen::Index r = 0; r < hidden; ++r) p.w2[r] = rng.uniform(-a2, a2);
    return p;
}

double mlp_forward(const MlpParams& p, const Eigen::VectorXd& x) {
    if (x.size() != p.window()) throw DimensionError("mlp input has the wrong length");
    const Eigen::VectorXd h = (p.W1 * x + p.b1).array().tanh().matrix();
    return p.w2.dot(h) + p.b2;
}

MlpLossGrad mlp_loss_grad(const MlpParams& p, const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
    if (X.rows() != p.window() || X.cols() != y.size() || X.cols() < 1) {
        throw DimensionError("mlp training batch has inconsistent shapes");
    }
    const double m = static_cast<double>(X.cols());
    const Eigen::MatrixXd H = ((p.W1 * X).colwise() + p.b1).array().tanh().matrix();
    const Eigen::VectorXd pred = (H.transpose() * p.w2).array() + p.b2;
    const Eigen::VectorXd err = pred - y;

    MlpParams g;
    const Eigen::VectorXd dpred = (2.0 / m) * err;
    g.w2 = H * dpred;
    g.b2 = dpred.sum();
    const Eigen::MatrixXd dpre = ((p.w2 * dpred.transpose()).array() * (1.0 - H.array().square())).matrix();
    g.W1 = dpre * X.transpose();
    g.b1 = dpre.rowwise().sum();
    return {err.squaredNorm() / m, g.flatten()};
}

void mlp_windows(const Eigen::RowVectorXd& row, int window, Eigen::MatrixXd& X, Eigen::VectorXd& y) {
    const Eigen::Index count = row.size() - window;
    if (window < 1 || count < 1) {
        throw WindowError("mlp window " + std::to_string(window) + " needs more than " + std::to_string(window) +
                          " training months, have " + std::to_string(row.size()));
    }
    X.resize(window, count);
    y.resize(count);
    for (Eigen::Index i = 0; i < count; ++i) {
        X.col(i) = row.segment(i, window).transpose();
        y[i] = row[i + window];
    }
}

MlpParams mlp_train_layer(std::size_t j, const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const MlpHyper& hp,
                          std::uint64_t seed) {
    hp.validate();
    MlpParams p = MlpParams::init(X.rows(), hp.hidden, seed);
    Eigen::VectorXd flat = p.flatten();
    nn::AdamMoments moments = nn::AdamMoments::zeros(flat.size());
    for (int epoch = 1; epoch <= hp.epochs; ++epoch) {
        MlpLossGrad lg = mlp_loss_grad(p, X, y);
        if (!std::isfinite(lg.loss) || !lg.grads.allFinite()) {
            throw DivergenceError("mlp layer " + std::to_string(j) + " diverged at epoch " + std::to_string(epoch));
        }
        nn::clip_global_norm(lg.grads, hp.clip_norm);
        nn::adam_step(flat, lg.grads, moments, hp.lr, epoch);
        p.unflatten(flat);
    }
    return p;
}

Eigen::VectorXd mlp_train_predict(const LayeredSeries& series, const WindowSpec& w, const MlpHyper& hp,
                                  std::uint64_t seed) {
    hp.validate();
    const Eigen::MatrixXd train = split_train(series, w);
    if (hp.window >= train.cols()) {
        throw WindowError("mlp window " + std::to_string(hp.window) + " must be shorter than the " +
                          std::to_string(train.cols()) + "-month training window");
    }
    const NormParams norm = fit_norm(train);
    const Eigen::MatrixXd normalized = apply_norm(train, norm);
    Eigen::VectorXd out(train.rows());
    for (Eigen::Index j = 0; j < train.rows(); ++j) {
        Eigen::MatrixXd X;
        Eigen::VectorXd y;
        mlp_windows(normalized.row(j), hp.window, X, y);
        const auto layer = static_cast<std::size_t>(j);
        const MlpParams p = mlp_train_layer(layer, X, y, hp, nn::derive_seed(seed, layer));
        const Eigen::VectorXd last = normalized.row(j).tail(hp.window).transpose();
        out[j] = norm.denormalize(j, mlp_forward(p, last));
    }
    return out;
}

}  // namespace sspred
