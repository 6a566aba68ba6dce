#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include <Eigen/Dense>

#include "sspred/hlstm.hpp"
#include "sspred/ssp_core.hpp"

namespace sspred {

enum class MeanMode { same_month, all_months };

std::string mean_mode_name(MeanMode m);
MeanMode parse_mean_mode(const std::string& s);

/// Per-layer mean of the training window. same_month averages only the
/// columns at the target's position in the cycle.
Eigen::VectorXd mean_predict(const LayeredSeries& series, const WindowSpec& w, MeanMode mode = MeanMode::same_month);

/// Polynomial in scaled depth z / depth_scale, so every basis value lies in [0,1].
struct PolyFit {
    int degree = 0;
    Eigen::VectorXd coefficients;  // a_0 .. a_degree
    double depth_scale = 1.0;

    double evaluate(double depth_m) const;
    Eigen::VectorXd evaluate(const DepthSchedule& sched) const;
};

/// Vandermonde matrix of the scaled schedule depths, J x (degree + 1).
Eigen::MatrixXd poly_design(const DepthSchedule& sched, int degree);

/// Least squares through a column-pivoting QR. Requires 1 <= degree <= J - 1.
PolyFit poly_fit(const Eigen::VectorXd& profile, const DepthSchedule& sched, int degree);

/// Fits the time-mean profile of the window and evaluates it on the schedule.
Eigen::VectorXd poly_predict(const LayeredSeries& series, const WindowSpec& w, int degree = 8);

struct MlpHyper {
    int window = 12;
    int hidden = 32;
    double lr = 0.01;
    int epochs = 500;
    double clip_norm = 5.0;

    void validate() const;
};

/// One hidden tanh layer, linear scalar output.
struct MlpParams {
    Eigen::MatrixXd W1;  // H x L
    Eigen::VectorXd b1;
    Eigen::VectorXd w2;  // H
    double b2 = 0.0;

    Eigen::Index window() const { return W1.cols(); }
    Eigen::Index hidden() const { return W1.rows(); }
    Eigen::Index param_count() const { return W1.size() + b1.size() + w2.size() + 1; }
    Eigen::VectorXd flatten() const;
    void unflatten(const Eigen::VectorXd& flat);
    /// Throws DimensionError on inconsistent shapes, ValidationError on non-finite values.
    void validate() const;

    static MlpParams init(Eigen::Index window, Eigen::Index hidden, std::uint64_t seed);
};

double mlp_forward(const MlpParams& p, const Eigen::VectorXd& x);

struct MlpLossGrad {
    double loss = 0.0;
    Eigen::VectorXd grads;  // flattened like MlpParams::flatten
};

/// Mean squared error over the columns of X (L x m) and its exact gradient.
MlpLossGrad mlp_loss_grad(const MlpParams& p, const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

/// Sliding windows over one normalized row: inputs are L consecutive months, target the next one.
void mlp_windows(const Eigen::RowVectorXd& row, int window, Eigen::MatrixXd& X, Eigen::VectorXd& y);

MlpParams mlp_train_layer(std::size_t j, const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const MlpHyper& hp,
                          std::uint64_t seed);

/// Trains one network per layer on the normalized window and predicts the
/// target month from the last L observed months.
Eigen::VectorXd mlp_train_predict(const LayeredSeries& series, const WindowSpec& w, const MlpHyper& hp,
                                  std::uint64_t seed);

}  // namespace sspred
